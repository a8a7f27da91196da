import numpy as np
import pytest
import scipy.sparse as sp

from gpelod.assembly import assemble_bilinear, assemble_mass, ProblemSpec, PotentialSpec
from gpelod.linalg import SolverError, smallest_eigenpair, solve_constrained, solve_spd
from gpelod.mesh import build_uniform_mesh


def _random_spd(rng, n, density=0.2):
    A = sp.random(n, n, density=density, random_state=np.random.RandomState(rng.integers(1 << 31)))
    A = A + A.T + n * sp.eye(n)
    return A.tocsr()


def test_solve_spd_matches_dense():
    rng = np.random.default_rng(3)
    for n in (5, 40, 120):
        A = _random_spd(rng, n)
        x_true = rng.standard_normal(n)
        rhs = A @ x_true
        x = solve_spd(A, rhs, tol=1e-13)
        assert np.linalg.norm(x - x_true) <= 1e-9 * np.linalg.norm(x_true)


def test_solve_spd_zero_rhs():
    A = sp.eye(7, format="csr")
    assert np.array_equal(solve_spd(A, np.zeros(7)), np.zeros(7))


def test_solve_spd_dense_input():
    rng = np.random.default_rng(5)
    B = rng.standard_normal((12, 12))
    A = B @ B.T + 12 * np.eye(12)
    rhs = rng.standard_normal(12)
    x = solve_spd(A, rhs)
    assert np.linalg.norm(A @ x - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_solve_spd_rejects_nonpositive_diagonal():
    A = sp.diags([1.0, -1.0, 2.0]).tocsr()
    with pytest.raises(SolverError):
        solve_spd(A, np.ones(3))


def test_solve_constrained_kkt_identity():
    # solution must be stationary and exactly feasible; verify against a
    # dense KKT solve
    rng = np.random.default_rng(11)
    for n, m in ((10, 3), (50, 7)):
        A = _random_spd(rng, n)
        C = sp.csr_matrix(rng.standard_normal((m, n)))
        f = rng.standard_normal(n)
        x = solve_constrained(A, C, f)

        kkt = np.block(
            [[A.toarray(), C.toarray().T], [C.toarray(), np.zeros((m, m))]]
        )
        sol = np.linalg.solve(kkt, np.concatenate([f, np.zeros(m)]))
        assert np.allclose(x, sol[:n], atol=1e-9)
        assert np.linalg.norm(C @ x, np.inf) <= 1e-10 * np.linalg.norm(x)


def test_solve_constrained_empty_constraints():
    rng = np.random.default_rng(2)
    A = _random_spd(rng, 9)
    f = rng.standard_normal(9)
    C = sp.csr_matrix((0, 9))
    x = solve_constrained(A, C, f)
    assert np.linalg.norm(A @ x - f) <= 1e-9 * np.linalg.norm(f)


def test_solve_constrained_rank_deficient():
    rng = np.random.default_rng(8)
    A = _random_spd(rng, 6)
    row = rng.standard_normal(6)
    C = sp.csr_matrix(np.vstack([row, row]))  # duplicated constraint
    with pytest.raises(SolverError):
        solve_constrained(A, C, rng.standard_normal(6))


def _closed_form_1d(level):
    # P1 on (0, pi): K = tridiag(-1, 2, -1)/h, M = h/6 tridiag(1, 4, 1);
    # the vector sin(j i h) is an exact eigenvector for every mode j.
    # 1 - cos h is written as 2 sin^2(h/2) to dodge cancellation at small h.
    h = np.pi / 2**level
    return (12.0 / h**2) * np.sin(h / 2.0) ** 2 / (2.0 + np.cos(h))


def test_smallest_eigenpair_dense_path():
    spec = ProblemSpec(potential=PotentialSpec.zero(), beta=0.0)
    mesh = build_uniform_mesh(1, 5)  # 31 dofs, dense route
    K = assemble_bilinear(mesh, spec)
    M = assemble_mass(mesh)
    lam, v = smallest_eigenpair(K, M)
    assert lam == pytest.approx(_closed_form_1d(5), rel=1e-13)
    # eigenvector sign convention: largest-magnitude entry positive
    assert v[np.argmax(np.abs(v))] > 0
    # M-normalized
    assert v @ (M @ v) == pytest.approx(1.0, abs=1e-12)


def test_smallest_eigenpair_sparse_path():
    spec = ProblemSpec(potential=PotentialSpec.zero(), beta=0.0)
    mesh = build_uniform_mesh(1, 10)  # 1023 dofs, inverse-power route
    K = assemble_bilinear(mesh, spec)
    M = assemble_mass(mesh)
    lam, v = smallest_eigenpair(K, M)
    # the Rayleigh quotient converges quadratically in the eigenvector
    # residual, so lambda is machine-accurate even at the residual floor
    assert lam == pytest.approx(_closed_form_1d(10), rel=1e-12)
    res = K @ v - lam * (M @ v)
    assert np.linalg.norm(res) <= 1e-8 * np.linalg.norm(K @ v)


def test_smallest_eigenpair_warm_start():
    spec = ProblemSpec(potential=PotentialSpec.harmonic(), beta=0.0)
    mesh = build_uniform_mesh(2, 5)  # 961 dofs, sparse route
    K = assemble_bilinear(mesh, spec)
    M = assemble_mass(mesh)
    lam0, v0 = smallest_eigenpair(K, M)
    lam1, v1 = smallest_eigenpair(K, M, x0=v0)
    assert lam1 == pytest.approx(lam0, rel=1e-12)
    assert np.allclose(v1, v0, atol=1e-8)


def test_smallest_eigenpair_2d_linear():
    # -lap u = lam u on (0,pi)^2 has smallest eigenvalue 2; the discrete one
    # converges from above at order h^2
    spec = ProblemSpec(potential=PotentialSpec.zero(), beta=0.0)
    gaps = []
    for level in (3, 4):
        mesh = build_uniform_mesh(2, level)
        K = assemble_bilinear(mesh, spec)
        M = assemble_mass(mesh)
        lam, _ = smallest_eigenpair(K, M)
        gaps.append(lam - 2.0)
    assert gaps[0] > gaps[1] > 0
    assert gaps[0] / gaps[1] == pytest.approx(4.0, rel=0.1)


def test_smallest_eigenpair_clustered_spectrum():
    # deep periodic wells make the lowest band nearly degenerate (relative
    # gap about 2e-2), which stalls plain inverse power; the Lanczos stage
    # must still deliver the pair. Cross-check against a dense solve.
    spec = ProblemSpec(potential=PotentialSpec.periodic_wells(100.0, 4), beta=0.0)
    mesh = build_uniform_mesh(2, 5)  # 961 dofs, sparse route
    K = assemble_bilinear(mesh, spec)
    M = assemble_mass(mesh)
    lam, v = smallest_eigenpair(K, M)

    import scipy.linalg

    w = scipy.linalg.eigh(
        K.toarray(), M.toarray(), subset_by_index=(0, 1), eigvals_only=True
    )
    assert (w[1] - w[0]) / w[0] < 0.05  # the pencil really is clustered
    assert lam == pytest.approx(w[0], rel=1e-11)
    res = K @ v - lam * (M @ v)
    assert np.linalg.norm(res) <= 1e-7 * np.linalg.norm(K @ v)
    assert v @ (M @ v) == pytest.approx(1.0, abs=1e-10)

    lam2, v2 = smallest_eigenpair(K, M)  # deterministic: bit-identical rerun
    assert lam2 == lam
    assert np.array_equal(v2, v)


def test_eigenpair_failure_raises(monkeypatch):
    import gpelod.linalg as linalg

    def no_convergence(*args, **kwargs):
        raise sp.linalg.ArpackNoConvergence("stalled", np.array([]), np.array([]))

    monkeypatch.setattr(linalg, "eigsh", no_convergence)
    spec = ProblemSpec(potential=PotentialSpec.zero(), beta=0.0)
    mesh = build_uniform_mesh(1, 10)
    K = assemble_bilinear(mesh, spec)
    M = assemble_mass(mesh)
    with pytest.raises(SolverError) as err:
        smallest_eigenpair(K, M, tol=1e-16, max_iter=12)
    assert "rayleigh" in err.value.info
