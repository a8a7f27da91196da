"""Deterministic sparse solvers: SPD systems, constrained saddle points,
and smallest generalized eigenpairs.

Symmetric operators are stored as scipy CSR matrices (or plain ndarrays
for small dense problems). Every routine is deterministic: fixed initial
guesses, fixed factorization pivoting, no randomness, so identical inputs
give bit-identical outputs across runs.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import eigh
from scipy.sparse import bmat, csc_matrix, issparse
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh, splu

__all__ = ["SolverError", "solve_spd", "solve_constrained", "smallest_eigenpair"]

# dense eigensolver path below this size; sparse iteration above
_DENSE_EIG_LIMIT = 512
# hand the pencil to Lanczos after this many single-vector steps
_POWER_CAP = 50


class SolverError(RuntimeError):
    """A solver failed to meet its tolerance. Carries diagnostics."""

    def __init__(self, message, **info):
        super().__init__(message)
        self.info = info


def _matvec(A, x):
    return A @ x


def solve_spd(A, rhs, tol: float = 1e-12) -> np.ndarray:
    """Solve A x = rhs for symmetric positive definite A.

    Preconditioned conjugate gradients with diagonal (Jacobi) scaling,
    zero initial guess, iteration cap 50 * n. Convergence means
    ||A x - rhs|| <= tol * ||rhs||; a zero right-hand side returns zeros.

    Raises
    ------
    SolverError
        If the residual target is not met within the iteration cap.
    """
    n = A.shape[0]
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (n,):
        raise ValueError(f"rhs shape {rhs.shape} does not match n={n}")
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return np.zeros(n)

    diag = A.diagonal() if issparse(A) else np.diagonal(A).copy()
    if np.any(diag <= 0):
        raise SolverError("matrix has nonpositive diagonal, not SPD")
    inv_diag = 1.0 / diag

    x = np.zeros(n)
    r = rhs.copy()
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    cap = 50 * n
    for _ in range(cap):
        Ap = _matvec(A, p)
        pAp = p @ Ap
        if pAp <= 0:
            raise SolverError("matrix is not positive definite", curvature=pAp)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            return x
        z = inv_diag * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    resid = np.linalg.norm(_matvec(A, x) - rhs) / bnorm
    raise SolverError(
        f"PCG did not converge in {cap} iterations (relative residual {resid:.3e})",
        residual=resid,
    )


def solve_constrained(K, C, f, tol: float = 1e-12) -> np.ndarray:
    """Minimize 1/2 x^T K x - f^T x subject to C x = 0.

    Solves the saddle-point system [[K, C^T], [C, 0]] [x; mu] = [f; 0] by a
    sparse direct factorization, with one step of iterative refinement.
    Returns x only. An empty constraint matrix reduces to solve_spd.

    Raises
    ------
    SolverError
        On rank-deficient constraints (singular factorization) or if the
        residual contracts ||K x + C^T mu - f|| <= tol * ||f|| and
        ||C x||_inf <= 1e-10 * ||x||_2 cannot be met.
    """
    n = K.shape[0]
    f = np.asarray(f, dtype=float)
    m = C.shape[0]
    if m == 0:
        return solve_spd(K, f, tol=tol)
    if C.shape[1] != n:
        raise ValueError(f"constraint width {C.shape[1]} does not match n={n}")

    kkt = csc_matrix(bmat([[K, C.T], [C, None]], format="csc"))
    try:
        lu = splu(kkt)
    except RuntimeError as exc:  # singular factor: rank-deficient C
        raise SolverError(f"saddle-point factorization failed: {exc}") from exc

    rhs = np.concatenate([f, np.zeros(m)])
    sol = lu.solve(rhs)
    if not np.all(np.isfinite(sol)):
        raise SolverError("saddle-point solve produced non-finite values")
    # one refinement step tightens large systems to machine level
    resid = rhs - kkt @ sol
    sol = sol + lu.solve(resid)

    x, mu = sol[:n], sol[n:]
    fnorm = np.linalg.norm(f)
    stat = np.linalg.norm(K @ x + C.T @ mu - f)
    feas = np.linalg.norm(C @ x, ord=np.inf)
    xnorm = np.linalg.norm(x)
    if fnorm > 0 and stat > tol * fnorm:
        raise SolverError(
            f"stationarity residual {stat:.3e} exceeds {tol:.1e} * ||f||",
            residual=stat / fnorm,
        )
    if feas > 1e-10 * max(xnorm, 1e-300):
        raise SolverError(
            f"constraint violation {feas:.3e} exceeds 1e-10 * ||x||",
            violation=feas,
        )
    return x


def _sign_fix(v: np.ndarray) -> np.ndarray:
    """Flip so the largest-magnitude entry is positive."""
    j = int(np.argmax(np.abs(v)))
    return -v if v[j] < 0 else v


def smallest_eigenpair(K, M, tol: float = 1e-12, max_iter: int = 500, x0=None):
    """Smallest generalized eigenpair K v = lambda M v, K and M SPD.

    Returns (lambda, v) with v M-normalized and its largest-magnitude entry
    positive. Dense inputs, and sparse ones of size at most 512, go through
    a direct symmetric eigensolver. Larger sparse pencils factor K once
    (zero shift) and run inverse power iteration from x0 or the all-ones
    vector; warm starts typically finish in a handful of steps. When the
    lowest eigenvalues cluster the single-vector rate degrades, so after a
    short budget the same factorization is handed to shift-invert Lanczos,
    which resolves clusters. Convergence: ||K v - lambda M v|| <= tol * ||K v||,
    relaxed to the attainable roundoff floor when the residual stagnates
    there with a settled Rayleigh quotient.

    Raises
    ------
    SolverError
        If neither stage converges; carries the last Rayleigh quotient.
    """
    n = K.shape[0]
    dense_input = not issparse(K)
    if dense_input or n <= _DENSE_EIG_LIMIT:
        Kd = np.asarray(K.todense()) if issparse(K) else np.asarray(K, dtype=float)
        Md = np.asarray(M.todense()) if issparse(M) else np.asarray(M, dtype=float)
        w, V = eigh(Kd, Md, subset_by_index=(0, 0))
        lam = float(w[0])
        v = V[:, 0]
        v = v / np.sqrt(v @ (Md @ v))
        v = _sign_fix(v)
        _check_eig_residual(K, M, lam, v, tol)
        return lam, v

    lu = splu(csc_matrix(K))
    if x0 is None:
        x = np.ones(n)
    else:
        x = np.asarray(x0, dtype=float).copy()
        if not np.any(x):
            x = np.ones(n)
    x /= np.sqrt(x @ (M @ x))
    lam = float(x @ (K @ x))
    floor = np.sqrt(np.finfo(float).eps)
    # the relative residual cannot contract below roughly cond(K) * eps;
    # accept a stagnating iterate once it is clearly at that floor
    best_rel = np.inf
    prev_rel = np.inf
    stale = 0
    for it in range(min(max_iter, _POWER_CAP)):
        y = lu.solve(M @ x)
        y /= np.sqrt(y @ (M @ y))
        lam_new = float(y @ (K @ y))
        rel = np.linalg.norm(K @ y - lam_new * (M @ y)) / np.linalg.norm(K @ y)
        rayleigh_settled = abs(lam_new - lam) <= 1e-15 * abs(lam_new)
        lam = lam_new
        x = y
        if rel <= tol:
            return lam, _sign_fix(x)
        if rel < 0.9 * best_rel:
            best_rel = rel
            stale = 0
        else:
            stale += 1
            if stale >= 5 and rayleigh_settled and rel <= floor:
                return lam, _sign_fix(x)
        # contraction near 1 with the residual still far out means a
        # clustered pencil: stop burning solves and switch methods
        if it >= 9 and rel > 100.0 * tol and rel > 0.8 * prev_rel:
            break
        prev_rel = rel

    opinv = LinearOperator((n, n), matvec=lu.solve, dtype=float)
    try:
        w, V = eigsh(
            K,
            k=1,
            M=M,
            sigma=0.0,
            which="LM",
            v0=x,
            tol=0,
            OPinv=opinv,
            maxiter=max(1, max_iter),
        )
    except ArpackNoConvergence as exc:
        raise SolverError(
            f"eigensolver did not converge within {max_iter} iterations",
            rayleigh=lam,
        ) from exc
    lam = float(w[0])
    v = V[:, 0]
    v = v / np.sqrt(v @ (M @ v))
    rel = np.linalg.norm(K @ v - lam * (M @ v)) / np.linalg.norm(K @ v)
    if not np.isfinite(rel) or rel > max(tol, floor):
        raise SolverError(
            f"eigenpair residual {rel:.3e} stayed above the roundoff floor",
            rayleigh=lam,
        )
    return lam, _sign_fix(v)


def _check_eig_residual(K, M, lam, v, tol):
    res = np.linalg.norm(K @ v - lam * (M @ v))
    ref = np.linalg.norm(K @ v)
    # direct solves sit at machine level; guard against silent breakage
    if ref > 0 and res > max(tol, 1e-9) * ref:
        raise SolverError(
            f"eigenpair residual {res:.3e} exceeds tolerance", rayleigh=lam
        )
