"""Ground states of Gross-Pitaevskii energies by optimal damping.

A discrete space (the fine P1 space or an LOD coarse space) exposes its
stiffness and mass operators plus a lift onto the fine mesh. The optimal
damping iteration relaxes the minimization to density mixtures: each step
solves the linear eigenproblem at the current density, then mixes the new
pure density in with the exactly optimal weight for the (quadratic) energy.
Energies decrease monotonically. The returned state is the pure eigenstate
of the final iteration, L2-normalized and sign-fixed.

Post-processing lifts a coarse ground state to the fine mesh by one linear
solve against the fine a-matrix. The discrete fine ground state is a fixed
point of this map.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .assembly import (
    ProblemSpec,
    assemble_bilinear,
    assemble_density_mass,
    assemble_load,
    assemble_mass,
    energy as gpe_energy,
    lambda_from_state,
    p1_values,
    pair_integral,
)
from .linalg import SolverError, smallest_eigenpair, solve_spd
from .lod import CoarseSpaceBasis, coarse_operator
from .mesh import Mesh, MeshHierarchy

__all__ = ["FineSpace", "LodSpace", "GroundState", "oda_minimize", "postprocess"]


class FineSpace:
    """The full fine P1 space; the lift map is the identity."""

    def __init__(self, mesh: Mesh, spec: ProblemSpec):
        self.mesh = mesh
        self.spec = spec
        self.stiffness = assemble_bilinear(mesh, spec)
        self.mass = assemble_mass(mesh)

    @property
    def dimension(self) -> int:
        return self.mesh.n_interior

    @property
    def fine_mesh(self) -> Mesh:
        return self.mesh

    def lift(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float)

    def restrict_operator(self, a_interior):
        return a_interior


class LodSpace:
    """An LOD coarse space spanned by corrected hat functions."""

    def __init__(self, basis: CoarseSpaceBasis, spec: ProblemSpec):
        self.basis = basis
        self.spec = spec
        fine = basis.hierarchy.fine
        self.stiffness = coarse_operator(basis, assemble_bilinear(fine, spec))
        self.mass = coarse_operator(basis, assemble_mass(fine))

    @property
    def dimension(self) -> int:
        return self.basis.basis.shape[1]

    @property
    def fine_mesh(self) -> Mesh:
        return self.basis.hierarchy.fine

    def lift(self, x: np.ndarray) -> np.ndarray:
        return self.basis.basis @ np.asarray(x, dtype=float)

    def restrict_operator(self, a_interior):
        return coarse_operator(self.basis, a_interior)


@dataclass(eq=False)
class GroundState:
    """A computed ground state.

    coefficients live in the solving space's coordinates and
    fine_coefficients on the fine mesh. energy_trace holds the energy after
    initialization and after each damping iteration; residual is the final
    damping-segment slope (zero at a stationary point). Post-processed
    states are unnormalized (normalized=False) and carry a normalized copy
    separately.
    """

    coefficients: np.ndarray
    fine_coefficients: np.ndarray
    eigenvalue: float
    energy: float
    iterations: int
    energy_trace: np.ndarray
    residual: float
    normalized: bool = True
    normalized_coefficients: np.ndarray | None = None


def _density(mesh: Mesh, fine_coeffs: np.ndarray) -> np.ndarray:
    vals = p1_values(mesh, mesh.pad(fine_coeffs))
    return vals * vals


def _check_exit_state(space, spec, state: GroundState, H_final, eps: float):
    """Invariants every converged normalized state must satisfy."""
    mesh = space.fine_mesh
    x = state.coefficients
    M = space.mass
    nrm = float(x @ (M @ x))
    if abs(nrm - 1.0) > 1e-10:
        raise SolverError(f"exit state is not normalized: ||u||^2 = {nrm}")
    dens = _density(mesh, state.fine_coefficients)
    u4 = pair_integral(mesh, dens, dens)
    ident = state.eigenvalue - 2.0 * state.energy - 0.5 * spec.beta * u4
    if abs(ident) > 1e-10:
        raise SolverError(f"eigenvalue identity violated by {ident:.3e}")
    trace = state.energy_trace
    if np.any(np.diff(trace) > 1e-12):
        raise SolverError("energy trace is not nonincreasing")
    if spec.beta > 0 and not state.eigenvalue < 4.0 * state.energy:
        raise SolverError("lambda < 4 E violated")
    res = np.linalg.norm(H_final @ x - state.eigenvalue * (M @ x))
    res_tol = 1e-6 * np.sqrt(max(eps, 1e-300) / 1e-14)
    scale = max(1.0, float(np.linalg.norm(state.eigenvalue * (M @ x))))
    if res > res_tol * scale:
        raise SolverError(f"stationarity residual {res:.3e} exceeds {res_tol:.1e}")
    ufull = mesh.pad(state.fine_coefficients)
    if ufull.max() > 0 and ufull.min() < -1e-6 * ufull.max():
        warnings.warn(
            f"ground state has negative nodal values down to {ufull.min():.3e}",
            RuntimeWarning,
            stacklevel=3,
        )


def oda_minimize(
    space, spec: ProblemSpec, eps: float = 1e-14, max_iter: int = 10000
) -> GroundState:
    """Minimize the Gross-Pitaevskii energy over the space by optimal damping.

    Starts from the linear (beta = 0) ground state. Each iteration solves
    the eigenproblem linearized at the current mixed density and takes the
    exact quadratic-model line search step toward the new pure density.
    Iteration continues until the energy decrement drops to eps and the
    density self-consistency increment either reaches the roundoff floor or
    stagnates; the energy alone is too flat near the minimizer to certify
    a stationary state. When the line-search slope itself drowns in roundoff
    the step degenerates to zero, so polish iterations substitute the pure
    density outright instead of freezing short of the fixed point.

    Raises
    ------
    linalg.SolverError
        On iteration cap (carries the energy trace) or invariant violation.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    mesh = space.fine_mesh
    K = space.stiffness
    M = space.mass
    beta = spec.beta

    mu, x = smallest_eigenpair(K, M)
    rho = _density(mesh, space.lift(x))
    T = float(x @ (K @ x))
    energy_now = 0.5 * T + 0.25 * beta * pair_integral(mesh, rho, rho)
    trace = [energy_now]

    H = K
    slope = 0.0
    iterations = 0
    polishing = False
    best_incr = np.inf
    stale = 0
    converged = False
    for n in range(1, max_iter + 1):
        if beta > 0:
            m_rho = space.restrict_operator(assemble_density_mass(mesh, rho))
            H = K + beta * m_rho
        else:
            H = K
        mu, x = smallest_eigenpair(H, M, x0=x)
        rho_new = _density(mesh, space.lift(x))
        T_new = float(x @ (K @ x))
        d_rho = rho_new - rho
        cross = pair_integral(mesh, rho, d_rho)
        q = 0.5 * beta * pair_integral(mesh, d_rho, d_rho)
        s = (T_new - T) + beta * cross
        incr = float(np.sqrt(pair_integral(mesh, d_rho, d_rho)))
        t = 1.0 if q <= 0.0 else min(1.0, max(0.0, -s / (2.0 * q)))
        if polishing and t == 0.0:
            # once the model slope s drowns in roundoff the damped step
            # degenerates to zero and the mixed density freezes a fixed gap
            # away from the pure one; substituting the pure density lets the
            # self-consistent contraction close that gap to the floor
            t = 1.0

        rho = (1.0 - t) * rho + t * rho_new
        T = (1.0 - t) * T + t * T_new
        energy_prev = energy_now
        energy_now = 0.5 * T + 0.25 * beta * pair_integral(mesh, rho, rho)
        trace.append(energy_now)
        slope = s
        iterations = n

        decrement = energy_prev - energy_now
        if not polishing and abs(decrement) <= eps:
            polishing = True
        if polishing:
            self_tol = 1e-11 * max(1.0, float(np.sqrt(pair_integral(mesh, rho, rho))))
            if incr <= self_tol:
                converged = True
                break
            if incr < 0.999 * best_incr:
                best_incr = incr
                stale = 0
            else:
                stale += 1
                if stale >= 50:
                    converged = True
                    break
            best_incr = min(best_incr, incr)

    if not converged:
        err = SolverError(
            f"optimal damping did not converge within {max_iter} iterations"
        )
        err.info["energy_trace"] = np.array(trace)
        raise err

    # pure exit state: the eigenvector of the final linearization
    x = x / np.sqrt(float(x @ (M @ x)))
    fine_x = space.lift(x)
    j = int(np.argmax(np.abs(fine_x)))
    if fine_x[j] < 0:
        x = -x
        fine_x = -fine_x
    E = gpe_energy(spec, mesh, fine_x)
    lam = lambda_from_state(spec, mesh, fine_x)
    state = GroundState(
        coefficients=x,
        fine_coefficients=fine_x,
        eigenvalue=lam,
        energy=E,
        iterations=iterations,
        energy_trace=np.array(trace),
        residual=abs(slope),
    )
    if beta > 0:
        m_rho = space.restrict_operator(assemble_density_mass(mesh, _density(mesh, fine_x)))
        H_final = K + beta * m_rho
    else:
        H_final = K
    _check_exit_state(space, spec, state, H_final, eps)
    return state


def postprocess(
    hierarchy: MeshHierarchy, spec: ProblemSpec, coarse: GroundState, tol: float = 1e-12
) -> GroundState:
    """Two-grid refinement: one fine linear solve driven by a coarse state.

    Solves a(u, phi) = lam_c (u_c, phi) - beta (|u_c|^2 u_c, phi) over the
    fine space, where (u_c, lam_c) is the coarse ground state lifted to the
    fine mesh. Returns the raw (unnormalized) solution, whose eigenvalue
    uses the normalization-corrected formula, together with a normalized
    copy in normalized_coefficients.
    """
    if not coarse.normalized:
        raise ValueError("postprocess expects a normalized coarse state")
    mesh = hierarchy.fine
    u_c = np.asarray(coarse.fine_coefficients, dtype=float)
    if u_c.shape != (mesh.n_interior,):
        raise ValueError("coarse state does not live on the hierarchy's fine mesh")

    K = assemble_bilinear(mesh, spec)
    vals = p1_values(mesh, mesh.pad(u_c))
    fq = coarse.eigenvalue * vals - spec.beta * vals**3
    rhs = assemble_load(mesh, fq)
    u = solve_spd(K, rhs, tol=tol)

    M = assemble_mass(mesh)
    nrm = float(np.sqrt(u @ (M @ u)))
    if nrm == 0.0:
        raise SolverError("post-processing produced the zero state")
    lam = lambda_from_state(spec, mesh, u)
    E = gpe_energy(spec, mesh, u)
    return GroundState(
        coefficients=u,
        fine_coefficients=u,
        eigenvalue=lam,
        energy=E,
        iterations=coarse.iterations,
        energy_trace=np.array([]),
        residual=0.0,
        normalized=False,
        normalized_coefficients=u / nrm,
    )
