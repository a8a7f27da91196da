"""Localized orthogonal decomposition of the fine P1 space.

Every coarse hat Phi_z gets a corrector Psi_z: the a-orthogonal projection
of Phi_z onto the kernel of the Clement interpolation, localized to a
k-layer element patch around z. The corrected basis Phi_z - Psi_z spans a
coarse space with fine-scale information built in; its corrector tails
decay exponentially in k, which is what makes the localization work.

Each corrector solves a saddle-point system on the patch: minimize the
a-energy distance to Phi_z over fine functions supported strictly inside
the patch, subject to zero Clement pairing against every coarse node whose
hat meets the patch. Zero pairings against all other nodes hold
structurally, so patch solutions extend by zero to global kernel functions.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csc_matrix, csr_matrix

from .assembly import ProblemSpec, PotentialSpec, assemble_bilinear, subset_h1_norm
from .interpolation import ClementOperator, build_clement
from .linalg import solve_constrained
from .mesh import MeshHierarchy, node_patch

__all__ = [
    "CoarseSpaceBasis",
    "DecayProfile",
    "compute_corrector",
    "build_coarse_basis",
    "coarse_operator",
    "decay_profile",
    "saturation_layers",
]


def saturation_layers(hierarchy: MeshHierarchy) -> int:
    """A layer count that makes every nodal patch cover the whole domain."""
    return 2 * hierarchy.coarse.cells_per_axis


def compute_corrector(
    hierarchy: MeshHierarchy,
    a_matrix: csr_matrix,
    clement: ClementOperator,
    z: int,
    k: int,
) -> np.ndarray:
    """Localized corrector of the coarse hat at interior vertex z.

    Returns fine interior coefficients; entries outside the k-layer patch
    are exact zeros. a_matrix is the fine interior a-matrix the corrector
    is orthogonal with respect to.
    """
    fine = hierarchy.fine
    patch = node_patch(hierarchy, z, k)
    out = np.zeros(fine.n_interior)
    if hierarchy.coarse.level == hierarchy.fine.level:
        # kernel of the pairing within the coarse space is trivial
        return out

    col = hierarchy.coarse.interior_pos[z]
    hat = np.asarray(hierarchy.prolongation[:, col].todense()).ravel()
    rhs = (a_matrix @ hat)[patch.fine_dofs]

    K_loc = a_matrix[patch.fine_dofs][:, patch.fine_dofs]
    C_loc = csr_matrix(clement.pairing[patch.constrained_coarse_nodes][:, patch.fine_dofs])
    # rows with no support on the patch interior are vacuously satisfied
    keep = np.diff(C_loc.indptr) > 0
    C_loc = C_loc[np.flatnonzero(keep)]

    out[patch.fine_dofs] = solve_constrained(K_loc, C_loc, rhs)
    return out


@dataclass(eq=False)
class CoarseSpaceBasis:
    """Corrected coarse basis B = prolongation - correctors (column per node).

    basis and correctors are (fine interior) x (coarse interior) CSC
    matrices; column z of correctors vanishes outside the k-layer patch of z.
    """

    hierarchy: MeshHierarchy
    k: int
    basis: csc_matrix
    correctors: csc_matrix
    drop_potential: bool = False


def build_coarse_basis(
    hierarchy: MeshHierarchy,
    spec: ProblemSpec,
    k: int,
    drop_potential: bool = False,
    threads: int = 0,
) -> CoarseSpaceBasis:
    """Compute all correctors and assemble the corrected coarse basis.

    The corrector bilinear form includes the potential term unless
    drop_potential is set (the diffusion-only variant). threads > 0 solves
    corrector problems in a thread pool; results are identical to serial.
    """
    fine, coarse = hierarchy.fine, hierarchy.coarse
    corr_spec = spec
    if drop_potential:
        corr_spec = ProblemSpec(
            potential=PotentialSpec.zero(), beta=spec.beta, diffusion=spec.diffusion
        )
    a_matrix = assemble_bilinear(fine, corr_spec)
    clement = build_clement(hierarchy)
    nodes = coarse.interior_nodes

    def column(z):
        return compute_corrector(hierarchy, a_matrix, clement, int(z), k)

    if threads and threads > 0:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cols = list(pool.map(column, nodes))
    else:
        cols = [column(z) for z in nodes]

    correctors = csc_matrix(np.column_stack(cols))
    basis = csc_matrix(hierarchy.prolongation - correctors)
    return CoarseSpaceBasis(hierarchy, int(k), basis, correctors, drop_potential)


def coarse_operator(B, S: csr_matrix) -> np.ndarray:
    """Dense symmetric coarse operator B^T S B.

    Accepts the basis matrix or a CoarseSpaceBasis. The product is
    symmetrized to remove roundoff skew.
    """
    Bm = B.basis if isinstance(B, CoarseSpaceBasis) else B
    T = (Bm.T @ (S @ Bm)).toarray()
    return 0.5 * (T + T.T)


@dataclass(eq=False)
class DecayProfile:
    """Measured corrector decay around one node.

    tail_norms[i] is the H1 norm of the global (unlocalized) corrector
    outside the (i+1)-layer patch; localization_errors[i] is the energy-norm
    distance between the global corrector and its (i+1)-layer localization.
    theta_hat is the geometric mean of consecutive tail ratios, ignoring
    tails below 1e-12 (NaN when fewer than two tails remain).
    """

    center: int
    ks: np.ndarray
    tail_norms: np.ndarray
    localization_errors: np.ndarray
    theta_hat: float


def decay_profile(
    hierarchy: MeshHierarchy, spec: ProblemSpec, z: int, k_max: int
) -> DecayProfile:
    """Measure corrector tails and localization errors for k = 1 .. k_max."""
    fine = hierarchy.fine
    a_matrix = assemble_bilinear(fine, spec)
    clement = build_clement(hierarchy)
    psi_inf = compute_corrector(
        hierarchy, a_matrix, clement, z, saturation_layers(hierarchy)
    )
    psi_inf_full = fine.pad(psi_inf)

    ks = np.arange(1, k_max + 1)
    tails = np.empty(k_max)
    errors = np.empty(k_max)
    for i, k in enumerate(ks):
        patch = node_patch(hierarchy, z, int(k))
        mask = np.zeros(hierarchy.coarse.n_elements, dtype=bool)
        mask[patch.elements] = True
        outside = ~mask[hierarchy.parent_of]
        tails[i] = subset_h1_norm(fine, psi_inf_full, outside)
        psi_k = compute_corrector(hierarchy, a_matrix, clement, z, int(k))
        d = psi_inf - psi_k
        errors[i] = np.sqrt(d @ (a_matrix @ d))

    valid = tails >= 1e-12
    ratios = []
    for i in range(k_max - 1):
        if valid[i] and valid[i + 1]:
            ratios.append(tails[i + 1] / tails[i])
    theta = float(np.exp(np.mean(np.log(ratios)))) if ratios else float("nan")
    return DecayProfile(int(z), ks, tails, errors, theta)
