"""Weighted Clement quasi-interpolation between nested spaces.

The operator maps a fine P1 function v to the coarse P1 function
I_H v = sum_z v_z Phi_z with v_z = (v, Phi_z) / (1, Phi_z), summing over
interior coarse nodes z. Its kernel within the fine space is the fine-scale
space: v is in the kernel exactly when C v = 0, where C is the pairing
matrix C[z, j] = (phi_j, Phi_z). That matrix is the single source of truth
for kernel membership everywhere else in the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from .assembly import assemble_mass
from .mesh import MeshHierarchy

__all__ = ["ClementOperator", "build_clement", "clement_interpolate", "prolongate"]


@dataclass(eq=False)
class ClementOperator:
    """Assembled weighted Clement interpolation data.

    node_weights[z] = (1, Phi_z), positive for every interior coarse node.
    pairing is the (coarse interior) x (fine interior) matrix of L2 products
    (phi_j, Phi_z); both use the exact degree-4 quadrature (the integrands
    are quadratic).
    """

    hierarchy: MeshHierarchy
    node_weights: np.ndarray
    pairing: csr_matrix


def build_clement(hierarchy: MeshHierarchy) -> ClementOperator:
    """Assemble node weights and the fine-coarse pairing matrix."""
    coarse, fine = hierarchy.coarse, hierarchy.fine
    # (1, Phi_z): hats sum to one, so row sums of the full coarse mass
    m_full = assemble_mass(coarse, full=True)
    weights = np.asarray(m_full.sum(axis=1)).ravel()[coarse.interior_nodes]
    # (phi_j, Phi_z): coarse hats have exact fine nodal representations
    m_int = assemble_mass(fine)
    pairing = csr_matrix((m_int @ hierarchy.prolongation).T)
    return ClementOperator(hierarchy, weights, pairing)


def clement_interpolate(op: ClementOperator, v: np.ndarray) -> np.ndarray:
    """Coarse interior coefficients of I_H v for fine interior coefficients v."""
    v = np.asarray(v, dtype=float)
    if v.shape != (op.hierarchy.fine.n_interior,):
        raise ValueError(f"expected {op.hierarchy.fine.n_interior} fine coefficients")
    return (op.pairing @ v) / op.node_weights


def prolongate(hierarchy: MeshHierarchy, v_coarse: np.ndarray) -> np.ndarray:
    """Fine interior coefficients of a coarse P1 function (exact embedding)."""
    v_coarse = np.asarray(v_coarse, dtype=float)
    if v_coarse.shape != (hierarchy.coarse.n_interior,):
        raise ValueError(f"expected {hierarchy.coarse.n_interior} coarse coefficients")
    return hierarchy.prolongation @ v_coarse
