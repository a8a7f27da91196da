"""Finite element operators for the Gross-Pitaevskii energy.

All integrals use one fixed quadrature rule per dimension, exact to
polynomial degree 4, which integrates every term of the P1 discretization
exactly (the quartic |u|^4 of a P1 function has degree 4). Discontinuous
potentials are sampled pointwise at the interior quadrature points; on
meshes whose element boundaries align with the discontinuities this too
is exact.

Matrices are assembled over all vertices and restricted to interior
degrees of freedom unless full=True is passed. The element loops live in
gpelod._kernels (compiled when available).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.sparse import csr_matrix

from . import _kernels
from .mesh import Mesh

__all__ = [
    "QuadRule",
    "PotentialSpec",
    "ProblemSpec",
    "quad_rule",
    "potential_eval",
    "potential_values",
    "quad_points",
    "p1_values",
    "assemble_bilinear",
    "assemble_mass",
    "assemble_density_mass",
    "assemble_load",
    "energy",
    "lambda_from_state",
    "error_norms",
    "subset_h1_norm",
]


@dataclass(frozen=True)
class QuadRule:
    """Fixed quadrature rule on the reference simplex.

    points holds barycentric coordinates (nq, dim + 1); weights sum to the
    reference measure (1 for the unit segment, 1/2 for the unit triangle).
    Since the P1 basis equals the barycentric coordinates, points doubles
    as the basis-value table phi[q, i].
    """

    dim: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def phi(self) -> np.ndarray:
        return self.points


def quad_rule(dim: int) -> QuadRule:
    """Degree-4 exact rule: 3-point Gauss per segment, 6-point per triangle."""
    if dim == 1:
        s = np.sqrt(3.0 / 5.0)
        t = np.array([0.5 * (1.0 - s), 0.5, 0.5 * (1.0 + s)])
        pts = np.column_stack([1.0 - t, t])
        w = np.array([5.0, 8.0, 5.0]) / 18.0
        return QuadRule(1, pts, w)
    if dim == 2:
        a = 0.445948490915965
        b = 0.091576213509771
        wa = 0.223381589678011 / 2.0
        wb = 0.109951743655322 / 2.0
        bary = np.array(
            [
                [a, a, 1.0 - 2.0 * a],
                [a, 1.0 - 2.0 * a, a],
                [1.0 - 2.0 * a, a, a],
                [b, b, 1.0 - 2.0 * b],
                [b, 1.0 - 2.0 * b, b],
                [1.0 - 2.0 * b, b, b],
            ]
        )
        w = np.array([wa, wa, wa, wb, wb, wb])
        return QuadRule(2, bary, w)
    raise ValueError(f"dim must be 1 or 2, got {dim}")


@dataclass(frozen=True)
class PotentialSpec:
    """Trapping potential b >= 0 on (0, pi)^d.

    kind "zero": b = 0. kind "harmonic": b(x) = sum_i x_i^2. kind
    "periodic_wells": b = 0 where every frac(L x_i / pi) lies in (1/4, 3/4)
    and b = bt elsewhere, an L-periodic array of square wells.
    """

    kind: str = "zero"
    bt: float = 0.0
    wells_per_axis: int = 1

    def __post_init__(self):
        if self.kind not in ("zero", "harmonic", "periodic_wells"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "periodic_wells":
            if self.bt < 0:
                raise ValueError(f"well depth bt must be >= 0, got {self.bt}")
            if self.wells_per_axis < 1 or int(self.wells_per_axis) != self.wells_per_axis:
                raise ValueError(
                    f"wells_per_axis must be a positive integer, got {self.wells_per_axis}"
                )

    @staticmethod
    def zero() -> "PotentialSpec":
        return PotentialSpec("zero")

    @staticmethod
    def harmonic() -> "PotentialSpec":
        return PotentialSpec("harmonic")

    @staticmethod
    def periodic_wells(bt: float, wells_per_axis: int) -> "PotentialSpec":
        return PotentialSpec("periodic_wells", bt=float(bt), wells_per_axis=int(wells_per_axis))


def potential_eval(potential: PotentialSpec, x) -> float:
    """Evaluate the potential at a single point."""
    return float(potential_values(potential, np.atleast_2d(np.asarray(x, dtype=float)))[0])


def potential_values(potential: PotentialSpec, pts: np.ndarray) -> np.ndarray:
    """Evaluate the potential at an (n, dim) array of points."""
    if potential.kind == "zero":
        return np.zeros(pts.shape[0])
    if potential.kind == "harmonic":
        return np.sum(pts * pts, axis=-1)
    frac = (potential.wells_per_axis * pts / np.pi) % 1.0
    inside = np.all((frac > 0.25) & (frac < 0.75), axis=-1)
    return np.where(inside, 0.0, potential.bt)


@dataclass(frozen=True)
class ProblemSpec:
    """Coefficients of the energy 1/2 a(u, u) + beta/4 * int |u|^4.

    a(u, v) = int A grad u . grad v + b u v with constant diffusion A > 0
    (or a callable giving per-element values at centroids) and potential b.
    """

    potential: PotentialSpec
    beta: float
    diffusion: float | Callable = 1.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if not callable(self.diffusion) and self.diffusion <= 0:
            raise ValueError(f"diffusion must be positive, got {self.diffusion}")

    def diffusion_values(self, mesh: Mesh) -> np.ndarray:
        if callable(self.diffusion):
            centroids = mesh.vertices[mesh.simplices].mean(axis=1)
            vals = np.asarray(self.diffusion(centroids), dtype=float)
            if vals.shape != (mesh.n_elements,):
                raise ValueError("diffusion callable must return one value per element")
            if np.any(vals <= 0):
                raise ValueError("diffusion values must be positive")
            return vals
        return np.full(mesh.n_elements, float(self.diffusion))


def quad_points(mesh: Mesh) -> np.ndarray:
    """Physical quadrature point coordinates, shape (n_elements, nq, dim)."""
    rule = quad_rule(mesh.dim)
    corner = mesh.vertices[mesh.simplices]  # (ne, nv, dim)
    return np.einsum("qk,ekd->eqd", rule.points, corner)


def p1_values(mesh: Mesh, u_full: np.ndarray) -> np.ndarray:
    """Values of a P1 function at the quadrature points, shape (ne, nq)."""
    rule = quad_rule(mesh.dim)
    return u_full[mesh.simplices] @ rule.phi.T


def _scatter(mesh: Mesh, entries: np.ndarray, full: bool) -> csr_matrix:
    rows, cols = mesh.assembly_index_pairs
    n = mesh.n_vertices
    A = csr_matrix((entries.ravel(), (rows, cols)), shape=(n, n))
    if full:
        return A
    idx = mesh.interior_nodes
    return A[idx][:, idx]


def assemble_bilinear(mesh: Mesh, spec: ProblemSpec, full: bool = False) -> csr_matrix:
    """Assemble the a-matrix of int A grad u . grad v + b u v.

    Returns the interior-restricted operator unless full=True. Symmetric by
    construction and positive definite on interior dofs.
    """
    rule = quad_rule(mesh.dim)
    scale = mesh.volumes * spec.diffusion_values(mesh)
    entries = _kernels.stiffness_entries(scale, np.ascontiguousarray(mesh.grads))
    if spec.potential.kind != "zero":
        pts = quad_points(mesh)
        bvals = potential_values(spec.potential, pts.reshape(-1, mesh.dim))
        bvals = np.ascontiguousarray(bvals.reshape(mesh.n_elements, -1))
        entries = entries + _kernels.mass_entries(mesh.detj, rule.weights, np.ascontiguousarray(rule.phi), bvals)
    return _scatter(mesh, entries, full)


def assemble_mass(mesh: Mesh, full: bool = False) -> csr_matrix:
    """Assemble the L2 mass matrix (interior-restricted unless full=True)."""
    rule = quad_rule(mesh.dim)
    ones = np.ones((mesh.n_elements, len(rule.weights)))
    entries = _kernels.mass_entries(mesh.detj, rule.weights, np.ascontiguousarray(rule.phi), ones)
    return _scatter(mesh, entries, full)


def assemble_density_mass(mesh: Mesh, rho: np.ndarray, full: bool = False) -> csr_matrix:
    """Assemble the rho-weighted mass matrix int rho u v.

    rho holds nonnegative density values at the quadrature points, shape
    (n_elements, nq), as produced by p1_values(...)**2 or mixtures thereof.
    """
    rule = quad_rule(mesh.dim)
    rho = np.ascontiguousarray(rho, dtype=float)
    if rho.shape != (mesh.n_elements, len(rule.weights)):
        raise ValueError(f"rho shape {rho.shape} does not match quadrature layout")
    if np.any(rho < 0):
        raise ValueError("density values must be nonnegative")
    entries = _kernels.mass_entries(mesh.detj, rule.weights, np.ascontiguousarray(rule.phi), rho)
    return _scatter(mesh, entries, full)


def assemble_load(mesh: Mesh, fvals: np.ndarray) -> np.ndarray:
    """Interior load vector (f, phi_j) for quadrature-point data fvals."""
    rule = quad_rule(mesh.dim)
    fvals = np.ascontiguousarray(fvals, dtype=float)
    contrib = _kernels.load_entries(mesh.detj, rule.weights, np.ascontiguousarray(rule.phi), fvals)
    vec = np.zeros(mesh.n_vertices)
    np.add.at(vec, mesh.simplices.ravel(), contrib.ravel())
    return vec[mesh.interior_nodes]


def pair_integral(mesh: Mesh, avals: np.ndarray, bvals: np.ndarray) -> float:
    """Integrate the product of two quadrature-point fields over the domain."""
    rule = quad_rule(mesh.dim)
    return _kernels.pair_integral(
        mesh.detj,
        rule.weights,
        np.ascontiguousarray(avals, dtype=float),
        np.ascontiguousarray(bvals, dtype=float),
    )


def quartic_integral(mesh: Mesh, u_full: np.ndarray) -> float:
    """int u^4, exact for P1 functions under the degree-4 rule."""
    rho = p1_values(mesh, u_full) ** 2
    return pair_integral(mesh, rho, rho)


def energy(spec: ProblemSpec, mesh: Mesh, u: np.ndarray) -> float:
    """Gross-Pitaevskii energy 1/2 a(u, u) + beta/4 int u^4.

    u holds interior nodal coefficients.
    """
    K = assemble_bilinear(mesh, spec)
    quad = quartic_integral(mesh, mesh.pad(u))
    return 0.5 * float(u @ (K @ u)) + 0.25 * spec.beta * quad


def lambda_from_state(spec: ProblemSpec, mesh: Mesh, u: np.ndarray) -> float:
    """Eigenvalue of a state: (2 E(u) + beta/2 ||u||_L4^4) / ||u||_L2^2.

    For L2-normalized u the denominator is 1 and this is the Problem-2 form;
    unnormalized states get the consistent normalization factor.
    """
    M = assemble_mass(mesh)
    nrm2 = float(u @ (M @ u))
    if nrm2 == 0.0:
        raise ValueError("cannot form the eigenvalue of a zero state")
    quad = quartic_integral(mesh, mesh.pad(u))
    return (2.0 * energy(spec, mesh, u) + 0.5 * spec.beta * quad) / nrm2


def error_norms(mesh: Mesh, u: np.ndarray, v: np.ndarray, spec: ProblemSpec | None = None) -> dict:
    """L2 norm, H1 seminorm and energy norm of u - v (interior coefficients).

    The energy norm uses the a-matrix of spec; without spec it coincides
    with the H1 seminorm (A = 1, b = 0).
    """
    d = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    M = assemble_mass(mesh)
    plain = ProblemSpec(potential=PotentialSpec.zero(), beta=0.0)
    K0 = assemble_bilinear(mesh, plain)
    l2 = float(np.sqrt(d @ (M @ d)))
    h1 = float(np.sqrt(d @ (K0 @ d)))
    if spec is None:
        en = h1
    else:
        Ka = assemble_bilinear(mesh, spec)
        en = float(np.sqrt(d @ (Ka @ d)))
    return {"l2": l2, "h1_semi": h1, "energy_norm": en}


def subset_h1_norm(mesh: Mesh, u_full: np.ndarray, element_mask: np.ndarray) -> float:
    """Full H1 norm of a P1 function restricted to a set of elements.

    Integrates |grad u|^2 + u^2 over the masked elements only; used for
    corrector tail norms outside a patch.
    """
    mask = np.asarray(element_mask, dtype=bool)
    if not mask.any():
        return 0.0
    rule = quad_rule(mesh.dim)
    ue = u_full[mesh.simplices[mask]]  # (nsel, nv)
    gsel = mesh.grads[mask]
    gradvals = np.einsum("ev,evd->ed", ue, gsel)
    grad_sq = np.einsum("e,ed,ed->", mesh.volumes[mask], gradvals, gradvals)
    vals = ue @ rule.phi.T
    val_sq = np.einsum("e,q,eq,eq->", mesh.detj[mask], rule.weights, vals, vals)
    return float(np.sqrt(grad_sq + val_sq))
