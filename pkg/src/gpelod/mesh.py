"""Uniform simplicial meshes of (0, pi)^d and nested refinement hierarchies.

Only dyadic lattice meshes are supported: level m subdivides each axis into
2**m intervals (lattice spacing pi / 2**m). In 2D every lattice cell is split
into two triangles by its (+1, +1) diagonal, identically in every cell, so
connectivity, node ordering and patch shapes are fully deterministic.
Vertices are ordered row-major by (i_y, i_x); elements are ordered cell-major
with the lower (below-diagonal) triangle first. Meshes are immutable after
construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "Mesh",
    "MeshHierarchy",
    "Patch",
    "build_uniform_mesh",
    "build_hierarchy",
    "node_patch",
]


class Mesh:
    """Uniform simplicial mesh of (0, pi)**dim at a dyadic refinement level.

    Attributes
    ----------
    dim : int
        Spatial dimension, 1 or 2.
    level : int
        Dyadic level m >= 1; the lattice spacing is pi / 2**m.
    spacing : float
        Lattice spacing pi / 2**m.
    vertices : (n_vertices, dim) float array
        Vertex coordinates.
    simplices : (n_elements, dim + 1) int array
        Vertex indices of each element, consistently oriented.
    boundary_mask : (n_vertices,) bool array
        True for vertices with a coordinate equal to 0 or pi.
    interior_nodes : (n_interior,) int array
        Indices of interior vertices, ascending (row-major by (i_y, i_x)).
    interior_pos : (n_vertices,) int array
        Position of each vertex in the interior ordering, -1 on the boundary.
    volumes : (n_elements,) float array
        Element measures.
    detj : (n_elements,) float array
        Jacobian determinants of the affine reference maps.
    grads : (n_elements, dim + 1, dim) float array
        Constant gradients of the nodal basis on each element.
    """

    def __init__(self, dim: int, level: int):
        if dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {dim}")
        if level < 1:
            raise ValueError(f"level must be >= 1, got {level}")
        self.dim = dim
        self.level = level
        n = 2**level
        self.cells_per_axis = n
        self.spacing = np.pi / n
        h = self.spacing

        if dim == 1:
            self.vertices = (np.arange(n + 1, dtype=float) * h)[:, np.newaxis]
            idx = np.arange(n)
            self.simplices = np.column_stack([idx, idx + 1]).astype(np.int64)
            self.boundary_mask = np.zeros(n + 1, dtype=bool)
            self.boundary_mask[[0, n]] = True
            self.detj = np.full(n, h)
            self.volumes = np.full(n, h)
            g = np.empty((n, 2, 1))
            g[:, 0, 0] = -1.0 / h
            g[:, 1, 0] = 1.0 / h
            self.grads = g
        else:
            ix, iy = np.meshgrid(np.arange(n + 1), np.arange(n + 1))
            # row-major by (i_y, i_x): vertex id = i_y * (n + 1) + i_x
            self.vertices = np.column_stack([ix.ravel() * h, iy.ravel() * h])
            ci, cj = np.meshgrid(np.arange(n), np.arange(n))
            ci = ci.ravel()
            cj = cj.ravel()
            v00 = cj * (n + 1) + ci
            v10 = v00 + 1
            v01 = v00 + (n + 1)
            v11 = v01 + 1
            lower = np.column_stack([v00, v10, v11])
            upper = np.column_stack([v00, v11, v01])
            tris = np.empty((2 * n * n, 3), dtype=np.int64)
            tris[0::2] = lower
            tris[1::2] = upper
            self.simplices = tris
            onb = (ix == 0) | (ix == n) | (iy == 0) | (iy == n)
            self.boundary_mask = onb.ravel()
            ne = 2 * n * n
            self.detj = np.full(ne, h * h)
            self.volumes = np.full(ne, h * h / 2.0)
            # gradients of the barycentric basis, constant per element type
            glo = np.array([[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]]) / h
            gup = np.array([[0.0, -1.0], [1.0, 0.0], [-1.0, 1.0]]) / h
            g = np.empty((ne, 3, 2))
            g[0::2] = glo
            g[1::2] = gup
            self.grads = g

        self.interior_nodes = np.flatnonzero(~self.boundary_mask)
        pos = np.full(len(self.boundary_mask), -1, dtype=np.int64)
        pos[self.interior_nodes] = np.arange(len(self.interior_nodes))
        self.interior_pos = pos

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_elements(self) -> int:
        return len(self.simplices)

    @property
    def n_interior(self) -> int:
        return len(self.interior_nodes)

    @cached_property
    def vertex_to_elements(self):
        """CSR-style incidence: (indptr, elements) with elements of vertex v
        at elements[indptr[v]:indptr[v + 1]], ascending."""
        flat = self.simplices.ravel()
        order = np.argsort(flat, kind="stable")
        elems = (order // self.simplices.shape[1]).astype(np.int64)
        counts = np.bincount(flat, minlength=self.n_vertices)
        indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        return indptr, elems

    @cached_property
    def assembly_index_pairs(self):
        """COO (rows, cols) index arrays for element-matrix scatter."""
        nv = self.simplices.shape[1]
        rows = np.repeat(self.simplices, nv, axis=1).ravel()
        cols = np.tile(self.simplices, (1, nv)).ravel()
        return rows, cols

    def pad(self, u_interior: np.ndarray) -> np.ndarray:
        """Extend interior coefficients by zero boundary values."""
        full = np.zeros(self.n_vertices)
        full[self.interior_nodes] = u_interior
        return full

    def restrict(self, u_full: np.ndarray) -> np.ndarray:
        """Drop boundary entries from a full coefficient vector."""
        return u_full[self.interior_nodes]

    def __repr__(self):  # pragma: no cover
        return (
            f"Mesh(dim={self.dim}, level={self.level}, "
            f"vertices={self.n_vertices}, elements={self.n_elements})"
        )


def build_uniform_mesh(dim: int, level: int) -> Mesh:
    """Build the uniform dyadic mesh of (0, pi)**dim at the given level."""
    return Mesh(dim, level)


class MeshHierarchy:
    """A nested coarse/fine mesh pair with parent map and prolongation.

    Attributes
    ----------
    coarse, fine : Mesh
        Meshes at the same dimension, coarse.level <= fine.level.
    parent_of : (fine.n_elements,) int array
        Coarse element containing each fine element.
    prolongation : csr_matrix, (fine.n_interior, coarse.n_interior)
        Nodal interpolation of coarse hat coefficients onto the fine mesh.
        Entries are exact dyadic rationals.
    """

    def __init__(self, coarse: Mesh, fine: Mesh):
        if coarse.dim != fine.dim:
            raise ValueError("coarse and fine mesh dimensions differ")
        if coarse.level > fine.level:
            raise ValueError(
                f"coarse level {coarse.level} exceeds fine level {fine.level}"
            )
        self.coarse = coarse
        self.fine = fine
        self.ratio = 2 ** (fine.level - coarse.level)
        self.parent_of = self._build_parent_map()
        self.prolongation = self._build_prolongation()

    def _build_parent_map(self) -> np.ndarray:
        r = self.ratio
        nc = self.coarse.cells_per_axis
        if self.fine.dim == 1:
            return (np.arange(self.fine.n_elements) // r).astype(np.int64)
        nf = self.fine.cells_per_axis
        e = np.arange(self.fine.n_elements)
        t = e % 2  # 0 lower, 1 upper
        cell = e // 2
        fi = cell % nf
        fj = cell // nf
        ci = fi // r
        cj = fj // r
        ri = fi % r
        rj = fj % r
        # fine cells strictly below the coarse diagonal sit in the lower
        # coarse triangle, strictly above in the upper one; cells on the
        # diagonal split the same way the fine triangles do
        parent_t = np.where(rj < ri, 0, np.where(rj > ri, 1, t))
        return (2 * (cj * nc + ci) + parent_t).astype(np.int64)

    def _build_prolongation(self):
        from scipy.sparse import csr_matrix

        r = self.ratio
        coarse, fine = self.coarse, self.fine
        nc = coarse.cells_per_axis
        rows, cols, vals = [], [], []

        def emit(frow, cvert, w):
            keep = (w != 0.0) & (coarse.interior_pos[cvert] >= 0)
            rows.append(frow[keep])
            cols.append(coarse.interior_pos[cvert[keep]])
            vals.append(w[keep])

        if fine.dim == 1:
            fi = fine.interior_nodes  # lattice index == vertex id in 1D
            I = fi // r
            rem = fi % r
            t = rem / r  # exact: rem < r, r a power of two
            frow = np.arange(fine.n_interior)
            emit(frow, I, 1.0 - t)
            emit(frow, I + 1, t.astype(float))
        else:
            nfv = fine.cells_per_axis + 1
            fid = fine.interior_nodes
            fx = fid % nfv
            fy = fid // nfv
            I = fx // r
            J = fy // r
            rx = fx % r
            ry = fy % r
            lx = rx / r
            ly = ry / r
            v00 = J * (nc + 1) + I
            v10 = v00 + 1
            v01 = v00 + (nc + 1)
            v11 = v01 + 1
            low = ly <= lx  # on the diagonal both charts agree
            frow = np.arange(fine.n_interior)
            w00 = np.where(low, 1.0 - lx, 1.0 - ly)
            w10 = np.where(low, lx - ly, 0.0)
            w01 = np.where(low, 0.0, ly - lx)
            w11 = np.where(low, ly, lx)
            emit(frow, v00, w00)
            emit(frow, v10, w10)
            emit(frow, v01, w01)
            emit(frow, v11, w11)

        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        return csr_matrix(
            (vals, (rows, cols)), shape=(fine.n_interior, coarse.n_interior)
        )

    def __repr__(self):  # pragma: no cover
        return (
            f"MeshHierarchy(dim={self.fine.dim}, coarse_level="
            f"{self.coarse.level}, fine_level={self.fine.level})"
        )


def build_hierarchy(dim: int, coarse_level: int, fine_level: int) -> MeshHierarchy:
    """Build a nested hierarchy of uniform meshes at two dyadic levels."""
    return MeshHierarchy(build_uniform_mesh(dim, coarse_level), build_uniform_mesh(dim, fine_level))


@dataclass(eq=False)
class Patch:
    """A k-layer nodal patch on the coarse mesh of a hierarchy.

    center is a coarse vertex id; elements are coarse element ids;
    fine_dofs are positions in the fine interior-dof ordering;
    constrained_coarse_nodes are positions in the coarse interior ordering.
    All index arrays are sorted ascending.
    """

    center: int
    k: int
    elements: np.ndarray
    fine_dofs: np.ndarray
    constrained_coarse_nodes: np.ndarray


def node_patch(hierarchy: MeshHierarchy, z: int, k: int) -> Patch:
    """Grow the k-layer element patch around coarse interior vertex z.

    Layer 1 is the set of coarse elements containing z; each further layer
    adds every element sharing at least one vertex with the current patch.
    fine_dofs collects the fine interior vertices all of whose incident fine
    elements descend from patch elements, i.e. the vertices strictly inside
    the patch; functions supported there extend by zero to valid global
    functions. constrained_coarse_nodes collects the coarse interior nodes
    whose hat support meets the patch in positive measure (the vertices of
    patch elements).
    """
    coarse, fine = hierarchy.coarse, hierarchy.fine
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not (0 <= z < coarse.n_vertices):
        raise ValueError(f"vertex id {z} out of range")
    if coarse.boundary_mask[z]:
        raise ValueError(f"vertex {z} is on the boundary")

    indptr, elems = coarse.vertex_to_elements
    in_patch = np.zeros(coarse.n_elements, dtype=bool)
    in_patch[elems[indptr[z]:indptr[z + 1]]] = True
    for _ in range(k - 1):
        verts = np.unique(coarse.simplices[in_patch])
        touched = np.zeros(coarse.n_vertices, dtype=bool)
        touched[verts] = True
        in_patch |= touched[coarse.simplices].any(axis=1)

    patch_elements = np.flatnonzero(in_patch)

    fine_in = in_patch[hierarchy.parent_of]
    incident_in = np.bincount(
        fine.simplices[fine_in].ravel(), minlength=fine.n_vertices
    )
    incident_all = np.bincount(fine.simplices.ravel(), minlength=fine.n_vertices)
    strictly_inside = (incident_in == incident_all) & ~fine.boundary_mask
    fine_dofs = fine.interior_pos[np.flatnonzero(strictly_inside)]

    pverts = np.unique(coarse.simplices[patch_elements])
    pverts = pverts[~coarse.boundary_mask[pverts]]
    constrained = coarse.interior_pos[pverts]

    return Patch(
        center=int(z),
        k=int(k),
        elements=patch_elements,
        fine_dofs=np.sort(fine_dofs),
        constrained_coarse_nodes=np.sort(constrained),
    )
