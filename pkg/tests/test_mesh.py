import numpy as np
import pytest

from gpelod.assembly import ProblemSpec, PotentialSpec, assemble_bilinear, assemble_mass
from gpelod.interpolation import prolongate
from gpelod.mesh import Mesh, build_hierarchy, build_uniform_mesh, node_patch


def test_counts_1d():
    for level in (1, 2, 3, 5):
        n = 2**level
        mesh = build_uniform_mesh(1, level)
        assert mesh.n_vertices == n + 1
        assert mesh.n_elements == n
        assert mesh.n_interior == n - 1
        assert mesh.spacing == pytest.approx(np.pi / n)


def test_counts_2d():
    for level in (1, 2, 4):
        n = 2**level
        mesh = build_uniform_mesh(2, level)
        assert mesh.n_vertices == (n + 1) ** 2
        assert mesh.n_elements == 2 * n**2
        assert mesh.n_interior == (n - 1) ** 2


def test_vertex_order_is_row_major():
    mesh = build_uniform_mesh(2, 1)
    h = np.pi / 2
    expected = [(j * h, i * h) for i in range(3) for j in range(3)]
    assert np.allclose(mesh.vertices, expected)


def test_boundary_mask():
    mesh = build_uniform_mesh(2, 2)
    on_edge = (
        np.isclose(mesh.vertices, 0.0) | np.isclose(mesh.vertices, np.pi)
    ).any(axis=1)
    assert np.array_equal(mesh.boundary_mask, on_edge)
    assert np.all(~mesh.boundary_mask[mesh.interior_nodes])


def test_volumes_tile_the_domain():
    for dim in (1, 2):
        mesh = build_uniform_mesh(dim, 3)
        assert mesh.volumes.sum() == pytest.approx(np.pi**dim, rel=1e-14)
        assert np.all(mesh.volumes > 0)


def test_simplex_orientation_2d():
    # every triangle has positive doubled area equal to h^2
    mesh = build_uniform_mesh(2, 2)
    v = mesh.vertices[mesh.simplices]
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    assert np.all(cross > 0)
    assert np.allclose(cross, mesh.spacing**2)


def test_gradients_sum_to_zero():
    # P1 shape gradients on each element sum to the zero vector
    for dim in (1, 2):
        mesh = build_uniform_mesh(dim, 2)
        assert np.allclose(mesh.grads.sum(axis=-2), 0.0, atol=1e-14)


def test_pad_restrict_roundtrip():
    rng = np.random.default_rng(11)
    mesh = build_uniform_mesh(2, 3)
    u = rng.standard_normal(mesh.n_interior)
    full = mesh.pad(u)
    assert np.allclose(full[mesh.boundary_mask], 0.0)
    assert np.array_equal(mesh.restrict(full), u)


def test_bad_arguments():
    with pytest.raises(ValueError):
        build_uniform_mesh(3, 2)
    with pytest.raises(ValueError):
        build_uniform_mesh(1, 0)
    with pytest.raises(ValueError):
        build_hierarchy(1, 4, 3)


def test_parent_map_contains_fine_centroids():
    hier = build_hierarchy(2, 2, 4)
    fine, coarse = hier.fine, hier.coarse
    centroids = fine.vertices[fine.simplices].mean(axis=1)
    for e in range(0, fine.n_elements, 7):
        p = hier.parent_of[e]
        tri = coarse.vertices[coarse.simplices[p]]
        # barycentric coordinates of the centroid w.r.t. the parent triangle
        T = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
        lam = np.linalg.solve(T, centroids[e] - tri[0])
        assert lam.min() >= -1e-12 and lam.sum() <= 1 + 1e-12


def test_prolongation_hat_1d():
    # coarse hat refines to (1/2, 1, 1/2) on the fine grid
    hier = build_hierarchy(1, 1, 2)
    fine_vals = prolongate(hier, np.array([1.0]))
    assert np.allclose(fine_vals, [0.5, 1.0, 0.5])


def test_prolongation_preserves_norms():
    # nested meshes: coarse P1 functions are represented exactly on the
    # fine mesh, so stiffness and mass energies agree between levels
    rng = np.random.default_rng(23)
    spec = ProblemSpec(potential=PotentialSpec.harmonic(), beta=0.0)
    for dim, coarse_level, fine_level in ((1, 2, 5), (2, 2, 4)):
        hier = build_hierarchy(dim, coarse_level, fine_level)
        Kc = assemble_bilinear(hier.coarse, spec)
        Kf = assemble_bilinear(hier.fine, spec)
        Mc = assemble_mass(hier.coarse)
        Mf = assemble_mass(hier.fine)
        for _ in range(5):
            c = rng.standard_normal(hier.coarse.n_interior)
            f = prolongate(hier, c)
            assert c @ (Kc @ c) == pytest.approx(f @ (Kf @ f), rel=1e-12)
            assert c @ (Mc @ c) == pytest.approx(f @ (Mf @ f), rel=1e-12)


def test_prolongation_rows_interpolate():
    # each fine vertex value is a convex combination of coarse nodal values
    hier = build_hierarchy(2, 2, 3)
    P = hier.prolongation.tocsr()
    sums = np.asarray(P.sum(axis=1)).ravel()
    # rows for fine nodes inside the coarse interior hull sum to 1 unless
    # the node leans on the boundary (dropped columns)
    assert sums.max() <= 1 + 1e-12
    assert P.min() >= -1e-15


def test_patch_growth_and_saturation():
    hier = build_hierarchy(2, 2, 4)
    z = hier.coarse.interior_nodes[0]
    sizes = []
    for k in range(1, 9):
        patch = node_patch(hier, z, k)
        sizes.append(len(patch.elements))
    assert all(a <= b for a, b in zip(sizes, sizes[1:]))
    # k = 2 * cells_per_axis always covers everything
    full = node_patch(hier, z, 2 * hier.coarse.cells_per_axis)
    assert len(full.elements) == hier.coarse.n_elements
    assert len(full.fine_dofs) == hier.fine.n_interior


def test_patch_k1_is_support():
    # one layer = the triangles containing z
    hier = build_hierarchy(2, 3, 4)
    z = hier.coarse.interior_nodes[10]
    patch = node_patch(hier, z, 1)
    incident = np.flatnonzero((hier.coarse.simplices == z).any(axis=1))
    assert np.array_equal(patch.elements, incident)


def test_patch_fine_dofs_exclude_patch_boundary():
    hier = build_hierarchy(2, 2, 4)
    z = hier.coarse.interior_nodes[0]
    patch = node_patch(hier, z, 1)
    fine = hier.fine
    in_patch = np.isin(hier.parent_of, patch.elements)
    covered = np.unique(fine.simplices[in_patch].ravel())
    outside = np.unique(fine.simplices[~in_patch].ravel())
    cut = np.setdiff1d(covered, outside)  # strictly inside the patch
    got = fine.interior_nodes[patch.fine_dofs]
    assert np.array_equal(np.sort(got), np.intersect1d(cut, fine.interior_nodes))


def test_patch_validation():
    hier = build_hierarchy(2, 2, 4)
    with pytest.raises(ValueError):
        node_patch(hier, hier.coarse.interior_nodes[0], 0)
    boundary = int(np.flatnonzero(hier.coarse.boundary_mask)[0])
    with pytest.raises(ValueError):
        node_patch(hier, boundary, 1)
