import importlib

import numpy as np
import pytest

from gpelod import _kernels
from gpelod._kernels import _py
from gpelod.assembly import quad_rule
from gpelod.mesh import build_uniform_mesh

try:
    from gpelod._kernels import _element as _compiled
except ImportError:  # pragma: no cover - build without the extension
    _compiled = None

needs_compiled = pytest.mark.skipif(
    _compiled is None, reason="compiled kernels not built"
)


def _random_inputs(dim, level, seed):
    rng = np.random.default_rng(seed)
    mesh = build_uniform_mesh(dim, level)
    rule = quad_rule(dim)
    ne, nq = mesh.n_elements, len(rule.weights)
    detj = np.full(ne, mesh.detj)
    wvals = rng.uniform(0.5, 2.0, size=(ne, nq))
    values = rng.standard_normal((ne, nq))
    other = rng.standard_normal((ne, nq))
    return mesh, rule, detj, wvals, values, other


@needs_compiled
@pytest.mark.parametrize("dim,level", [(1, 3), (2, 2)])
def test_backends_agree(dim, level):
    mesh, rule, detj, wvals, values, other = _random_inputs(dim, level, seed=dim)
    phi = rule.phi

    m_py = _py.mass_entries(detj, rule.weights, phi, wvals)
    m_cy = _compiled.mass_entries(detj, rule.weights, phi, wvals)
    assert np.allclose(m_py, m_cy, rtol=0, atol=1e-14)

    scale = mesh.volumes * 1.7
    s_py = _py.stiffness_entries(scale, mesh.grads)
    s_cy = _compiled.stiffness_entries(scale, mesh.grads)
    assert np.allclose(s_py, s_cy, rtol=0, atol=1e-14)

    l_py = _py.load_entries(detj, rule.weights, phi, values)
    l_cy = _compiled.load_entries(detj, rule.weights, phi, values)
    assert np.allclose(l_py, l_cy, rtol=0, atol=1e-14)

    p_py = _py.pair_integral(detj, rule.weights, values, other)
    p_cy = _compiled.pair_integral(detj, rule.weights, values, other)
    assert p_py == pytest.approx(p_cy, abs=1e-13)


@needs_compiled
def test_element_matrices_exactly_symmetric():
    # both backends must build bit-symmetric local matrices, otherwise the
    # assembled operators drift off symmetric and eigensolves degrade
    for dim in (1, 2):
        mesh, rule, detj, wvals, _, _ = _random_inputs(dim, 4 - dim, seed=7 * dim)
        for backend in (_py, _compiled):
            m = backend.mass_entries(detj, rule.weights, rule.phi, wvals)
            assert np.array_equal(m, np.swapaxes(m, 1, 2))
            s = backend.stiffness_entries(mesh.volumes, mesh.grads)
            assert np.array_equal(s, np.swapaxes(s, 1, 2))


def test_backend_env_override(monkeypatch):
    monkeypatch.setenv("GPELOD_KERNELS", "python")
    mod = importlib.reload(_kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("GPELOD_KERNELS")
        importlib.reload(_kernels)


def test_backend_unknown_value(monkeypatch):
    monkeypatch.setenv("GPELOD_KERNELS", "fortran")
    with pytest.raises(ImportError):
        importlib.reload(_kernels)
    monkeypatch.delenv("GPELOD_KERNELS")
    importlib.reload(_kernels)
