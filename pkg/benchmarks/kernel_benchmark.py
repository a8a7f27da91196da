"""Side-by-side timing of the compiled and numpy element kernels.

Imports both backend modules directly (ignoring GPELOD_KERNELS) and times
each kernel on element data from real meshes. Run from the repository
root after an editable install:

    python3 benchmarks/kernel_benchmark.py
"""

import argparse
import time

import numpy as np

from gpelod.assembly import quad_rule
from gpelod.mesh import build_uniform_mesh

try:
    from gpelod._kernels import _element as compiled
except ImportError:
    compiled = None
from gpelod._kernels import _py as python


def _best_of(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _workloads(mesh, rng):
    rule = quad_rule(mesh.dim)
    ne, nq = mesh.n_elements, len(rule.weights)
    wvals = rng.uniform(0.5, 2.0, size=(ne, nq))
    fvals = rng.standard_normal((ne, nq))
    gvals = rng.standard_normal((ne, nq))
    scale = mesh.volumes * rng.uniform(0.5, 2.0, size=ne)
    return [
        ("mass_entries", (mesh.detj, rule.weights, rule.phi, wvals)),
        ("stiffness_entries", (scale, mesh.grads)),
        ("load_entries", (mesh.detj, rule.weights, rule.phi, fvals)),
        ("pair_integral", (mesh.detj, rule.weights, fvals, gvals)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=7, help="best-of repeat count")
    args = ap.parse_args()

    if compiled is None:
        print("compiled backend not built; timing the numpy backend only")

    rng = np.random.default_rng(0)
    cases = [(1, 12), (2, 6), (2, 7)]
    print(f"{'mesh':>10} {'kernel':>18} {'numpy':>10} {'compiled':>10} {'speedup':>8}")
    for dim, level in cases:
        mesh = build_uniform_mesh(dim, level)
        label = f"{dim}d lvl {level}"
        for name, data in _workloads(mesh, rng):
            t_py, out_py = _best_of(getattr(python, name), data, args.repeats)
            if compiled is None:
                print(f"{label:>10} {name:>18} {t_py*1e3:9.3f}ms {'-':>10} {'-':>8}")
                continue
            t_c, out_c = _best_of(getattr(compiled, name), data, args.repeats)
            close = np.allclose(out_py, out_c, rtol=1e-13, atol=1e-13)
            flag = "" if close else "  VALUES DISAGREE"
            print(
                f"{label:>10} {name:>18} {t_py*1e3:9.3f}ms {t_c*1e3:9.3f}ms "
                f"{t_py/t_c:7.1f}x{flag}"
            )


if __name__ == "__main__":
    main()
