"""Command line front end.

Subcommands: solve (single ground state), converge (coarse-level ladder
CSV), decay (corrector decay table), info (environment and config echo).
Exit codes: 0 success, 2 config error, 3 solver failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .bench import (
    ConfigError,
    StateError,
    load_config,
    run_convergence_study,
    run_decay_study,
    save_state,
    write_decay_csv,
)
from .gpe import FineSpace, LodSpace, oda_minimize
from .linalg import SolverError
from .lod import build_coarse_basis
from .mesh import build_hierarchy, build_uniform_mesh

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpelod",
        description="Two-level finite element ground states of the Gross-Pitaevskii equation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="path to a study config file")
        p.add_argument("--output", default=None, help="output path (default: config output_path or stdout)")
        p.add_argument("--threads", type=int, default=0, help="corrector solve threads, 0 = serial")
        p.add_argument("--seed", type=int, default=None, help="reserved; accepted for interface stability")

    common(sub.add_parser("solve", help="compute one ground state and report lambda and energy"))
    common(sub.add_parser("converge", help="run the convergence study and write its CSV"))
    common(sub.add_parser("decay", help="tabulate corrector decay around one coarse node"))
    common(sub.add_parser("info", help="print version, kernel backend, and config summary"),
           config_required=False)
    return parser


def _output_stream(path):
    """Context manager yielding a text stream; '-' or None means stdout."""
    import contextlib

    if path is None or path == "-":
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8")


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _cmd_solve(args) -> int:
    config = load_config(args.config)
    spec = config.problem_spec()
    if config.solve_space == "lod":
        m = config.coarse_levels[0]
        hier = build_hierarchy(config.domain_dim, m, config.fine_level)
        basis = build_coarse_basis(
            hier, spec, config.k_for_level(m),
            drop_potential=config.corrector_drop_potential,
            threads=args.threads,
        )
        space = LodSpace(basis, spec)
        mesh = hier.fine
    else:
        mesh = build_uniform_mesh(config.domain_dim, config.fine_level)
        space = FineSpace(mesh, spec)
    state = oda_minimize(space, spec, eps=config.oda_eps)
    print(f"space: {config.solve_space} (dimension {space.dimension})")
    print(f"lambda: {state.eigenvalue:.15g}")
    print(f"energy: {state.energy:.15g}")
    print(f"iterations: {state.iterations}")
    out = args.output or config.output_path
    if out:
        save_state(out, mesh, state.fine_coefficients)
        print(f"state written to {out}")
    return EXIT_OK


def _cmd_converge(args) -> int:
    config = load_config(args.config)
    out = args.output or config.output_path
    quiet = out is None or out == "-"
    with _output_stream(out) as f:
        run_convergence_study(
            config, threads=args.threads, csv_file=f,
            progress=None if quiet else _progress,
        )
    if not quiet:
        print(f"study written to {out}")
    return EXIT_OK


def _cmd_decay(args) -> int:
    config = load_config(args.config)
    profile = run_decay_study(config, threads=args.threads)
    out = args.output or config.output_path
    with _output_stream(out) as f:
        write_decay_csv(f, profile)
    if out and out != "-":
        print(f"decay table written to {out}")
    return EXIT_OK


def _cmd_info(args) -> int:
    print(f"gpelod {__version__}")
    print(f"kernel backend: {BACKEND}")
    print(f"numpy {np.__version__}")
    if args.config:
        config = load_config(args.config)
        mesh = build_uniform_mesh(config.domain_dim, config.fine_level)
        print(f"domain: (0, pi)^{config.domain_dim}")
        print(f"fine level {config.fine_level}: {mesh.n_interior} interior nodes")
        for m in config.coarse_levels:
            coarse = build_uniform_mesh(config.domain_dim, m)
            print(
                f"coarse level {m}: {coarse.n_interior} interior nodes, "
                f"k = {config.k_for_level(m)}"
            )
        print(f"potential: {config.potential.kind}, beta = {config.beta:g}")
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "converge": _cmd_converge,
    "decay": _cmd_decay,
    "info": _cmd_info,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, StateError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
