"""Benchmark driver: config files, convergence and decay studies, state I/O.

Config files are UTF-8 text, one `key = value` per line, `#` starts a
comment, dotted keys group related settings. Unknown and duplicate keys are
rejected with line numbers. Studies write CSV; reruns with the same config
produce identical numeric columns except the timing column.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass

import numpy as np

from .assembly import (
    PotentialSpec,
    ProblemSpec,
    assemble_mass,
    error_norms,
    lambda_from_state,
)
from .gpe import FineSpace, LodSpace, oda_minimize, postprocess
from .linalg import SolverError
from .lod import build_coarse_basis, decay_profile, saturation_layers
from .mesh import Mesh, build_hierarchy, build_uniform_mesh

__all__ = [
    "ConfigError",
    "StateError",
    "StudyConfig",
    "StudyRow",
    "parse_config",
    "load_config",
    "save_state",
    "load_state",
    "run_convergence_study",
    "run_decay_study",
    "write_study_csv",
    "write_decay_csv",
    "CSV_HEADER",
]

CSV_HEADER = "H,h,k,dim_coarse,lambda,energy,iterations,err_h1,err_l2,err_lambda,seconds"

DECAY_HEADER = "k,tail_norm,localization_error"


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


class StateError(RuntimeError):
    """Malformed state file or state/mesh mismatch."""


@dataclass(frozen=True)
class StudyConfig:
    """Validated study settings."""

    domain_dim: int
    fine_level: int
    coarse_levels: tuple
    beta: float
    potential: PotentialSpec
    diffusion: float = 1.0
    k_rule: object = "2m"
    oda_eps: float = 1e-14
    cg_tol: float = 1e-12
    reference: str = "same_fine"
    output_path: str | None = None
    corrector_drop_potential: bool = False
    solve_space: str = "fine"
    decay_center: int | None = None
    decay_k_max: int | None = None

    def problem_spec(self) -> ProblemSpec:
        return ProblemSpec(potential=self.potential, beta=self.beta, diffusion=self.diffusion)

    def k_for_level(self, m: int) -> int:
        if self.k_rule == "2m":
            return 2 * m
        if self.k_rule == "m":
            return m
        return int(self.k_rule[self.coarse_levels.index(m)])


def _parse_int(value: str) -> int:
    return int(value, 10)


def _parse_float(value: str) -> float:
    return float(value)


def _parse_bool(value: str) -> bool:
    low = value.lower()
    if low in ("true", "false"):
        return low == "true"
    raise ValueError(f"expected true or false, got {value!r}")


def _parse_int_list(value: str) -> tuple:
    parts = [p.strip() for p in value.split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma-separated list of integers")
    return tuple(int(p, 10) for p in parts)


def _parse_k_rule(value: str):
    if value in ("2m", "m"):
        return value
    return _parse_int_list(value)


_CONVERTERS = {
    "domain_dim": _parse_int,
    "fine_level": _parse_int,
    "coarse_levels": _parse_int_list,
    "k_rule": _parse_k_rule,
    "potential.type": str,
    "potential.bt": _parse_float,
    "potential.L": _parse_int,
    "beta": _parse_float,
    "diffusion": _parse_float,
    "oda_eps": _parse_float,
    "cg_tol": _parse_float,
    "reference": str,
    "output_path": str,
    "corrector_drop_potential": _parse_bool,
    "solve.space": str,
    "decay.center": _parse_int,
    "decay.k_max": _parse_int,
}

_MANDATORY = ("domain_dim", "fine_level", "coarse_levels", "potential.type", "beta")


def parse_config(text: str) -> StudyConfig:
    """Parse and validate config text. Raises ConfigError with line numbers."""
    raw = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONVERTERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(
                f"line {lineno}: duplicate key {key!r} (first set on line {lines[key]})"
            )
        try:
            raw[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: invalid value for {key!r}: {exc}") from exc
        lines[key] = lineno

    for key in _MANDATORY:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")

    def fail(key, message):
        raise ConfigError(f"line {lines[key]}: {message}")

    dim = raw["domain_dim"]
    if dim not in (1, 2):
        fail("domain_dim", f"domain_dim must be 1 or 2, got {dim}")
    fine_level = raw["fine_level"]
    if fine_level < 1:
        fail("fine_level", f"fine_level must be >= 1, got {fine_level}")
    coarse_levels = raw["coarse_levels"]
    for m in coarse_levels:
        if not 1 <= m <= fine_level:
            fail("coarse_levels", f"coarse level {m} outside [1, fine_level={fine_level}]")

    ptype = raw["potential.type"]
    if ptype == "zero":
        potential = PotentialSpec.zero()
    elif ptype == "harmonic":
        potential = PotentialSpec.harmonic()
    elif ptype == "periodic_wells":
        try:
            potential = PotentialSpec.periodic_wells(
                raw.get("potential.bt", 100.0), raw.get("potential.L", 4)
            )
        except ValueError as exc:
            raise ConfigError(f"invalid periodic_wells potential: {exc}") from exc
    else:
        fail("potential.type", f"unknown potential type {ptype!r}")

    beta = raw["beta"]
    if beta < 0:
        fail("beta", f"beta must be >= 0, got {beta}")

    k_rule = raw.get("k_rule", "2m")
    if isinstance(k_rule, tuple) and len(k_rule) != len(coarse_levels):
        fail("k_rule", "explicit k list must match coarse_levels in length")

    for key, cond, msg in (
        ("diffusion", raw.get("diffusion", 1.0) > 0, "diffusion must be positive"),
        ("oda_eps", raw.get("oda_eps", 1e-14) > 0, "oda_eps must be positive"),
        ("cg_tol", raw.get("cg_tol", 1e-12) > 0, "cg_tol must be positive"),
    ):
        if not cond:
            fail(key, msg)

    solve_space = raw.get("solve.space", "fine")
    if solve_space not in ("fine", "lod"):
        fail("solve.space", f"solve.space must be 'fine' or 'lod', got {solve_space!r}")

    return StudyConfig(
        domain_dim=dim,
        fine_level=fine_level,
        coarse_levels=tuple(coarse_levels),
        beta=beta,
        potential=potential,
        diffusion=raw.get("diffusion", 1.0),
        k_rule=k_rule,
        oda_eps=raw.get("oda_eps", 1e-14),
        cg_tol=raw.get("cg_tol", 1e-12),
        reference=raw.get("reference", "same_fine"),
        output_path=raw.get("output_path"),
        corrector_drop_potential=raw.get("corrector_drop_potential", False),
        solve_space=solve_space,
        decay_center=raw.get("decay.center"),
        decay_k_max=raw.get("decay.k_max"),
    )


def load_config(path: str) -> StudyConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


_STATE_HEADER = re.compile(r"^gpe-state v1 dim=(\d+) level=(\d+) n=(\d+)$")


def save_state(path: str, mesh: Mesh, coefficients: np.ndarray) -> None:
    """Write interior coefficients as a versioned text state file.

    Values carry 17 significant digits, enough to round-trip float64
    bit-exactly.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.shape != (mesh.n_interior,):
        raise ValueError(
            f"expected {mesh.n_interior} coefficients, got {coefficients.shape}"
        )
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"gpe-state v1 dim={mesh.dim} level={mesh.level} n={len(coefficients)}\n")
        for x in coefficients:
            f.write(f"{x:.17g}\n")


def load_state(path: str, mesh: Mesh | None = None) -> np.ndarray:
    """Read a state file back; optionally validate against a mesh."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        m = _STATE_HEADER.match(header)
        if not m:
            raise StateError(f"{path}: bad state header {header!r}")
        dim, level, n = (int(g) for g in m.groups())
        values = []
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError as exc:
                raise StateError(f"{path}:{lineno}: bad value {line!r}") from exc
    if len(values) != n:
        raise StateError(f"{path}: header says n={n} but found {len(values)} values")
    if mesh is not None:
        if (dim, level) != (mesh.dim, mesh.level):
            raise StateError(
                f"{path}: state is dim={dim} level={level}, mesh is "
                f"dim={mesh.dim} level={mesh.level}"
            )
        if n != mesh.n_interior:
            raise StateError(
                f"{path}: state has {n} values, mesh has {mesh.n_interior} interior nodes"
            )
    return np.array(values)


@dataclass(frozen=True)
class StudyRow:
    """One CSV row; pre- and post-processing rows share the first four fields."""

    H: float
    h: float
    k: int
    dim_coarse: int
    lam: float
    energy: float
    iterations: int
    err_h1: float
    err_l2: float
    err_lambda: float
    seconds: float

    def csv(self) -> str:
        return ",".join(
            [
                f"{self.H:.17g}",
                f"{self.h:.17g}",
                str(self.k),
                str(self.dim_coarse),
                f"{self.lam:.17g}",
                f"{self.energy:.17g}",
                str(self.iterations),
                f"{self.err_h1:.17g}",
                f"{self.err_l2:.17g}",
                f"{self.err_lambda:.17g}",
                f"{self.seconds:.6f}",
            ]
        )


def _fit_slopes(rows) -> dict:
    """Least-squares log-log slopes of each error column against H."""
    out = {}
    H = np.array([r.H for r in rows])
    for name in ("err_h1", "err_l2", "err_lambda"):
        err = np.array([getattr(r, name) for r in rows])
        mask = err > 0
        if mask.sum() >= 2:
            slope = np.polyfit(np.log(H[mask]), np.log(err[mask]), 1)[0]
            out[name] = float(slope)
        else:
            out[name] = float("nan")
    return out


def _reference_state(config: StudyConfig, progress=None):
    """Fine reference (u, lambda) per the config's reference convention."""
    spec = config.problem_spec()
    fine = build_uniform_mesh(config.domain_dim, config.fine_level)
    if config.reference in ("same_fine", "extrapolated"):
        if progress:
            progress(f"solving fine reference at level {config.fine_level}")
        state = oda_minimize(FineSpace(fine, spec), spec, eps=config.oda_eps)
        u_ref = state.fine_coefficients
        lam_ref = state.eigenvalue
        if config.reference == "extrapolated":
            finer = build_uniform_mesh(config.domain_dim, config.fine_level + 1)
            if progress:
                progress(f"solving extrapolation companion at level {config.fine_level + 1}")
            state2 = oda_minimize(FineSpace(finer, spec), spec, eps=config.oda_eps)
            lam_ref = (4.0 * state2.eigenvalue - state.eigenvalue) / 3.0
    else:
        u_ref = load_state(config.reference, mesh=fine)
        M = assemble_mass(fine)
        nrm = float(np.sqrt(u_ref @ (M @ u_ref)))
        if nrm == 0.0:
            raise StateError(f"{config.reference}: reference state is zero")
        u_ref = u_ref / nrm
        lam_ref = lambda_from_state(spec, fine, u_ref)
    return fine, u_ref, lam_ref


def run_convergence_study(
    config: StudyConfig, threads: int = 0, csv_file=None, progress=None
):
    """Run the coarse-level ladder against a fine reference.

    For each coarse level: build the LOD basis, minimize in the coarse
    space, post-process, and record a pre and a post row of errors against
    the reference. Rows are flushed to csv_file (if given) as they complete,
    so a solver failure leaves a valid partial CSV behind. Returns
    (rows, slopes) with slopes fit per stage over the level ladder.
    """
    spec = config.problem_spec()
    if csv_file is not None:
        csv_file.write(CSV_HEADER + "\n")
        csv_file.flush()

    fine, u_ref, lam_ref = _reference_state(config, progress)
    pre_rows, post_rows, rows = [], [], []

    def emit(row):
        rows.append(row)
        if csv_file is not None:
            csv_file.write(row.csv() + "\n")
            csv_file.flush()

    for m in config.coarse_levels:
        k = config.k_for_level(m)
        t0 = time.perf_counter()
        hier = build_hierarchy(config.domain_dim, m, config.fine_level)
        basis = build_coarse_basis(
            hier, spec, k,
            drop_potential=config.corrector_drop_potential,
            threads=threads,
        )
        space = LodSpace(basis, spec)
        coarse = oda_minimize(space, spec, eps=config.oda_eps)
        t1 = time.perf_counter()

        errs = error_norms(fine, coarse.fine_coefficients, u_ref, spec)
        pre = StudyRow(
            H=hier.coarse.spacing,
            h=fine.spacing,
            k=k,
            dim_coarse=space.dimension,
            lam=coarse.eigenvalue,
            energy=coarse.energy,
            iterations=coarse.iterations,
            err_h1=float(np.hypot(errs["h1_semi"], errs["l2"])),
            err_l2=errs["l2"],
            err_lambda=abs(lam_ref - coarse.eigenvalue),
            seconds=t1 - t0,
        )
        pre_rows.append(pre)
        emit(pre)

        t2 = time.perf_counter()
        post = postprocess(hier, spec, coarse, tol=config.cg_tol)
        t3 = time.perf_counter()
        perrs = error_norms(fine, post.coefficients, u_ref, spec)
        post_row = StudyRow(
            H=pre.H,
            h=pre.h,
            k=pre.k,
            dim_coarse=pre.dim_coarse,
            lam=post.eigenvalue,
            energy=post.energy,
            iterations=post.iterations,
            err_h1=float(np.hypot(perrs["h1_semi"], perrs["l2"])),
            err_l2=perrs["l2"],
            err_lambda=abs(lam_ref - post.eigenvalue),
            seconds=t3 - t2,
        )
        post_rows.append(post_row)
        emit(post_row)
        if progress:
            progress(
                f"coarse level {m}: lambda={coarse.eigenvalue:.12g} "
                f"post={post.eigenvalue:.12g} ({coarse.iterations} iterations)"
            )

    slopes = {"pre": _fit_slopes(pre_rows), "post": _fit_slopes(post_rows)}
    if csv_file is not None:
        for stage in ("pre", "post"):
            pieces = " ".join(f"{k}={v:.6g}" for k, v in slopes[stage].items())
            csv_file.write(f"# slope_{stage} {pieces}\n")
        csv_file.flush()
    return rows, slopes


def write_study_csv(path: str, config: StudyConfig, threads: int = 0, progress=None):
    """Run the convergence study and stream its CSV to a file path."""
    with open(path, "w", encoding="utf-8") as f:
        return run_convergence_study(config, threads=threads, csv_file=f, progress=progress)


def _default_center(mesh: Mesh) -> int:
    target = np.full(mesh.dim, np.pi / 2.0)
    d = np.linalg.norm(mesh.vertices[mesh.interior_nodes] - target, axis=1)
    return int(mesh.interior_nodes[int(np.argmin(d))])


def run_decay_study(config: StudyConfig, threads: int = 0):
    """Corrector decay table at the first coarse level of the config.

    Returns the DecayProfile around the configured center node (default:
    the interior coarse node nearest the domain center).
    """
    spec = config.problem_spec()
    m = config.coarse_levels[0]
    hier = build_hierarchy(config.domain_dim, m, config.fine_level)
    center = config.decay_center
    if center is None:
        center = _default_center(hier.coarse)
    k_max = config.decay_k_max
    if k_max is None:
        k_max = saturation_layers(hier)
    return decay_profile(hier, spec, center, k_max)


def write_decay_csv(csv_file, profile) -> None:
    csv_file.write(DECAY_HEADER + "\n")
    for k, tail, err in zip(profile.ks, profile.tail_norms, profile.localization_errors):
        csv_file.write(f"{k},{tail:.17g},{err:.17g}\n")
    csv_file.write(f"# theta_hat = {profile.theta_hat:.17g}\n")
    csv_file.flush()
