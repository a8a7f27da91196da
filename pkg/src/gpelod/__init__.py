"""Two-level finite element solver for Gross-Pitaevskii ground states.

Builds a localization-corrected coarse space on a uniform simplicial mesh
of (0, pi)^d, minimizes the energy there by optimally damped self-consistent
iteration, and recovers fine-scale accuracy with a single post-processing
solve on the fine mesh.
"""

from ._kernels import BACKEND as kernel_backend
from .assembly import (
    PotentialSpec,
    ProblemSpec,
    assemble_bilinear,
    assemble_density_mass,
    assemble_load,
    assemble_mass,
    energy,
    error_norms,
    lambda_from_state,
)
from .bench import (
    ConfigError,
    StudyConfig,
    load_config,
    load_state,
    parse_config,
    run_convergence_study,
    run_decay_study,
    save_state,
)
from .gpe import FineSpace, GroundState, LodSpace, oda_minimize, postprocess
from .interpolation import build_clement, clement_interpolate, prolongate
from .linalg import SolverError, smallest_eigenpair, solve_constrained, solve_spd
from .lod import (
    CoarseSpaceBasis,
    DecayProfile,
    build_coarse_basis,
    coarse_operator,
    compute_corrector,
    decay_profile,
    node_patch,
)
from .mesh import Mesh, MeshHierarchy, build_hierarchy, build_uniform_mesh

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "kernel_backend",
    "Mesh",
    "MeshHierarchy",
    "build_uniform_mesh",
    "build_hierarchy",
    "PotentialSpec",
    "ProblemSpec",
    "assemble_bilinear",
    "assemble_mass",
    "assemble_density_mass",
    "assemble_load",
    "energy",
    "lambda_from_state",
    "error_norms",
    "build_clement",
    "clement_interpolate",
    "prolongate",
    "SolverError",
    "solve_spd",
    "solve_constrained",
    "smallest_eigenpair",
    "node_patch",
    "compute_corrector",
    "build_coarse_basis",
    "coarse_operator",
    "CoarseSpaceBasis",
    "DecayProfile",
    "decay_profile",
    "FineSpace",
    "LodSpace",
    "GroundState",
    "oda_minimize",
    "postprocess",
    "ConfigError",
    "StudyConfig",
    "parse_config",
    "load_config",
    "save_state",
    "load_state",
    "run_convergence_study",
    "run_decay_study",
]
