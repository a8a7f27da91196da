"""Element assembly kernels with backend selection at import time.

The compiled Cython module is preferred; the numpy fallback gives the
same results (to roundoff) without a build step. Set GPELOD_KERNELS to
"compiled" or "python" to force a backend; "auto" (default) tries the
compiled one and falls back silently.
"""

import os

_choice = os.environ.get("GPELOD_KERNELS", "auto")
if _choice not in ("auto", "compiled", "python"):
    raise ImportError(
        f"GPELOD_KERNELS must be 'auto', 'compiled' or 'python', got {_choice!r}"
    )

_impl = None
BACKEND = None
if _choice in ("auto", "compiled"):
    try:
        from . import _element as _impl
        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
if _impl is None:
    from . import _py as _impl
    BACKEND = "python"

mass_entries = _impl.mass_entries
stiffness_entries = _impl.stiffness_entries
load_entries = _impl.load_entries
pair_integral = _impl.pair_integral

__all__ = [
    "BACKEND",
    "mass_entries",
    "stiffness_entries",
    "load_entries",
    "pair_integral",
]
