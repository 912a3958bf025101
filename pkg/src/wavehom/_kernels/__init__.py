"""Hot finite-difference kernels with a compiled core and a NumPy fallback.

The compiled Cython extension is preferred when importable; set the
environment variable WAVEHOM_KERNELS=reference to force the fallback or
WAVEHOM_KERNELS=compiled to fail loudly when the extension is missing.
"""

from __future__ import annotations

import os

from . import reference

_requested = os.environ.get("WAVEHOM_KERNELS", "auto")

if _requested == "reference":
    _impl = reference
    BACKEND = "reference"
elif _requested in ("auto", "compiled"):
    try:
        from . import _compiled as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = reference
        BACKEND = "reference"
else:
    raise ValueError(f"unknown WAVEHOM_KERNELS value {_requested!r}")

apply_hetero_1d = _impl.apply_hetero_1d
apply_hetero_2d = _impl.apply_hetero_2d
advance_hetero_1d = _impl.advance_hetero_1d
advance_hetero_2d = _impl.advance_hetero_2d
refresh_ghosts_1d = _impl.refresh_ghosts_1d
refresh_ghosts_2d = _impl.refresh_ghosts_2d


def backend() -> str:
    """Name of the active kernel backend ("compiled" or "reference")."""
    return BACKEND


def load_backend(name: str):
    """Return a specific backend module (for benchmarks and equivalence tests)."""
    if name == "reference":
        return reference
    if name == "compiled":
        from . import _compiled
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
