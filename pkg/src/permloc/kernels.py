"""Backend dispatch for the leapfrog kernels.

The default backend is numba; set ``PERMLOC_BACKEND=numpy`` to select the
pure-numpy fallback (also used automatically when numba is unavailable).
"""

from __future__ import annotations

import os
import warnings

from . import _kernels_numpy

_BACKENDS = {"numpy": _kernels_numpy}

try:
    from . import _kernels_numba

    _BACKENDS["numba"] = _kernels_numba
    _DEFAULT = "numba"
except ImportError:  # pragma: no cover - exercised only without numba
    _DEFAULT = "numpy"


def backend_name() -> str:
    name = os.environ.get("PERMLOC_BACKEND", _DEFAULT).lower()
    if name not in ("numpy", "numba"):
        raise ValueError(f"PERMLOC_BACKEND must be 'numpy' or 'numba', got {name!r}")
    if name == "numba" and "numba" not in _BACKENDS:
        warnings.warn("numba unavailable; falling back to the numpy kernels")
        return "numpy"
    return name


def get_backend(name: str | None = None):
    """Kernel module for ``name`` (default: environment selection)."""
    if name is None:
        name = backend_name()
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}")
    return _BACKENDS[name]
