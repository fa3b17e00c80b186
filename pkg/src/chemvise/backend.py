"""Kernel backend selection.

Hot numeric loops (MLP training, SVC subgradient descent, Jacobi
eigensweeps) exist twice: a numba @njit build and a pure-numpy build with
identical call signatures. The environment variable CHEMVISE_BACKEND
picks one ("numba" or "numpy"); unset means numba when importable,
numpy otherwise. `chemvise bench` compares the two.
"""

from __future__ import annotations

import os

from .errors import ConfigError

_ENV_VAR = "CHEMVISE_BACKEND"

try:
    import numba  # noqa: F401

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on install
    _HAVE_NUMBA = False


def numba_available() -> bool:
    return _HAVE_NUMBA


def backend_name() -> str:
    """Resolve the active backend from the environment."""
    raw = os.environ.get(_ENV_VAR, "").strip().lower()
    if raw == "":
        return "numba" if _HAVE_NUMBA else "numpy"
    if raw not in ("numba", "numpy"):
        raise ConfigError(
            f"{_ENV_VAR} must be 'numba' or 'numpy', got {raw!r}"
        )
    if raw == "numba" and not _HAVE_NUMBA:
        raise ConfigError(f"{_ENV_VAR}=numba but numba is not importable")
    return raw


def get_kernels():
    """Return the kernel module for the active backend."""
    if backend_name() == "numba":
        from . import _kernels_nb

        return _kernels_nb
    from . import _kernels_py

    return _kernels_py
