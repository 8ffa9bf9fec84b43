"""Kernel backend selection.

The recursion kernels exist twice: a numba ``@njit`` build and a pure-numpy
build. The active backend is chosen once from the ``REGIMEBENCH_BACKEND``
environment variable ("numba" or "numpy"); unset means numba when importable,
numpy otherwise. ``set_backend`` exists so tests and the benchmark can switch
in-process.
"""

from __future__ import annotations

import os

ENV_VAR = "REGIMEBENCH_BACKEND"

try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except ImportError:
    NUMBA_AVAILABLE = False


def _initial_backend() -> str:
    requested = os.environ.get(ENV_VAR, "").strip().lower()
    if requested == "":
        return "numba" if NUMBA_AVAILABLE else "numpy"
    if requested not in ("numba", "numpy"):
        raise ValueError(f"{ENV_VAR} must be 'numba' or 'numpy', got {requested!r}")
    if requested == "numba" and not NUMBA_AVAILABLE:
        raise ImportError(f"{ENV_VAR}=numba but numba is not importable")
    return requested


_active = _initial_backend()


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in ("numba", "numpy"):
        raise ValueError(f"backend must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not NUMBA_AVAILABLE:
        raise ImportError("numba backend requested but numba is not importable")
    _active = name
