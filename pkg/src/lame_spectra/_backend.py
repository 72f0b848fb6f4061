"""Kernel backend selection.

Hot loops are compiled with numba when it is importable. Setting
``LAME_SPECTRA_NO_NUMBA=1`` forces the pure-numpy code paths, which is what
the benchmark in ``benchmarks/`` compares against.
"""
import os
from typing import Any, Callable

_DISABLED = os.environ.get("LAME_SPECTRA_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def njit(func: Callable[..., Any]) -> Callable[..., Any]:
    if HAVE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
