"""Kernel compilation switch.

Hot loops (R-tree maintenance and queries, the gadget simulator) are written
in the numba-compatible subset of Python operating on numpy arrays.  When
numba is importable and ``CETSP_DISABLE_JIT`` is unset they are compiled with
``numba.njit``; otherwise the very same functions run as plain Python.
"""

import os

_FLAG = os.environ.get("CETSP_DISABLE_JIT", "").strip().lower()
DISABLED_BY_ENV = _FLAG in ("1", "true", "yes", "on")

try:
    if DISABLED_BY_ENV:
        raise ImportError
    import numba
except ImportError:  # pragma: no cover - depends on environment
    numba = None

JIT_ENABLED = numba is not None


def njit(fn):
    if JIT_ENABLED:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def backend_name() -> str:
    return "numba" if JIT_ENABLED else "python"
