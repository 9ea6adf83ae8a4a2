"""Optional numba acceleration for the hot numeric kernels.

Functions decorated with :func:`accelerated` are compiled with ``numba.njit``
when numba is importable and the environment variable ``ZVNAV_DISABLE_NUMBA``
is unset. Setting ``ZVNAV_DISABLE_NUMBA=1`` (or numba being absent) selects a
pure-numpy fallback path: the very same functions run uncompiled. The flag is
read once at import time.

``benchmarks/bench_kernels.py`` compares the two paths.
"""
import os

DISABLE_FLAG = "ZVNAV_DISABLE_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(DISABLE_FLAG, "").strip().lower() not in ("1", "true", "yes")


NUMBA_ENABLED = False
if _numba_requested():
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - exercised via the env flag instead
        NUMBA_ENABLED = False


if NUMBA_ENABLED:

    def accelerated(func):
        """Compile ``func`` with numba (cached); ``func.py_func`` stays available."""
        return _njit(cache=True)(func)

else:

    def accelerated(func):
        """Fallback decorator: run ``func`` as plain Python/numpy."""
        func.py_func = func
        return func
