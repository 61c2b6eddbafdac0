"""Numba switch.

Set ``CHAINGATHER_NUMBA=0`` before import to run every kernel on the
pure-numpy fallback path.
"""
import os

USE_NUMBA = os.environ.get("CHAINGATHER_NUMBA", "1").lower() not in ("0", "false", "no", "off")

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover
        USE_NUMBA = False


def njit(func):
    """Compile ``func`` with numba when enabled, else return it untouched."""
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func
