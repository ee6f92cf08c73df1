"""Optional numba acceleration.

Set ``AI_TOOLKIT_DISABLE_JIT=1`` to force the pure-numpy kernels even when
numba is importable.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - optional dependency
    numba = None

DISABLED = os.environ.get("AI_TOOLKIT_DISABLE_JIT", "").strip().lower() in ("1", "true", "yes")
USE_NUMBA = numba is not None and not DISABLED


def njit(func):
    """Compile ``func`` in nopython mode when numba is enabled; identity otherwise."""
    if not USE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)
