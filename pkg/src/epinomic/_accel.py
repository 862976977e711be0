"""Optional numba acceleration.

Setting ``ARTIFACT_DISABLE_NUMBA=1`` (or running without numba installed) makes
:func:`jit` a no-op so the pure-numpy code paths are used instead.
"""
import os

DISABLED = os.environ.get("ARTIFACT_DISABLE_NUMBA", "0") not in ("", "0", "false", "False")

try:
    if DISABLED:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    numba = None
    HAVE_NUMBA = False


def jit(fn):
    """Compile ``fn`` with ``numba.njit(cache=True)`` when numba is enabled."""
    if HAVE_NUMBA:
        return numba.njit(cache=True, fastmath=False)(fn)
    return fn
