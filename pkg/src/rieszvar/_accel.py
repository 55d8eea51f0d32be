"""Optional numba acceleration.

Set ``RIESZVAR_NUMBA=0`` to force the pure-numpy code paths. The flag is read
once at import time; ``ORLICZ_THREADS`` caps numba's thread pool.
"""
import os

_FLAG = os.environ.get("RIESZVAR_NUMBA", "1").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numpy fallback when numba is missing
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("0", "false", "no", "off")

if USE_NUMBA:
    _threads = os.environ.get("ORLICZ_THREADS")
    if _threads:
        try:
            numba.set_num_threads(max(1, min(int(_threads), numba.config.NUMBA_NUM_THREADS)))
        except ValueError:
            pass


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    kwargs.setdefault("cache", True)
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


def backend():
    return "numba" if USE_NUMBA else "numpy"
