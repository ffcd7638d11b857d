"""
Kernel backend selection.

The orbit enumeration kernel exists twice: a numba-compiled loop and a
vectorized numpy version. Setting CONJCOUNT_DISABLE_NUMBA=1 (or numba not
being importable) selects numpy.
"""
import os

_DISABLED = os.environ.get("CONJCOUNT_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError("numba disabled by CONJCOUNT_DISABLE_NUMBA")
    import numba
    # skip the TBB layer: the bundled TBB may be too old and only warns
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def default_backend():
    return "numba" if HAVE_NUMBA else "numpy"


def set_threads(n):
    """Set the numba thread count; no-op for the numpy backend."""
    if HAVE_NUMBA and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
