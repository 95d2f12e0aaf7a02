"""Numba dispatch switch.

Set ``QHESSIAN_DISABLE_NUMBA=1`` to run every kernel through its pure-numpy
path (useful for debugging and for benchmarking the two paths).
"""
import os

_disabled = os.environ.get("QHESSIAN_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def use_numba():
    return HAVE_NUMBA and not _disabled


def set_backend(name):
    """Force ``"numba"`` or ``"numpy"`` for the rest of the process."""
    global _disabled
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _disabled = name == "numpy"


def set_threads(k):
    if HAVE_NUMBA and k:
        numba.set_num_threads(max(1, min(int(k), numba.config.NUMBA_NUM_THREADS)))
