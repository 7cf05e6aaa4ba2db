"""Numba switch.

Set ``HYPERCBO_DISABLE_NUMBA=1`` to force the pure-numpy kernels. The flag is
read once at import; :func:`set_backend` overrides it at runtime (used by the
tests and the backend benchmark).
"""
import functools
import os
from concurrent.futures import ThreadPoolExecutor

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover
    numba = None
    NUMBA_AVAILABLE = False

_DISABLED = os.environ.get("HYPERCBO_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

_backend = "numba" if (NUMBA_AVAILABLE and not _DISABLED) else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise.

    Compilation is lazy, so decorating costs nothing when the numpy backend is
    selected.
    """
    if NUMBA_AVAILABLE:
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return numba.njit(*args, **kwargs)

    def deco(f):
        @functools.wraps(f)
        def wrapper(*a, **kw):
            return f(*a, **kw)

        return wrapper

    if len(args) == 1 and callable(args[0]):
        return deco(args[0])
    return deco


def get_backend():
    return _backend


def set_backend(name):
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba is not installed")
    prev, _backend = _backend, name
    return prev


def default_jobs():
    return os.cpu_count() or 1


def parallel_map(fn, items, n_jobs=1):
    """``list(map(fn, items))``, on a thread pool when ``n_jobs > 1``.

    Output order never depends on scheduling. The numba kernels release the
    GIL, so threads give real speed-up on that backend.
    """
    items = list(items)
    if n_jobs is None:
        n_jobs = default_jobs()
    if n_jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(min(n_jobs, len(items))) as ex:
        return list(ex.map(fn, items))
