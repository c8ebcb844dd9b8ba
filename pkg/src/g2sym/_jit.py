"""Optional numba acceleration.

Hot kernels are decorated with :func:`njit`. When numba is missing, or the
environment variable ``G2SYM_DISABLE_NUMBA`` is set to a non-empty value other
than ``0``, the decorator returns the plain Python function, so the same source
runs as ordinary numpy code.
"""

import os

_flag = os.environ.get("G2SYM_DISABLE_NUMBA", "")
DISABLED = _flag not in ("", "0")

try:
    if DISABLED:
        raise ImportError
    import numba as _nb

    NUMBA_ACTIVE = True
except ImportError:
    _nb = None
    NUMBA_ACTIVE = False


def njit(func=None, **kwargs):
    """``numba.njit`` with caching, or identity when acceleration is off."""
    if func is None:
        return lambda f: njit(f, **kwargs)
    if not NUMBA_ACTIVE:
        return func
    opts = {"cache": True}
    opts.update(kwargs)
    return _nb.njit(**opts)(func)
