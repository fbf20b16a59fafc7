"""Numba switch.

Set ``AGIGAME_NUMBA=0`` to force the pure-numpy kernels (also used when numba
is not importable). The choice is fixed at import time.
"""

import os

_flag = os.environ.get("AGIGAME_NUMBA", "1").strip().lower()
_requested = _flag not in ("0", "false", "no", "off")

try:
    from numba import njit as _njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _requested


def njit(fn):
    """``numba.njit(cache=True)`` when numba is available, else identity."""
    if not HAVE_NUMBA:
        return fn
    return _njit(cache=True)(fn)
