"""Numba acceleration shim.

Hot kernels ship in two variants: a scalar loop compiled with numba's
``@njit`` and a vectorized pure-numpy fallback. Both consume the same
pre-drawn random numbers, so they produce identical results. Selection
is global via the ``CASHLAB_NO_NUMBA`` environment variable (checked at
import time) or per call where a function takes an ``accel`` argument.
"""

import os


def _flag_disabled() -> bool:
    return os.environ.get("CASHLAB_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")


try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        """Identity decorator used when numba is unavailable."""

        def wrap(fn):
            return fn

        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return wrap


NUMBA_ENABLED = HAVE_NUMBA and not _flag_disabled()


def use_numba(accel: bool | None) -> bool:
    """Resolve a per-call acceleration request against the global flag."""
    if accel is None:
        return NUMBA_ENABLED
    return bool(accel) and HAVE_NUMBA
