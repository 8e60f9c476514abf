"""Numba switch.

Set ``WISHART_STEIN_DISABLE_NUMBA=1`` to force the pure-numpy paths.  Both
paths are always importable so they can be compared against each other.
"""

import os

_DISABLED = os.environ.get("WISHART_STEIN_DISABLE_NUMBA", "").strip().lower() in {
    "1", "true", "yes", "on"}

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func
        return decorator

NUMBA_ENABLED = HAVE_NUMBA and not _DISABLED


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"
