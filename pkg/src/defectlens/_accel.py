"""Optional numba acceleration.

Set ``DEFECTLENS_NUMBA=0`` to force the pure-numpy kernels even when numba is
installed. Without numba the decorators below are no-ops.
"""

import os


def _noop_jit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def _have_numba():
    try:
        import numba  # noqa: F401

        return True
    except ImportError:
        return False


HAVE_NUMBA = _have_numba()

if HAVE_NUMBA:
    from numba import njit
else:
    njit = _noop_jit


def numba_enabled():
    flag = os.environ.get("DEFECTLENS_NUMBA", "1").strip().lower()
    return HAVE_NUMBA and flag not in ("0", "false", "no", "off")
