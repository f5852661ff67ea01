"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time: numba when it is installed and
``DEFECTLENS_NUMBA`` is not ``0``, numpy otherwise. Both backends grow
identical trees.
"""

import numpy as np

from .._accel import numba_enabled
from . import _numpy

BACKEND = "numba" if numba_enabled() else "numpy"

if BACKEND == "numba":
    from . import _numba as _impl
else:
    _impl = _numpy


def get_backend(name=None):
    """Return the kernel module for ``name`` ("numba" or "numpy")."""
    name = name or BACKEND
    if name == "numpy":
        return _numpy
    if name == "numba":
        from . import _numba

        return _numba
    raise ValueError(f"unknown kernel backend {name!r}")


def build_tree(X, y, w, counts, max_features, seed, backend=None):
    impl = get_backend(backend) if backend else _impl
    return impl.build_tree(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.int64),
        np.ascontiguousarray(w, dtype=np.float64),
        np.ascontiguousarray(counts, dtype=np.int64),
        int(max_features),
        np.uint64(seed),
    )


def predict_tree(feature, threshold, left, right, value, X, backend=None):
    impl = get_backend(backend) if backend else _impl
    return impl.predict_tree(
        feature, threshold, left, right, value, np.ascontiguousarray(X, dtype=np.float64)
    )


def shapley_from_values(v, p, weights, backend=None):
    impl = get_backend(backend) if backend else _impl
    return impl.shapley_from_values(
        np.ascontiguousarray(v, dtype=np.float64), int(p), np.ascontiguousarray(weights, dtype=np.float64)
    )
