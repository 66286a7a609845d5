"""Kernel backend selection.

Prefers the compiled extension when importable; falls back to the numpy
implementations otherwise.  Set ROUGHFLOW_PURE_PYTHON=1 to force the fallback
(used by the benchmark and the backend-agreement tests).
"""

import os

import numpy as np

from . import _kernels_py

_impl = _kernels_py
if os.environ.get("ROUGHFLOW_PURE_PYTHON", "") != "1":
    try:
        from . import _kernels as _compiled
        _impl = _compiled
    except ImportError:
        pass

backend_name = _impl.BACKEND


def _c64(a):
    # compiled kernels take contiguous float64 buffers; coerce here so both
    # backends accept the same inputs (views, strided slices, float32)
    return np.ascontiguousarray(a, dtype=np.float64)


def holder_profile(times, values, alpha):
    return _impl.holder_profile(_c64(times), _c64(values), alpha)


def pvar_dp(values, p):
    return _impl.pvar_dp(_c64(values), p)


def max_increment_dyadic(times, values, n_levels):
    return _impl.max_increment_dyadic(_c64(times), _c64(values), n_levels)


def crossing_times(times, norms, radii):
    return _impl.crossing_times(_c64(times), _c64(norms), _c64(radii))
