"""Compiled kernels vs the pure-Python fallback."""

import os
import subprocess
import sys

import numpy as np

from roughflow import _backend, _kernels, _kernels_py

FALLBACK_PROBE = """
import os
os.environ["ROUGHFLOW_PURE_PYTHON"] = "1"
from roughflow import _backend
assert _backend.backend_name == "python", _backend.backend_name
"""


def walk(seed, n, dim=1):
    rng = np.random.default_rng(seed)
    incs = rng.standard_normal((n - 1, dim)) / np.sqrt(n - 1)
    return np.ascontiguousarray(np.vstack([np.zeros(dim), np.cumsum(incs, axis=0)]))


def test_compiled_backend_selected():
    assert _backend.backend_name == "cython"


def test_env_var_forces_python_fallback():
    env = dict(os.environ, ROUGHFLOW_PURE_PYTHON="1")
    subprocess.run([sys.executable, "-c", FALLBACK_PROBE], check=True, env=env)


def test_holder_profile_backends_agree():
    t = np.linspace(0.0, 1.0, 257)
    x = walk(7, 257, dim=2)
    for alpha in (0.3, 0.5):
        a = _kernels.holder_profile(t, x, alpha)
        b = _kernels_py.holder_profile(t, x, alpha)
        assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_pvar_dp_backends_agree():
    for seed in range(5):
        x = walk(seed, 10, dim=2)
        for p in (1.0, 1.5, 2.0, 3.0):
            a = _kernels.pvar_dp(x, p)
            b = _kernels_py.pvar_dp(x, p)
            assert np.allclose(a, b, rtol=0, atol=1e-12), (seed, p)


def test_max_increment_backends_agree():
    t = np.linspace(0.0, 1.0, 513)
    x = walk(11, 513)
    a = _kernels.max_increment_dyadic(t, x, 8)
    b = _kernels_py.max_increment_dyadic(t, x, 8)
    assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_crossing_times_backends_agree():
    t = np.linspace(0.0, 2.0, 1025)
    norms = np.abs(walk(19, 1025)[:, 0]) * 3.0
    radii = np.array([0.0, 0.05, 0.1, 0.2, 50.0])
    a = _kernels.crossing_times(t, norms, radii)
    b = _kernels_py.crossing_times(t, norms, radii)
    assert np.array_equal(np.isnan(a), np.isnan(b))
    mask = ~np.isnan(np.asarray(a))
    assert np.array_equal(np.asarray(a)[mask], np.asarray(b)[mask])
