"""Shared builders for the test suite.

Systems are built from polynomial spec dicts so the exact-derivative
callables come from one audited code path.
"""

import numpy as np
import pytest

from roughflow.fields import system_from_polynomial


def mono(coef, *powers):
    return {"coef": float(coef), "powers": list(powers)}


def linear_decay_system(dim=1):
    """b(x) = -x, no diffusion."""
    return system_from_polynomial({
        "dim": dim,
        "b": [[mono(-1.0, *(1 if j == i else 0 for j in range(dim)))]
              for i in range(dim)],
    })


def additive_noise_system(dim=1, decay=0.0):
    """b(x) = -decay * x, sigma = identity."""
    spec = {
        "dim": dim,
        "driver_dim": dim,
        "sigma": [[[mono(1.0, *(0,) * dim)] if j == i else []
                   for j in range(dim)] for i in range(dim)],
    }
    if decay:
        spec["b"] = [[mono(-decay, *(1 if j == i else 0 for j in range(dim)))]
                     for i in range(dim)]
    return system_from_polynomial(spec)


def scalar_multiplicative_system():
    """sigma(x) = x, no drift (geometric dynamics)."""
    return system_from_polynomial({
        "dim": 1,
        "driver_dim": 1,
        "sigma": [[[mono(1.0, 1)]]],
    })


def square_drift_system():
    """b(x) = x^2 in one dimension (blows up from positive starts)."""
    return system_from_polynomial({"dim": 1, "b": [[mono(1.0, 2)]]})


@pytest.fixture
def rng():
    return np.random.default_rng(0)
