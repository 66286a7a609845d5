"""Vector field systems: drift b(t, x) and driver fields sigma(x).

Shapes: b -> (d,), sigma -> (d, m), Dsigma -> (d, m, d) with
Dsigma[i, k, e] = d sigma_{ik} / d x_e, D2sigma -> (d, m, d, e2) likewise,
Db -> (d, d) with Db[i, e] = d b_i / d x_e.  Derivatives are exact callables
(hand-coded or symbolic for polynomial systems) and can be cross-checked
against central finite differences with `check_derivatives`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np


@dataclass(frozen=True)
class VectorFieldSystem:
    """Right-hand-side data for the solvers.

    sigma and its derivatives may be None for drift-only systems; Db may be
    None when no derivative flow is needed.  representation records where
    the fields came from ("named:<id>" or "polynomial").
    """

    dim: int
    driver_dim: int = 0
    b: callable = None
    sigma: callable = None
    Db: callable = None
    Dsigma: callable = None
    D2sigma: callable = None
    representation: str = "named:anonymous"

    def drift(self, t, x):
        if self.b is None:
            return np.zeros(self.dim)
        return np.asarray(self.b(t, x), dtype=float).reshape(self.dim)

    def diffusion(self, x):
        if self.sigma is None:
            raise ValueError("system has no driver field sigma")
        return np.asarray(self.sigma(x), dtype=float).reshape(self.dim, self.driver_dim)


def _monomial_eval(monomials, x):
    total = 0.0
    for coef, powers in monomials:
        term = coef
        for xi, pw in zip(x, powers):
            if pw:
                term *= xi ** pw
        total += term
    return total


def _monomial_diff(monomials, e):
    out = []
    for coef, powers in monomials:
        if powers[e] == 0:
            continue
        new = list(powers)
        new[e] -= 1
        out.append((coef * powers[e], tuple(new)))
    return out


@dataclass(frozen=True)
class PolynomialField:
    """Multi-index polynomial entries with symbolic differentiation.

    entries[i] (vector case) or entries[i][k] (matrix case) is a list of
    monomials (coef, powers) with powers a length-d exponent tuple.
    """

    dim: int
    entries: tuple

    @classmethod
    def from_spec(cls, dim, spec_entries):
        def conv(monos):
            return tuple((float(m["coef"]), tuple(int(p) for p in m["powers"]))
                         for m in monos)
        if spec_entries and isinstance(spec_entries[0], list) and spec_entries[0] \
                and isinstance(spec_entries[0][0], list):
            entries = tuple(tuple(conv(cell) for cell in row) for row in spec_entries)
        else:
            entries = tuple(conv(row) for row in spec_entries)
        return cls(dim, entries)


def _poly_matrix_callables(field: PolynomialField, d, m):
    entries = field.entries

    def sigma(x):
        return np.array([[_monomial_eval(entries[i][k], x) for k in range(m)]
                         for i in range(d)])

    d_entries = [[[_monomial_diff(entries[i][k], e) for e in range(d)]
                  for k in range(m)] for i in range(d)]

    def Dsigma(x):
        return np.array([[[_monomial_eval(d_entries[i][k][e], x) for e in range(d)]
                          for k in range(m)] for i in range(d)])

    d2_entries = [[[[_monomial_diff(d_entries[i][k][e], f) for f in range(d)]
                    for e in range(d)] for k in range(m)] for i in range(d)]

    def D2sigma(x):
        return np.array([[[[_monomial_eval(d2_entries[i][k][e][f], x) for f in range(d)]
                           for e in range(d)] for k in range(m)] for i in range(d)])

    return sigma, Dsigma, D2sigma


def _poly_vector_callables(field: PolynomialField, d):
    entries = field.entries

    def b(t, x):
        return np.array([_monomial_eval(entries[i], x) for i in range(d)])

    d_entries = [[_monomial_diff(entries[i], e) for e in range(d)] for i in range(d)]

    def Db(t, x):
        return np.array([[_monomial_eval(d_entries[i][e], x) for e in range(d)]
                         for i in range(d)])

    return b, Db


def system_from_polynomial(spec: dict) -> VectorFieldSystem:
    """Build a system from a polynomial spec dict (or JSON file contents).

    Layout: {"dim": d, "driver_dim": m, "b": [coord -> monomials],
    "sigma": [coord -> [driver -> monomials]]}, each monomial
    {"coef": c, "powers": [p1..pd]}.  Either field may be omitted.
    """
    d = int(spec["dim"])
    m = int(spec.get("driver_dim", 0))
    b = Db = sigma = Dsigma = D2sigma = None
    if "b" in spec:
        bf = PolynomialField.from_spec(d, spec["b"])
        b, Db = _poly_vector_callables(bf, d)
    if "sigma" in spec:
        sf = PolynomialField.from_spec(d, spec["sigma"])
        sigma, Dsigma, D2sigma = _poly_matrix_callables(sf, d, m)
    return VectorFieldSystem(dim=d, driver_dim=m, b=b, sigma=sigma, Db=Db,
                             Dsigma=Dsigma, D2sigma=D2sigma,
                             representation="polynomial")


def load_polynomial_system(path) -> VectorFieldSystem:
    with open(path) as fh:
        return system_from_polynomial(json.load(fh))


def check_derivatives(sys: VectorFieldSystem, n_points: int = 100, seed: int = 0,
                      scale: float = 2.0, h: float = 1e-6, rtol: float = 1e-5) -> dict:
    """Validate exact derivative callables against central finite differences
    at random states; returns worst relative errors and raises on breach."""
    rng = np.random.default_rng(seed)
    pts = scale * rng.standard_normal((n_points, sys.dim))
    worst = {"Db": 0.0, "Dsigma": 0.0, "D2sigma": 0.0}

    def central(f, x, e):
        dx = np.zeros(sys.dim)
        dx[e] = h
        return (np.asarray(f(x + dx), dtype=float) - np.asarray(f(x - dx), dtype=float)) / (2 * h)

    for x in pts:
        ref = max(1.0, float(np.linalg.norm(x)))
        if sys.Db is not None:
            exact = np.asarray(sys.Db(0.0, x), dtype=float)
            fd = np.stack([central(lambda y: sys.b(0.0, y), x, e) for e in range(sys.dim)], axis=-1)
            err = np.max(np.abs(exact - fd)) / max(1.0, np.max(np.abs(exact)), ref)
            worst["Db"] = max(worst["Db"], float(err))
        if sys.Dsigma is not None:
            exact = np.asarray(sys.Dsigma(x), dtype=float)
            fd = np.stack([central(sys.sigma, x, e) for e in range(sys.dim)], axis=-1)
            err = np.max(np.abs(exact - fd)) / max(1.0, np.max(np.abs(exact)), ref)
            worst["Dsigma"] = max(worst["Dsigma"], float(err))
        if sys.D2sigma is not None:
            exact = np.asarray(sys.D2sigma(x), dtype=float)
            fd = np.stack([central(sys.Dsigma, x, e) for e in range(sys.dim)], axis=-1)
            err = np.max(np.abs(exact - fd)) / max(1.0, np.max(np.abs(exact)), ref)
            worst["D2sigma"] = max(worst["D2sigma"], float(err))
    bad = {k: v for k, v in worst.items() if v > rtol}
    if bad:
        raise ValueError(f"derivative check failed: {bad} exceed rtol={rtol}")
    return worst
