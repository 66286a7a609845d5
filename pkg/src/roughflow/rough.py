"""Rough paths over sampled grids: lifts, reconstruction, rough integration.

A rough path stores its second level per consecutive grid cell only;
XX_{s,t} for wider grid pairs is reconstructed by telescoping
XX_{s,t} = sum_i XX_{t_i,t_{i+1}} + sum_i X_{s,t_i} (x) X_{t_i,t_{i+1}},
which is exactly the two-level consistency (Chen) relation summed over the
cells between s and t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .paths import SampledPath, TwoParamProcess, two_param_holder_norm


@dataclass(frozen=True)
class RoughPath:
    """Level-1 path plus per-cell second level and a nominal regularity.

    level1.values has shape (n, m); cells has shape (n-1, m, m) with
    cells[i] = XX_{t_i, t_{i+1}}.  alpha in (1/3, 1/2] is the declared
    Holder class (two-step regime).  pair_table optionally stores a dense
    XX table indexed [i, j]; when present, reconstruction reads it directly
    instead of telescoping (diagnostic mode, lets consistency defects show).
    """

    level1: SampledPath
    cells: np.ndarray
    alpha: float
    pair_table: np.ndarray | None = None

    def __post_init__(self):
        if not (1.0 / 3.0 < self.alpha <= 0.5):
            raise ValueError(f"alpha must lie in (1/3, 1/2], got {self.alpha}")
        n, m = self.level1.n, self.level1.dim
        cells = np.ascontiguousarray(np.asarray(self.cells, dtype=float))
        if cells.shape != (n - 1, m, m):
            raise ValueError(f"cells must have shape ({n - 1}, {m}, {m}), got {cells.shape}")
        cells = cells.copy()
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)
        if self.pair_table is not None:
            tab = np.asarray(self.pair_table, dtype=float)
            if tab.shape != (n, n, m, m):
                raise ValueError(f"pair_table must have shape ({n}, {n}, {m}, {m})")
            object.__setattr__(self, "pair_table", tab)

    @property
    def times(self):
        return self.level1.times

    @property
    def dim(self) -> int:
        return self.level1.dim

    @property
    def n(self) -> int:
        return self.level1.n

    def increments(self, i, j):
        return self.level1.values[j] - self.level1.values[i]

    def _prefix(self):
        """P2[j] = XX_{t_0, t_j}, built once by the cell recursion."""
        cached = getattr(self, "_prefix_cache", None)
        if cached is not None:
            return cached
        n, m = self.n, self.dim
        W = self.level1.values
        P2 = np.empty((n, m, m))
        P2[0] = 0.0
        for j in range(n - 1):
            cross = np.outer(W[j] - W[0], W[j + 1] - W[j])
            P2[j + 1] = P2[j] + self.cells[j] + cross
        object.__setattr__(self, "_prefix_cache", P2)
        return P2

    def second_level(self, i: int, j: int):
        """XX between grid indices i <= j (reconstructed, or read from the
        dense pair table in diagnostic mode)."""
        if not (0 <= i <= j < self.n):
            raise ValueError(f"need 0 <= i <= j < {self.n}, got ({i}, {j})")
        if self.pair_table is not None:
            return self.pair_table[i, j]
        P2 = self._prefix()
        W = self.level1.values
        return P2[j] - P2[i] - np.outer(W[i] - W[0], W[j] - W[i])

    def with_pair_table(self, table) -> "RoughPath":
        return RoughPath(self.level1, self.cells, self.alpha, pair_table=table)

    def dense_pair_table(self):
        """Materialize XX for all grid pairs (n x n x m x m); small grids only."""
        n, m = self.n, self.dim
        tab = np.zeros((n, n, m, m))
        for i in range(n):
            for j in range(i, n):
                tab[i, j] = self.second_level(i, j)
        return tab


def level2_reconstruct(rp: RoughPath, s: float, t: float):
    """XX_{s,t} for grid times s <= t; off-grid times are an error."""
    i = rp.level1.index_of(s)
    j = rp.level1.index_of(t)
    if i > j:
        raise ValueError(f"need s <= t, got ({s}, {t})")
    return rp.second_level(i, j)


def ito_lift(w: SampledPath, refine: int = 16, alpha: float = 0.5) -> RoughPath:
    """Level-2 lift by left-point sums on a finer subgrid.

    w is the finely sampled driver; the output grid keeps every refine-th
    point and each coarse cell's second level is the left-point sum
    sum_j W_{t_i, s_j} (x) W_{s_j, s_{j+1}} over the fine points inside.
    Reconstructed wide-pair values then telescope to the fine-grid left sum
    over the same window.
    """
    if refine < 1:
        raise ValueError("refine must be >= 1")
    n_fine = w.n
    if (n_fine - 1) % refine != 0:
        raise ValueError(f"fine cell count {n_fine - 1} not divisible by refine={refine}")
    m = w.dim
    coarse = SampledPath(w.times[::refine], w.values[::refine])
    deltas = np.diff(w.values, axis=0).reshape(-1, refine, m)      # (ncells, refine, m)
    within = np.cumsum(deltas, axis=1) - deltas                     # W_{t_i, s_j} per cell
    cells = np.einsum("crm,crk->cmk", within, deltas)
    return RoughPath(coarse, cells, alpha)


def pure_quadratic_lift(T: float, mesh: float, m: int = 1, alpha: float = 0.5) -> RoughPath:
    """Constant driver whose only content is quadratic time: level 1 is
    identically zero and each cell's second level is its length (scalar
    drivers only; the m > 1 tensor convention is deliberately not guessed).
    """
    if m != 1:
        raise ValueError("pure quadratic lift is defined for scalar drivers (m = 1)")
    n_cells = int(round(T / mesh))
    if abs(T / mesh - n_cells) > 1e-9 or n_cells < 1:
        raise ValueError(f"mesh {mesh} must divide T={T} into whole cells")
    times = np.linspace(0.0, T, n_cells + 1)
    level1 = SampledPath(times, np.zeros((n_cells + 1, 1)))
    cells = np.diff(times).reshape(-1, 1, 1)
    return RoughPath(level1, cells, alpha)


def chen_defect(rp: RoughPath, n_triples: int = 200, seed: int = 0) -> float:
    """Max two-level consistency defect over sampled triples s < u < t:

        | XX_{s,t} - XX_{s,u} - XX_{u,t} - X_{s,u} (x) X_{u,t} |

    Telescoped reconstruction satisfies this to rounding by construction;
    with a dense pair table attached (diagnostic mode) any injected
    inconsistency shows up here at its full magnitude.
    """
    n = rp.n
    rng = np.random.default_rng(seed)
    triples = set()
    # structured dyadic triples at a few scales
    for k in (2, 4, 8, 16):
        if n - 1 >= k:
            idx = np.linspace(0, n - 1, k + 1).astype(int)
            for a in range(len(idx) - 2):
                triples.add((int(idx[a]), int(idx[a + 1]), int(idx[a + 2])))
    while len(triples) < n_triples and n >= 3:
        i, u, j = sorted(rng.choice(n, size=3, replace=False))
        if i < u < j:
            triples.add((int(i), int(u), int(j)))
        if len(triples) >= (n * (n - 1) * (n - 2)) // 6:
            break  # every triple already collected
    worst = 0.0
    for i, u, j in triples:
        defect = (rp.second_level(i, j) - rp.second_level(i, u) - rp.second_level(u, j)
                  - np.outer(rp.increments(i, u), rp.increments(u, j)))
        worst = max(worst, float(np.max(np.abs(defect))))
    return worst


@dataclass(frozen=True)
class ControlledPath:
    """Integrand controlled by a driver: values Y (n, d, m) in L(R^m; R^d)
    and Gubinelli derivative Yprime (n, d, m, m) in L(R^m (x) R^m; R^d),
    sampled on the driver's grid."""

    times: np.ndarray
    Y: np.ndarray
    Yprime: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        Yp = np.asarray(self.Yprime, dtype=float)
        if Y.ndim != 3 or Y.shape[0] != t.shape[0]:
            raise ValueError(f"Y must have shape (n, d, m), got {Y.shape}")
        n, d, m = Y.shape
        if Yp.shape != (n, d, m, m):
            raise ValueError(f"Yprime must have shape ({n}, {d}, {m}, {m}), got {Yp.shape}")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Yprime", Yp)

    @classmethod
    def from_scalar(cls, times, y, yprime) -> "ControlledPath":
        """Scalar integrand against a scalar driver (d = m = 1)."""
        y = np.asarray(y, dtype=float).reshape(-1, 1, 1)
        yp = np.asarray(yprime, dtype=float).reshape(-1, 1, 1, 1)
        return cls(np.asarray(times, dtype=float), y, yp)


def rough_integral(cp: ControlledPath, rp: RoughPath, interval=None):
    """Compensated-sum rough integral with remainder samples.

    value = sum_i Y_{t_i} X_{t_i,t_{i+1}} + Yprime_{t_i} XX_{t_i,t_{i+1}}
    over the cells in the interval.  Also returns [(width, defect)] rows,
    where defect = |integral over [u,v] - Y_u X_{u,v} - Yprime_u XX_{u,v}|
    for a dyadic family of grid-aligned windows [u,v]; their log-log slope
    against width is the local error exponent of the compensated sum.
    """
    if cp.times.shape != rp.times.shape or not np.allclose(cp.times, rp.times):
        raise ValueError("controlled path and rough path must share a grid")
    i0, i1 = rp.level1.restrict_indices(interval)
    dX = np.diff(rp.level1.values, axis=0)
    terms = (np.einsum("idm,im->id", cp.Y[:-1], dX)
             + np.einsum("idmk,imk->id", cp.Yprime[:-1], rp.cells))
    prefix = np.vstack([np.zeros((1, terms.shape[1])), np.cumsum(terms, axis=0)])

    def window_value(a, b):
        return prefix[b] - prefix[a]

    value = window_value(i0, i1)
    samples = []
    n_cells = i1 - i0
    k = 1
    while 2**k <= min(n_cells, 32):
        cuts = i0 + (np.arange(2**k + 1) * n_cells) // 2**k
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b <= a:
                continue
            approx = (cp.Y[a] @ rp.increments(a, b)
                      + np.einsum("dmk,mk->d", cp.Yprime[a], rp.second_level(a, b)))
            defect = float(np.linalg.norm(window_value(a, b) - approx))
            samples.append((float(rp.times[b] - rp.times[a]), defect))
        k += 1
    return value, np.asarray(samples).reshape(-1, 2)


def controlled_from_driver(sigma, x_path: SampledPath, dsigma, rp: RoughPath) -> ControlledPath:
    """Controlled-path data for the integrand sigma(x) along a solution x
    controlled by rp: Y = sigma(x_t), Yprime = D sigma(x_t) sigma(x_t)."""
    n = x_path.n
    Y = np.stack([np.atleast_2d(sigma(x_path.values[i])) for i in range(n)])
    Yp = np.empty(Y.shape + (Y.shape[2],))
    for i in range(n):
        ds = dsigma(x_path.values[i])                       # (d, m, d)
        Yp[i] = np.einsum("dke,ej->djk", ds, Y[i])          # ((D sigma) sigma)[d, j, k]
    return ControlledPath(x_path.times, Y, Yp)


def remainder_norms(x: SampledPath, sigma, dsigma, d2sigma, rp: RoughPath,
                    interval=None, n_lambda: int = 9, n_pair_samples: int = 400,
                    seed: int = 0) -> dict:
    """Controlled-remainder statistics for the integrand sigma(x) against rp.

    Returns a record with
      a0, a1, a2      sup over interval samples of the (matricized) operator
                      norms of sigma, D sigma, D^2 sigma at x_u,
      a2prime         the same D^2 sup over segments between sampled state
                      pairs, evaluated on an n_lambda-point convex grid,
      R_eta_2alpha    discrete 2 alpha-Holder norm of R^eta_{u,v} =
                      eta_{u,v} - sigma(x_u) X_{u,v}, eta the compensated
                      running integral of sigma(x) against rp,
      R_x_2alpha      same for R^x_{u,v} = x_{u,v} - sigma(x_u) X_{u,v},
      r_eta_samples   (gap, sup |R^eta|) rows over dyadic gap windows.
    """
    if x.times.shape != rp.times.shape or not np.allclose(x.times, rp.times):
        raise ValueError("solution and rough path must share a grid")
    i0, i1 = x.restrict_indices(interval)
    rng = np.random.default_rng(seed)
    idx = np.unique(np.linspace(i0, i1, min(i1 - i0 + 1, 256)).astype(int))
    states = x.values[idx]

    def opnorm(T, n_in):
        mat = np.asarray(T, dtype=float).reshape(-1, n_in) if n_in else None
        if mat is None or mat.size == 0:
            return 0.0
        return float(np.linalg.norm(mat, 2))

    d = x.dim
    a0 = max(opnorm(np.atleast_2d(sigma(s)), np.atleast_2d(sigma(s)).shape[1]) for s in states)
    a1 = max(opnorm(dsigma(s), d) for s in states)
    a2 = max(opnorm(d2sigma(s), d * d) for s in states)

    pairs = rng.integers(0, idx.shape[0], size=(n_pair_samples, 2))
    lam = np.linspace(0.0, 1.0, n_lambda)
    a2p = 0.0
    for a, b in pairs:
        for lm in lam:
            z = (1 - lm) * states[a] + lm * states[b]
            a2p = max(a2p, opnorm(d2sigma(z), d * d))

    cp = controlled_from_driver(sigma, x, dsigma, rp)
    dX = np.diff(rp.level1.values, axis=0)
    terms = (np.einsum("idm,im->id", cp.Y[:-1], dX)
             + np.einsum("idmk,imk->id", cp.Yprime[:-1], rp.cells))
    eta = np.vstack([np.zeros((1, terms.shape[1])), np.cumsum(terms, axis=0)])

    grid = x.times[i0:i1 + 1]
    eta_w = eta[i0:i1 + 1]
    X_w = rp.level1.values[i0:i1 + 1]
    x_w = x.values[i0:i1 + 1]
    sig_w = cp.Y[i0:i1 + 1]

    def r_eta(i_idx, j_idx):
        inc = np.einsum("kdm,km->kd", sig_w[i_idx], X_w[j_idx] - X_w[i_idx])
        return eta_w[j_idx] - eta_w[i_idx] - inc

    def r_x(i_idx, j_idx):
        inc = np.einsum("kdm,km->kd", sig_w[i_idx], X_w[j_idx] - X_w[i_idx])
        return x_w[j_idx] - x_w[i_idx] - inc

    A_eta = TwoParamProcess.from_callable(
        grid, lambda s, t: r_eta(np.searchsorted(grid, s), np.searchsorted(grid, t)),
        codim=(x.dim,))
    A_x = TwoParamProcess.from_callable(
        grid, lambda s, t: r_x(np.searchsorted(grid, s), np.searchsorted(grid, t)),
        codim=(x.dim,))
    two_alpha = min(1.0, 2 * rp.alpha)
    record = {
        "a0": a0, "a1": a1, "a2": a2, "a2prime": a2p,
        "R_eta_2alpha": two_param_holder_norm(A_eta, two_alpha),
        "R_x_2alpha": two_param_holder_norm(A_x, two_alpha),
    }
    # dyadic-gap sup table for exponent regressions
    n_w = grid.shape[0]
    samples = []
    k = 1
    while 2**k <= min(n_w - 1, 64):
        lag = max(1, (n_w - 1) // 2**k)
        ii = np.arange(0, n_w - lag)
        vals = r_eta(ii, ii + lag)
        gaps = grid[ii + lag] - grid[ii]
        samples.append((float(np.mean(gaps)), float(np.max(np.linalg.norm(vals, axis=1)))))
        k += 1
    record["r_eta_samples"] = np.asarray(samples).reshape(-1, 2)
    return record
