"""Sampled paths, two-parameter processes, and discrete regularity statistics.

Everything here works on explicit sample grids: a path is its samples, and all
Holder / p-variation statistics are the exact discrete quantities on the
stored grid (no continuum extrapolation; refine the mesh to tighten them).
Grids need not be uniform.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import _backend


def _as_times(times):
    t = np.ascontiguousarray(np.asarray(times, dtype=float))
    if t.ndim != 1 or t.shape[0] < 2:
        raise ValueError("need at least two sample times")
    if not np.all(np.diff(t) > 0):
        raise ValueError("sample times must be strictly increasing")
    return t


def _as_values(values, n):
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.ndim != 2 or v.shape[0] != n:
        raise ValueError(f"values must have shape (n, d) with n={n}, got {v.shape}")
    return np.ascontiguousarray(v)


@dataclass(frozen=True)
class SampledPath:
    """A path sampled on a strictly increasing time grid.

    values has shape (n, d); scalar input is promoted to (n, 1).  Instances
    are immutable: the arrays are copied on construction and marked
    read-only, so paths can be shared freely across threads.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = _as_times(self.times)
        v = _as_values(self.values, t.shape[0])
        t = t.copy()
        v = v.copy()
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.times.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def span(self):
        return float(self.times[0]), float(self.times[-1])

    def index_of(self, t, tol=1e-12):
        """Grid index of time t; error if t is not a grid point."""
        i = int(np.searchsorted(self.times, t))
        scale = max(1.0, abs(self.times[-1]))
        for j in (i - 1, i, i + 1):
            if 0 <= j < self.n and abs(self.times[j] - t) <= tol * scale:
                return j
        raise ValueError(f"time {t} is not on the sample grid")

    def restrict_indices(self, interval):
        """Index range [i0, i1] covering grid points inside the interval."""
        if interval is None:
            return 0, self.n - 1
        s, t = interval
        if not (self.times[0] - 1e-12 <= s < t <= self.times[-1] + 1e-12):
            raise ValueError(f"interval {interval} not inside sampled range {self.span}")
        i0 = int(np.searchsorted(self.times, s, side="left"))
        while i0 < self.n and self.times[i0] < s - 1e-12:
            i0 += 1
        i1 = int(np.searchsorted(self.times, t, side="right")) - 1
        while i1 >= 0 and self.times[i1] > t + 1e-12:
            i1 -= 1
        if i1 - i0 < 1:
            raise ValueError(f"degenerate interval {interval}: fewer than two grid points")
        return i0, i1

    def norms(self):
        return np.linalg.norm(self.values, axis=1)

    def to_csv(self, target):
        """Write as CSV with header ``t, x1, ..., xd``."""
        header = "t, " + ", ".join(f"x{i+1}" for i in range(self.dim))
        data = np.column_stack([self.times, self.values])
        if hasattr(target, "write"):
            np.savetxt(target, data, delimiter=", ", header=header, comments="")
        else:
            with open(target, "w") as fh:
                np.savetxt(fh, data, delimiter=", ", header=header, comments="")

    @classmethod
    def from_csv(cls, source) -> "SampledPath":
        if hasattr(source, "read"):
            raw = source.read()
        else:
            with open(source) as fh:
                raw = fh.read()
        lines = raw.strip().splitlines()
        if not lines or not lines[0].lstrip().lower().startswith("t"):
            raise ValueError("expected header line starting with 't'")
        data = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
        return cls(times=data[:, 0], values=data[:, 1:])


class TwoParamProcess:
    """A two-parameter array A_{s,t} over pairs of grid times, s <= t.

    Backed either by a dense table (table[i, j] = A_{t_i, t_j}), a vectorized
    pair callable, or a base path (A = increments, the fast common case).
    The diagonal must vanish: A_{t,t} = 0.
    """

    def __init__(self, grid, *, table=None, func=None, base_values=None, codim=None):
        self.grid = _as_times(grid)
        n = self.grid.shape[0]
        self._table = None
        self._func = None
        self._base = None
        if sum(x is not None for x in (table, func, base_values)) != 1:
            raise ValueError("exactly one of table, func, base_values must be given")
        if table is not None:
            tab = np.asarray(table, dtype=float)
            if tab.shape[:2] != (n, n):
                raise ValueError(f"table must have leading shape ({n}, {n})")
            self._table = tab
            self.codim = tab.shape[2:]
        elif base_values is not None:
            self._base = _as_values(base_values, n)
            self.codim = (self._base.shape[1],)
        else:
            self._func = func
            if codim is None:
                probe = np.asarray(func(self.grid[:1], self.grid[-1:]), dtype=float)
                codim = probe.shape[1:]
            self.codim = tuple(codim)
        self._check_diagonal()

    @classmethod
    def from_path_increments(cls, path: SampledPath) -> "TwoParamProcess":
        return cls(path.times, base_values=path.values)

    @classmethod
    def from_table(cls, grid, table) -> "TwoParamProcess":
        return cls(grid, table=table)

    @classmethod
    def from_callable(cls, grid, func, codim=None) -> "TwoParamProcess":
        """func(s_array, t_array) -> values of shape (k, *codim), vectorized."""
        return cls(grid, func=func, codim=codim)

    @property
    def is_increments(self) -> bool:
        return self._base is not None

    @property
    def base_values(self):
        return self._base

    def eval_pairs(self, i_idx, j_idx):
        """A at grid index pairs; returns shape (k, *codim)."""
        i_idx = np.atleast_1d(np.asarray(i_idx, dtype=int))
        j_idx = np.atleast_1d(np.asarray(j_idx, dtype=int))
        if self._base is not None:
            return self._base[j_idx] - self._base[i_idx]
        if self._table is not None:
            return self._table[i_idx, j_idx]
        out = np.asarray(self._func(self.grid[i_idx], self.grid[j_idx]), dtype=float)
        return out.reshape((len(i_idx),) + self.codim)

    def _check_diagonal(self, n_samples=64, tol=1e-9):
        n = self.grid.shape[0]
        idx = np.unique(np.linspace(0, n - 1, min(n, n_samples)).astype(int))
        vals = self.eval_pairs(idx, idx)
        mag = float(np.max(np.abs(vals))) if vals.size else 0.0
        if mag > tol:
            raise ValueError(f"two-parameter process has nonzero diagonal (max |A_tt| = {mag:.3g})")

    def _pair_norms(self, i_idx, j_idx):
        vals = self.eval_pairs(i_idx, j_idx)
        flat = vals.reshape(vals.shape[0], -1)
        return np.sqrt(np.einsum("ij,ij->i", flat, flat))


# grids beyond this get strided anchor rows in the generic two-parameter scan
_GENERIC_SCAN_LIMIT = 2048


def holder_norm(path: SampledPath, alpha: float, interval=None) -> float:
    """Discrete alpha-Holder seminorm: sup over grid pairs u < v in the
    interval of |x_v - x_u| / (v - u)^alpha.  Value depends on the grid.
    """
    if not (0 < alpha <= 1):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    i0, i1 = path.restrict_indices(interval)
    prof = _backend.holder_profile(path.times[i0:i1 + 1], path.values[i0:i1 + 1], alpha)
    return float(prof[-1])


def two_param_holder_norm(A: TwoParamProcess, alpha: float, interval=None) -> float:
    """sup over grid pairs u < v in the interval of |A_{u,v}| / (v - u)^alpha."""
    if not (0 < alpha <= 1):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    dummy = SampledPath(A.grid, np.zeros_like(A.grid))
    i0, i1 = dummy.restrict_indices(interval)
    if A.is_increments:
        prof = _backend.holder_profile(A.grid[i0:i1 + 1], A.base_values[i0:i1 + 1], alpha)
        return float(prof[-1])
    rows = np.arange(i0, i1)
    if rows.shape[0] > _GENERIC_SCAN_LIMIT:
        stride = int(np.ceil(rows.shape[0] / _GENERIC_SCAN_LIMIT))
        rows = rows[::stride]
    best = 0.0
    for u in rows:
        vs = np.arange(u + 1, i1 + 1)
        norms = A._pair_norms(np.full(vs.shape[0], u), vs)
        gaps = A.grid[vs] - A.grid[u]
        cand = float(np.max(norms / gaps**alpha))
        if cand > best:
            best = cand
    return best


def holder_profile(A: TwoParamProcess, alpha_prime: float, t0: float):
    """Window growth of the Holder seminorm from a fixed left endpoint.

    Returns (eps, N) with eps the grid offsets t - t0 for grid times t > t0
    and N(eps) = the discrete alpha'-seminorm of A over [t0, t0 + eps].
    N is non-decreasing by construction.
    """
    if not (0 < alpha_prime <= 1):
        raise ValueError(f"alpha' must lie in (0, 1], got {alpha_prime}")
    dummy = SampledPath(A.grid, np.zeros_like(A.grid))
    i0 = dummy.index_of(t0)
    if i0 >= A.grid.shape[0] - 1:
        raise ValueError("t0 must leave at least one grid point to its right")
    eps = A.grid[i0 + 1:] - A.grid[i0]
    if A.is_increments:
        N = _backend.holder_profile(A.grid[i0:], A.base_values[i0:], alpha_prime)
        return eps, np.asarray(N)
    n = A.grid.shape[0]
    N = np.empty(n - 1 - i0)
    best = 0.0
    for j in range(i0 + 1, n):
        us = np.arange(i0, j)
        norms = A._pair_norms(us, np.full(us.shape[0], j))
        gaps = A.grid[j] - A.grid[us]
        cand = float(np.max(norms / gaps**alpha_prime))
        if cand > best:
            best = cand
        N[j - i0 - 1] = best
    return eps, N


def p_variation(path: SampledPath, p: float, interval=None) -> float:
    """Exact discrete p-variation over grid partitions.

    (sup over subsets of grid points of sum |x_{t_{i+1}} - x_{t_i}|^p)^{1/p},
    computed by an O(n^2) dynamic program over the last partition point.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    i0, i1 = path.restrict_indices(interval)
    best = _backend.pvar_dp(path.values[i0:i1 + 1], p)
    return float(best[-1]) ** (1.0 / p)


def p_variation_bruteforce(path: SampledPath, p: float) -> float:
    """Enumerates every partition (all subsets of interior grid points).

    Oracle for the dynamic program; restricted to small paths since there are
    2^(n-2) partitions.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    n = path.n
    if n > 14:
        raise ValueError(f"brute force limited to 14 points, got {n}")
    vals = path.values
    interior = list(range(1, n - 1))
    best = 0.0
    for r in range(len(interior) + 1):
        for combo in combinations(interior, r):
            pts = [0, *combo, n - 1]
            total = 0.0
            for a, b in zip(pts[:-1], pts[1:]):
                d = vals[b] - vals[a]
                total = total + np.sqrt((d * d).sum()) ** p
            if total > best:
                best = total
    return float(best) ** (1.0 / p)


def holder_exponent_estimate(path: SampledPath, max_points: int = 8192):
    """Log-log slope estimate of the path's Holder exponent.

    Regresses log sup_{|u-v| <= h} |x_v - x_u| on log h over the four finest
    dyadic window sizes h = span * 2^{-k} no smaller than the mean grid gap.
    The exponent is a small-scale quantity; windows comparable to the span
    track the global range instead and would flatten the fit, so only the
    fine-scale tail enters.  Returns (slope, levels) where levels is the
    (h, sup) table used.  Grids with more than max_points samples are strided
    down (keeps the scan quadratic in at most max_points).
    """
    if path.n < 64:
        raise ValueError(f"need at least 64 samples, got {path.n}")
    times, values = path.times, path.values
    if path.n > max_points:
        stride = int(np.ceil(path.n / max_points))
        times, values = times[::stride], values[::stride]
    span = times[-1] - times[0]
    mean_gap = span / (times.shape[0] - 1)
    k_max = int(np.floor(np.log2(span / mean_gap)))
    k_max = max(k_max, 2)
    M = _backend.max_increment_dyadic(times, values, k_max + 1)
    ks = np.arange(max(k_max - 3, 1), k_max + 1)
    h = span * 2.0 ** (-ks.astype(float))
    sup = np.asarray(M)[ks]
    keep = sup > 0
    if keep.sum() < 2:
        raise ValueError("not enough occupied dyadic windows for a slope estimate")
    slope = np.polyfit(np.log(h[keep]), np.log(sup[keep]), 1)[0]
    return float(slope), np.column_stack([h[keep], sup[keep]])
