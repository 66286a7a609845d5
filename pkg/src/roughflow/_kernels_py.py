"""Pure-numpy implementations of the pair-scan kernels.

Reference backend for the compiled extension in ``_kernels.pyx``; both expose
the same four functions with identical semantics.  All inputs are float64
arrays, ``times`` strictly increasing, ``values`` of shape (n, d).
"""

import numpy as np

BACKEND = "python"


def holder_profile(times, values, alpha):
    """Running discrete alpha-Holder seminorm.

    out[j-1] = sup over pairs i < i' <= j of |x_{i'} - x_i| / (t_{i'} - t_i)^alpha,
    i.e. the seminorm of the path restricted to [t_0, t_j].  O(n^2).
    """
    n = times.shape[0]
    out = np.empty(n - 1)
    best = 0.0
    for j in range(1, n):
        diffs = values[j] - values[:j]
        norms = np.sqrt(np.einsum("id,id->i", diffs, diffs))
        gaps = times[j] - times[:j]
        cand = np.max(norms / gaps**alpha)
        if cand > best:
            best = cand
        out[j - 1] = best
    return out


def pvar_dp(values, p):
    """Dynamic program for discrete p-variation.

    best[j] = max over i < j of best[i] + |x_j - x_i|^p, best[0] = 0.  The
    last entry is the p-variation raised to the power p.  Partition sums are
    accumulated left to right, matching a left-associated brute-force sum
    term for term.  O(n^2).
    """
    n = values.shape[0]
    best = np.zeros(n)
    for j in range(1, n):
        diffs = values[j] - values[:j]
        norms = np.sqrt(np.einsum("id,id->i", diffs, diffs))
        best[j] = np.max(best[:j] + norms**p)
    return best


def max_increment_dyadic(times, values, n_levels):
    """Sup of increment norms over shrinking dyadic time windows.

    Level k covers pairs with 0 < t_v - t_u <= span * 2^{-k} where span is the
    full time range; returns M of length n_levels with M[k] the sup over that
    window (suffix-maximized so windows nest).  Entries stay 0.0 when no pair
    falls inside the window.
    """
    n = times.shape[0]
    span = times[-1] - times[0]
    raw = np.zeros(n_levels)
    for lag in range(1, n):
        diffs = values[lag:] - values[:-lag]
        norms = np.sqrt(np.einsum("id,id->i", diffs, diffs))
        gaps = times[lag:] - times[:-lag]
        # largest k with gap <= span * 2^-k
        k = np.floor(np.log2(span / gaps)).astype(np.int64)
        np.clip(k, -1, n_levels - 1, out=k)
        keep = k >= 0
        if np.any(keep):
            np.maximum.at(raw, k[keep], norms[keep])
    return np.maximum.accumulate(raw[::-1])[::-1]


def crossing_times(times, norms, radii):
    """First hitting times of an increasing radius ladder.

    For each radius r in the increasing array ``radii`` returns the first
    sample time with norms >= r, or nan when never reached.  O(n + len(radii)).
    """
    out = np.full(len(radii), np.nan)
    k = 0
    for i in range(times.shape[0]):
        v = norms[i]
        while k < len(radii) and v >= radii[k]:
            out[k] = times[i]
            k += 1
        if k == len(radii):
            break
    return out
