"""Non-explosion certificates and growth-condition audits.

Nothing in this module proves a theorem.  The checkers turn the qualitative
statements "the drift points inward enough" and "the driver does not move
too much while the state crosses a radius rung" into machine-checkable
reports evaluated on sampled trajectories and drivers.

Main pieces:

* GrowthSpec packages the control function f and the exponents shared by
  every checker; ``growth_control`` provides the stock controls.
* check_radial_growth / check_orthogonal_growth / check_rde_growth evaluate
  the pointwise drift and diffusion growth conditions on state samples.
* base_radius, level_time_scale and escape_time_envelope compute the radius
  floor R0, the per-rung minimum crossing times delta_k and the cumulative
  escape-time table psi with its monotone inverse.
* estimate_K measures the driver's windowed oscillation constant and
  crossing_audit checks a trajectory's rung crossings against the
  gap-and-oscillation certificate, producing a CertificateReport.
* difference_energy_check verifies the quadratic energy bound for the
  difference x - gamma along a drift-plus-curve run.
* pvar_audit splits the rungs into oscillation-heavy and quiet ones and
  bounds the heavy rungs' time budget by the driver's p-variation.
* one_point_propagation_audit propagates a grid of starts under one shared
  driver realization and audits the difference-ladder crossing gaps.
* positivity_margin and strong_completeness_check / hq_value are static
  condition checkers used by the gallery notes.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from ._backend import crossing_times
from .fields import VectorFieldSystem
from .paths import SampledPath, holder_norm, p_variation
from .solvers import COMPLETED, StepControl, young_solve

_K_FLOOR = 1e-12

GROWTH_CONTROLS = {
    "affine": lambda s: 1.0 + s,
    "loglinear": lambda s: (1.0 + s) * np.log(np.e + s),
    "linear": lambda s: 1.0 * s,
}


def growth_control(name):
    """Stock control function by name ("affine", "loglinear", "linear")."""
    try:
        return GROWTH_CONTROLS[name]
    except KeyError:
        raise KeyError(
            "unknown control %r; available: %s" % (name, ", ".join(sorted(GROWTH_CONTROLS)))
        ) from None


def _eval_elementwise(fn, s):
    """Evaluate a scalar function elementwise on an array.

    Vectorized callables are used directly; constants are broadcast;
    scalar-only callables (those that raise on array input) are mapped.
    """
    arr = np.asarray(s, dtype=float)
    try:
        out = np.asarray(fn(arr), dtype=float)
    except (TypeError, ValueError):
        out = np.asarray([fn(float(v)) for v in np.atleast_1d(arr).ravel()], dtype=float)
        out = out.reshape(arr.shape)
    if out.shape != arr.shape:
        out = np.broadcast_to(out, arr.shape).astype(float)
    return out


def _eval_scalar(fn, v):
    return float(_eval_elementwise(fn, np.asarray([v]))[0])


@dataclass(frozen=True)
class GrowthSpec:
    """Control function and exponents shared by the certificate checkers.

    f must be nonnegative and non-decreasing (probed on a sample ladder at
    construction).  beta in (1, 2) is the orthogonal-growth exponent, kappa
    and theta scale the driver-field growth, alpha is the driver's Holder
    exponent, a is the small-ball radius and b_a_T the drift sup over that
    ball.
    """

    f: callable
    beta: float
    kappa: float = 0.0
    theta: float = 0.0
    alpha: float = 1.0
    a: float = 1.0
    b_a_T: float = 0.0
    f_name: str = "custom"

    def __post_init__(self):
        if not 1.0 < self.beta < 2.0:
            raise ValueError("beta must lie in (1, 2)")
        if self.kappa < 0.0:
            raise ValueError("kappa must be nonnegative")
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        if self.a <= 0.0:
            raise ValueError("small-ball radius a must be positive")
        if self.b_a_T < 0.0:
            raise ValueError("b_a_T must be nonnegative")
        ladder = np.concatenate([[0.0], np.geomspace(1e-3, 1e4, 57)])
        vals = self.control(ladder)
        if np.any(vals < 0.0):
            raise ValueError("control f must be nonnegative")
        slack = 1e-9 * np.maximum(1.0, np.abs(vals[:-1]))
        if np.any(np.diff(vals) < -slack):
            raise ValueError("control f must be non-decreasing")

    @classmethod
    def from_preset(cls, name, beta, **kwargs):
        return cls(f=growth_control(name), beta=beta, f_name=name, **kwargs)

    def control(self, s):
        """Evaluate f elementwise; scalar in, scalar out."""
        out = _eval_elementwise(self.f, s)
        return float(out) if np.ndim(s) == 0 else out

    def describe(self):
        return {
            "f": self.f_name,
            "beta": self.beta,
            "kappa": self.kappa,
            "theta": self.theta,
            "alpha": self.alpha,
            "a": self.a,
            "b_a_T": self.b_a_T,
        }


@dataclass(frozen=True)
class ViolationRecord:
    """Worst-case margin of a pointwise inequality over a sample set.

    margin is max over samples of (left side - bound); nonpositive means
    every sample satisfies the inequality.
    """

    condition: str
    margin: float
    state: tuple
    n_samples: int

    @property
    def passed(self):
        return self.margin <= 0.0


def _sample_states(samples):
    xs = np.asarray(samples, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    nrm = np.linalg.norm(xs, axis=1)
    if np.any(nrm == 0.0):
        raise ValueError("samples must exclude the origin")
    return xs, nrm


def check_radial_growth(sys, f, samples, t=0.0):
    """Worst violation of the inward-radial bound <x/|x|, b(t,x)> <= f(|x|).

    samples: (n, d) states away from the origin; f: control function or
    GrowthSpec.  Returns a ViolationRecord.
    """
    fn = f.f if isinstance(f, GrowthSpec) else f
    xs, nrm = _sample_states(samples)
    fv = _eval_elementwise(fn, nrm)
    radial = np.array([float(np.dot(x, sys.drift(t, x))) for x in xs]) / nrm
    margins = radial - fv
    i = int(np.argmax(margins))
    return ViolationRecord("radial-growth", float(margins[i]), tuple(xs[i]), len(xs))


def check_orthogonal_growth(sys, f, beta, samples, t=0.0):
    """Worst violation of the orthogonal-drift bound.

    The component of b(t, x) orthogonal to x must stay below
    (1 + |x|) f(|x|)^beta at every sample.
    """
    fn = f.f if isinstance(f, GrowthSpec) else f
    xs, nrm = _sample_states(samples)
    fv = _eval_elementwise(fn, nrm)
    margins = np.empty(len(xs))
    for i, x in enumerate(xs):
        bv = sys.drift(t, x)
        unit = x / nrm[i]
        orth = bv - np.dot(unit, bv) * unit
        margins[i] = np.linalg.norm(orth) - (1.0 + nrm[i]) * fv[i] ** beta
    i = int(np.argmax(margins))
    return ViolationRecord("orthogonal-growth", float(margins[i]), tuple(xs[i]), len(xs))


def _op_norm(a, n_iter=200, tol=1e-13):
    """Matrix 2-norm by power iteration on A^T A (deterministic start)."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    n = a.shape[1]
    v = np.cos(np.arange(n) + 0.7)  # generic fixed direction
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(n_iter):
        w = a.T @ (a @ v)
        s = float(np.linalg.norm(w))
        if s == 0.0:
            return 0.0
        v = w / s
        if abs(s - lam) <= tol * max(1.0, s):
            lam = s
            break
        lam = s
    return math.sqrt(lam)


def check_rde_growth(sys, spec: GrowthSpec, samples, young=False):
    """Per-condition worst violations of the driver-field growth scales.

    Checks |b| <= f^(1+kappa*alpha) and |D^n sigma| <= f^((theta-n*kappa)*alpha)
    for n = 0, 1, 2 (n = 0, 1 only when young=True).  Tensor operator norms
    are estimated by power iteration after matricizing the derivative axes.
    Returns a dict keyed "drift", "sigma", "dsigma" (and "d2sigma").
    """
    if not young and spec.kappa >= 0.5:
        raise ValueError("rough-driver audits need kappa < 1/2")
    xs, nrm = _sample_states(samples)
    fv = _eval_elementwise(spec.f, nrm)
    ka = spec.kappa * spec.alpha
    with np.errstate(divide="ignore"):
        bounds = {
            "drift": fv ** (1.0 + ka),
            "sigma": fv ** (spec.theta * spec.alpha),
            "dsigma": fv ** ((spec.theta - spec.kappa) * spec.alpha),
        }
        if not young:
            bounds["d2sigma"] = fv ** ((spec.theta - 2.0 * spec.kappa) * spec.alpha)

    d, m = sys.dim, sys.driver_dim
    sizes = {
        "drift": lambda x: float(np.linalg.norm(sys.drift(0.0, x))),
        "sigma": lambda x: _op_norm(sys.diffusion(x)),
        "dsigma": lambda x: _op_norm(np.asarray(sys.Dsigma(x), dtype=float).reshape(d * m, d)),
    }
    if not young:
        sizes["d2sigma"] = lambda x: _op_norm(
            np.asarray(sys.D2sigma(x), dtype=float).reshape(d * m, d * d)
        )

    out = {}
    for name, size in sizes.items():
        vals = np.array([size(x) for x in xs])
        margins = vals - bounds[name]
        i = int(np.argmax(margins))
        out[name] = ViolationRecord(name, float(margins[i]), tuple(xs[i]), len(xs))
    return out


def base_radius(K, b_a_T):
    """Radius floor for the crossing audits.

    The positive root of R^2 - 2(2K+1)R - 2K(2+b_a_T) = 0, in closed form
    R0 = (2K+1) + sqrt((2K+1)^2 + 2K(2+b_a_T)).  Audits only certify rungs
    above max(R0, |x_0|).
    """
    if K < 0.0 or b_a_T < 0.0:
        raise ValueError("K and b_a_T must be nonnegative")
    u = 2.0 * K + 1.0
    return u + math.sqrt(u * u + 2.0 * K * (2.0 + b_a_T))


def level_time_scale(spec: GrowthSpec, R, K, k):
    """Minimum time budget delta_k for crossing from rung radius R*k to R*(k+1).

    delta_k = min(1, 1/f(R(k+1)), (a/K)^(1/(beta-1))).  Accepts a scalar or
    array rung index.
    """
    if R <= 0.0 or K <= 0.0:
        raise ValueError("R and K must be positive")
    ks = np.asarray(k, dtype=float)
    fv = _eval_elementwise(spec.f, R * (ks + 1.0))
    if np.any(fv == 0.0):
        raise ValueError("control must be positive at the ladder")
    cap = (spec.a / K) ** (1.0 / (spec.beta - 1.0))
    out = np.minimum(1.0, np.minimum(1.0 / fv, cap))
    return float(out) if np.ndim(k) == 0 else out


@dataclass(frozen=True)
class EscapeEnvelope:
    """Cumulative escape-time table psi(N) = sum_{k <= N+1} delta_k.

    psi maps a rung index to the least time the certificate allows for
    reaching that rung; psi_inv maps a time horizon to the largest rung
    reachable within it.  Both interpolate linearly between integer rungs
    and are exact inverses at the nodes.  exhausted marks a rung-time
    series that is numerically summable (or falls short of the requested
    horizon): beyond its total the envelope excludes nothing.
    """

    nodes: np.ndarray
    values: np.ndarray
    exhausted: bool
    config: dict = dc_field(default_factory=dict)

    def psi(self, n):
        n = np.asarray(n, dtype=float)
        if np.any(n < self.nodes[0]) or np.any(n > self.nodes[-1]):
            raise ValueError("rung index outside the tabulated range")
        out = np.interp(n, self.nodes, self.values)
        return float(out) if out.ndim == 0 else out

    def psi_inv(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t > self.values[-1]):
            raise ValueError("time beyond envelope coverage; increase k_max")
        out = np.interp(np.maximum(t, self.values[0]), self.values, self.nodes)
        return float(out) if out.ndim == 0 else out


def escape_time_envelope(spec: GrowthSpec, R, K, k_max, horizon=None):
    """Tabulate the escape-time envelope psi over rungs 0..k_max.

    The exhausted flag is raised when the delta_k tail decays faster than
    k^-1.1 on a 16x probe ladder (a numerically summable series: the
    envelope then has a finite ceiling no matter how far it is extended),
    or when a requested horizon exceeds the tabulated total.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    deltas = level_time_scale(spec, R, K, np.arange(k_max + 2))
    csum = np.cumsum(deltas)
    nodes = np.arange(k_max + 1, dtype=float)
    values = csum[1 : k_max + 2]  # psi(N) = csum[N+1]

    tail_k = np.arange(k_max + 2, 16 * (k_max + 2))
    tail = level_time_scale(spec, R, K, tail_k)
    if np.any(deltas <= 0.0) or np.all(tail <= 0.0):
        exhausted = True
    else:
        good = tail > 0.0
        slope = float(np.polyfit(np.log(tail_k[good] + 1.0), np.log(tail[good]), 1)[0])
        exhausted = slope < -1.1
    if horizon is not None and float(values[-1]) < horizon:
        exhausted = True
    cfg = {"R": float(R), "K": float(K), "k_max": int(k_max), **spec.describe()}
    return EscapeEnvelope(nodes=nodes, values=values, exhausted=exhausted, config=cfg)


def _envelope_for_horizon(spec, R, K, horizon, k_cap=4096):
    k = 8
    env = escape_time_envelope(spec, R, K, k, horizon=horizon)
    while env.values[-1] < horizon and k < k_cap:
        k *= 4
        env = escape_time_envelope(spec, R, K, min(k, k_cap), horizon=horizon)
    return env


def estimate_K(eta: SampledPath, beta, n_anchors=1025):
    """Windowed oscillation constant of the effective driver.

    Discrete (beta-1)-Holder seminorm of eta over a coarse uniform-in-time
    anchor set.  The coarse subsample is deliberate: measured on every
    solver step, each audit window would appear verbatim in the sup
    defining K and the oscillation check would become a tautology.
    """
    if not 1.0 < beta < 2.0:
        raise ValueError("beta must lie in (1, 2)")
    anchors = np.linspace(float(eta.times[0]), float(eta.times[-1]), n_anchors)
    idx = np.unique(np.clip(np.searchsorted(eta.times, anchors), 0, eta.n - 1))
    sub = SampledPath(eta.times[idx], eta.values[idx])
    return holder_norm(sub, beta - 1.0)


@dataclass(frozen=True)
class LevelRecord:
    """Audit outcome for one rung of the radius ladder.

    gap is the observed crossing gap to the next rung (censored at the
    horizon when the next rung is never reached); oscillation is the
    driver's sup deviation over the rung window, compared against bound =
    K * delta^(beta-1).  A window on which the driver is constant carries
    no information and is marked vacuous.
    """

    k: int
    radius: float
    tau: float
    delta: float
    gap: float
    censored: bool
    oscillation: float
    bound: float
    vacuous: bool
    verdict: str

    @property
    def residual(self):
        return self.oscillation - self.bound


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of a crossing audit: per-rung records plus the envelope."""

    R: float
    K: float
    R0: float
    levels: tuple
    envelope: EscapeEnvelope | None
    overall: str  # "pass" | "fail" | "inconclusive"
    config: dict = dc_field(default_factory=dict)

    def to_json(self):
        payload = {
            "R": self.R,
            "K": self.K,
            "R0": self.R0,
            "overall": self.overall,
            "config": self.config,
            "levels": [
                {
                    "k": l.k,
                    "radius": l.radius,
                    "tau": l.tau,
                    "delta": l.delta,
                    "gap": l.gap,
                    "censored": l.censored,
                    "oscillation": l.oscillation,
                    "bound": l.bound,
                    "vacuous": l.vacuous,
                    "verdict": l.verdict,
                }
                for l in self.levels
            ],
        }
        if self.envelope is not None:
            payload["envelope"] = {
                "nodes": [float(v) for v in self.envelope.nodes],
                "values": [float(v) for v in self.envelope.values],
                "exhausted": self.envelope.exhausted,
            }
        return json.dumps(payload, sort_keys=True, indent=2)

    def table(self):
        """Fixed-width per-rung table for terminal output."""
        rows = ["   k   radius        delta          gap   oscillation        bound  verdict"]
        for l in self.levels:
            gap = "%12.5g%s" % (l.gap, "*" if l.censored else " ")
            rows.append(
                "%4d %8.3f %12.5g %s %12.5g %12.5g  %s%s"
                % (
                    l.k,
                    l.radius,
                    l.delta,
                    gap,
                    l.oscillation,
                    l.bound,
                    l.verdict,
                    " (vacuous)" if l.vacuous else "",
                )
            )
        rows.append("overall: %s   (R=%.4g, K=%.4g, R0=%.4g)" % (self.overall, self.R, self.K, self.R0))
        return "\n".join(rows)


def crossing_audit(traj, eta, spec: GrowthSpec, R, K=None, k_max=256):
    """Audit a trajectory's radius-ladder crossings against the
    gap-and-oscillation certificate.

    For each rung radius R*k reached by the state the certificate demands
    (i) the next rung is not reached within delta_k and (ii) the effective
    driver moves by at most K*delta_k^(beta-1) over the rung window
    [tau, tau + min(delta_k, gap)].  eta is the effective driver (the raw
    driving curve for drift-plus-curve runs, the solver-accumulated driver
    integral otherwise); None takes traj.eta.  K defaults to estimate_K on
    eta, floored at a tiny positive value.

    Rungs whose window sees no driver movement are vacuous; an audit with
    only vacuous rungs returns overall "inconclusive" rather than "pass".
    Overall "pass" additionally requires R > max(R0, |x_0|).
    """
    if eta is None:
        eta = traj.eta
    if eta is None:
        raise ValueError("no effective driver recorded; pass eta explicitly")
    times = traj.path.times
    norms = traj.path.norms()
    T = float(times[-1])
    estimated = K is None
    if estimated:
        K = estimate_K(eta, spec.beta)
    K = max(float(K), _K_FLOOR)
    R = float(R)
    if R <= 0.0:
        raise ValueError("R must be positive")
    R0 = base_radius(K, spec.b_a_T)
    x0n = float(norms[0])

    n_rungs = int(min(np.floor(float(np.max(norms)) / R) + 1, k_max))
    radii = R * np.arange(n_rungs + 1, dtype=float)
    taus = crossing_times(times, norms, radii)

    levels = []
    for k in range(n_rungs):
        tau = float(taus[k])
        if not np.isfinite(tau):
            break
        delta = level_time_scale(spec, R, K, k)
        nxt = float(taus[k + 1])
        censored = not np.isfinite(nxt)
        gap = (T - tau) if censored else (nxt - tau)
        w_end = tau + min(delta, gap)
        lo = int(np.searchsorted(eta.times, tau - 1e-12))
        hi = int(np.searchsorted(eta.times, w_end + 1e-12, side="right"))
        window = eta.values[lo:hi]
        osc = 0.0
        if window.shape[0] > 1:
            osc = float(np.max(np.linalg.norm(window - window[0], axis=1)))
        vacuous = window.shape[0] < 2 or osc == 0.0
        bound = K * delta ** (spec.beta - 1.0)
        gap_ok = censored or gap > delta
        verdict = "pass" if (gap_ok and osc <= bound) else "fail"
        levels.append(
            LevelRecord(k, R * k, tau, float(delta), float(gap), censored, osc, float(bound), vacuous, verdict)
        )

    any_fail = any(l.verdict == "fail" for l in levels)
    informative = [l for l in levels if not l.vacuous]
    scope_ok = R > max(R0, x0n)
    if any_fail or not scope_ok:
        overall = "fail"
    elif not informative:
        overall = "inconclusive"
    else:
        overall = "pass"

    env = _envelope_for_horizon(spec, R, K, T - float(times[0]))
    config = {
        "K_estimated": estimated,
        "x0_norm": x0n,
        "T": T,
        "status": getattr(traj, "status", None),
        **spec.describe(),
    }
    return CertificateReport(R=R, K=K, R0=R0, levels=tuple(levels), envelope=env, overall=overall, config=config)


def merge_reports(reports):
    """Merge audits of independent runs of the same certificate by rung.

    Per rung the merged record keeps the shortest observed gap and the
    largest oscillation; a rung fails if it failed in any run.  Overall
    follows the single-audit rules: any failure dominates, otherwise pass
    needs at least one informative rung somewhere.
    """
    if not reports:
        raise ValueError("nothing to merge")
    by_k = {}
    for rep in reports:
        for l in rep.levels:
            by_k.setdefault(l.k, []).append(l)
    merged = []
    for k in sorted(by_k):
        group = by_k[k]
        worst_gap = min(group, key=lambda l: l.gap)
        worst_osc = max(group, key=lambda l: l.residual)
        merged.append(
            LevelRecord(
                k=k,
                radius=group[0].radius,
                tau=worst_gap.tau,
                delta=worst_osc.delta,
                gap=worst_gap.gap,
                censored=worst_gap.censored,
                oscillation=worst_osc.oscillation,
                bound=worst_osc.bound,
                vacuous=all(l.vacuous for l in group),
                verdict="fail" if any(l.verdict == "fail" for l in group) else "pass",
            )
        )
    any_fail = any(r.overall == "fail" for r in reports) or any(l.verdict == "fail" for l in merged)
    informative = any(not l.vacuous for l in merged)
    overall = "fail" if any_fail else ("pass" if informative else "inconclusive")
    first = reports[0]
    return CertificateReport(
        R=first.R,
        K=max(r.K for r in reports),
        R0=max(r.R0 for r in reports),
        levels=tuple(merged),
        envelope=first.envelope,
        overall=overall,
        config={"merged_from": len(reports), **first.config},
    )


def audit_batch(trajs, etas, spec, R, K=None, max_workers=1):
    """Run crossing_audit over many runs and merge.

    etas may be None (each trajectory's recorded driver is used) or a list
    aligned with trajs.  Returns (reports, merged).
    """
    if etas is None:
        etas = [None] * len(trajs)
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            reports = list(pool.map(lambda te: crossing_audit(te[0], te[1], spec, R, K), zip(trajs, etas)))
    else:
        reports = [crossing_audit(t, e, spec, R, K) for t, e in zip(trajs, etas)]
    return reports, merge_reports(reports)


@dataclass(frozen=True)
class EnergyCheckRecord:
    """Outcome of the difference energy bound audit.

    residual is the largest value of |x_t - gamma_t|^2 minus the energy
    budget over the grid (NaN when the growth assumptions fail on the
    visited states, in which case assumption_ok is False and the bound is
    not evaluated).
    """

    residual: float
    time: float
    assumption_ok: bool
    assumption_margin: float
    lhs: float
    rhs: float


def difference_energy_check(sys, traj, gamma: SampledPath, spec: GrowthSpec, n_probe=4096, seed=0):
    """Audit the quadratic energy bound for x - gamma along a
    drift-plus-curve run.

    At every grid time the squared distance |x_t - gamma_t|^2 is compared
    against the budget

        |x_0|^2 + 2 int f(|x|)(|x| + |gamma|)
                + 2 int |gamma| (sup_{|z| <= |gamma|} |b(t0, z)|
                                 + (1 + |x|) f(|x|)^beta)

    integrated by cumulative trapezoid.  The small-ball drift sup is a
    Monte Carlo probe (n_probe ball points sorted by radius, prefix
    maxima), evaluated at the initial time; time-dependent drifts are
    probed at t0 only.

    The radial and orthogonal growth conditions are first verified on the
    visited states, with the radial component checked in absolute value: a
    control too small for the drift magnitude makes the budget meaningless,
    so the checker declines (assumption_ok False, residual NaN) instead of
    reporting a bound failure.
    """
    x = traj.path
    tol_t = 1e-9 * max(1.0, abs(float(x.times[-1])))
    if x.n != gamma.n or np.max(np.abs(x.times - gamma.times)) > tol_t:
        raise ValueError("trajectory and driving curve must share the sample grid")
    ts = x.times
    d = x.dim
    gv = gamma.values - gamma.values[0]  # gamma_0 = 0 shift
    nx = x.norms()
    ng = np.linalg.norm(gv, axis=1)
    fv = _eval_elementwise(spec.f, nx)

    bvals = np.stack([sys.drift(t, xi) for t, xi in zip(ts, x.values)])
    safe = np.where(nx > 0.0, nx, 1.0)
    radial = np.einsum("ij,ij->i", x.values, bvals) / safe
    orth = bvals - radial[:, None] * (x.values / safe[:, None])
    pos = nx > 0.0
    margins = []
    if np.any(pos):
        margins.append(np.max(np.abs(radial[pos]) - fv[pos]))
        margins.append(np.max(np.linalg.norm(orth, axis=1)[pos] - (1.0 + nx[pos]) * fv[pos] ** spec.beta))
    margin = float(max(margins)) if margins else -math.inf
    if margin > 1e-9 * max(1.0, float(np.max(nx))):
        return EnergyCheckRecord(math.nan, math.nan, False, margin, math.nan, math.nan)

    b0 = float(np.linalg.norm(sys.drift(float(ts[0]), np.zeros(d))))
    rmax = float(np.max(ng))
    if rmax > 0.0:
        rng = np.random.default_rng(seed)
        dirs = rng.standard_normal((n_probe, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        rads = np.sort(rmax * rng.random(n_probe) ** (1.0 / d))
        probe = np.array(
            [float(np.linalg.norm(sys.drift(float(ts[0]), r * u))) for r, u in zip(rads, dirs)]
        )
        prefix = np.maximum.accumulate(probe)
        idx = np.searchsorted(rads, ng, side="right")
        bsup = np.where(idx > 0, prefix[np.maximum(idx - 1, 0)], 0.0)
        bsup = np.maximum(bsup, b0)
    else:
        bsup = np.full(x.n, b0)

    integrand = 2.0 * (fv * (nx + ng) + ng * (bsup + (1.0 + nx) * fv ** spec.beta))
    seg = 0.5 * (integrand[1:] + integrand[:-1]) * np.diff(ts)
    rhs = nx[0] ** 2 + np.concatenate([[0.0], np.cumsum(seg)])
    diff = x.values - gv
    lhs = np.einsum("ij,ij->i", diff, diff)
    resid = lhs - rhs
    i = int(np.argmax(resid))
    return EnergyCheckRecord(float(resid[i]), float(ts[i]), True, margin, float(lhs[i]), float(rhs[i]))


@dataclass(frozen=True)
class BadLevel:
    k: int
    delta: float
    oscillation: float
    threshold: float
    tau: float


@dataclass(frozen=True)
class PvarAuditReport:
    """Outcome of the p-variation rung audit.

    bad_levels are the rungs whose crossing window contains driver
    oscillation of at least delta_k^(beta-1); their delta total must stay
    below 1 + |gamma|_{q-var}^q with q = 1/(beta-1).  Quiet rungs must keep
    the usual crossing gap (violations listed in good_gap_violations).
    """

    R: float
    p: float
    q: float
    bad_levels: tuple
    good_gap_violations: tuple
    n_levels: int
    bad_level_sum: float
    pvar: float
    pvar_bound: float
    passed: bool
    config: dict = dc_field(default_factory=dict)


def pvar_audit(traj, gamma: SampledPath, spec: GrowthSpec, p, R=None):
    """Split the radius rungs by driver oscillation and bound the heavy
    rungs' time budget by the driver's p-variation.

    A rung is bad when the driver moves by at least delta_k^(beta-1) within
    its crossing window.  Windows open one sample before the recorded
    crossing so that the increment that produced the crossing is audited
    with it (a jump carrying the state across a rung lands exactly at the
    recorded crossing time).  K is fixed to 1: the bad/quiet split absorbs
    the oscillation scale.  Needs beta <= 1 + 1/p.
    """
    if p <= 1.0:
        raise ValueError("p must exceed 1")
    if spec.beta > 1.0 + 1.0 / p + 1e-12:
        raise ValueError("requires beta <= 1 + 1/p")
    q = 1.0 / (spec.beta - 1.0)
    K = 1.0
    if R is None:
        R = base_radius(K, spec.b_a_T) + 1.0
    R = float(R)

    times = traj.path.times
    norms = traj.path.norms()
    T = float(times[-1])
    step_med = float(np.median(np.diff(times))) if times.size > 1 else 0.0
    n_rungs = int(min(np.floor(float(np.max(norms)) / R) + 1, 4096))
    radii = R * np.arange(n_rungs + 1, dtype=float)
    taus = crossing_times(times, norms, radii)

    bad = []
    gap_violations = []
    audited = 0
    for k in range(n_rungs):
        tau = float(taus[k])
        if not np.isfinite(tau):
            break
        audited += 1
        delta = level_time_scale(spec, R, K, k)
        nxt = float(taus[k + 1])
        censored = not np.isfinite(nxt)
        gap = (T - tau) if censored else (nxt - tau)
        w_end = tau + min(delta, gap)
        lo = int(np.searchsorted(gamma.times, tau - 1e-12))
        lo = max(lo - 1, 0)  # include the arriving increment
        hi = int(np.searchsorted(gamma.times, w_end + 1e-12, side="right"))
        window = gamma.values[lo:hi]
        osc = 0.0
        if window.shape[0] > 1:
            osc = float(np.max(np.linalg.norm(window - window[0], axis=1)))
        threshold = delta ** (spec.beta - 1.0)
        if osc >= threshold:
            bad.append(BadLevel(k, float(delta), osc, float(threshold), tau))
        elif not censored and gap + 2.0 * step_med < delta:
            gap_violations.append((k, float(gap), float(delta)))

    bad_sum = float(sum(b.delta for b in bad))
    pv = p_variation(gamma, q)
    bound = 1.0 + pv ** q
    passed = bad_sum <= bound and not gap_violations
    return PvarAuditReport(
        R=R,
        p=float(p),
        q=q,
        bad_levels=tuple(bad),
        good_gap_violations=tuple(gap_violations),
        n_levels=audited,
        bad_level_sum=bad_sum,
        pvar=pv,
        pvar_bound=bound,
        passed=passed,
        config={"T": T, **spec.describe()},
    )


@dataclass(frozen=True)
class PropagationGap:
    start_index: int
    k: int
    tau: float
    gap: float
    required: float
    ok: bool


@dataclass(frozen=True)
class PropagationReport:
    """Audit of the difference-ladder crossing gaps across a start grid."""

    R: float
    assumption_ok: bool
    assumption_margin: float
    gaps: tuple
    n_crossings: int
    passed: bool
    config: dict = dc_field(default_factory=dict)


def one_point_propagation_audit(
    sys,
    driver,
    x_ref,
    starts,
    f,
    T=None,
    R=4.0,
    ctrl=None,
    n_pair_check=256,
    seed=0,
):
    """Propagate a grid of starts under one shared driver realization and
    audit the difference-norm ladder gaps.

    The one-sided pairwise condition <b(x) - b(y), x - y> <= f(|x-y|)|x-y|
    is probed on random pairs plus all pairs of supplied starts; when it
    fails the audit is skipped and the report carries the violation.  With
    it in place, each difference path |x^start - x^ref| must spend at least
    f(R(k+1))^{-1} between consecutive rungs R*k and R*(k+1), for any
    R > 2 + sqrt(3).  The first rung is audited only when the initial
    difference is small enough (below sqrt(R^2 - 4R + 1)) to traverse the
    full rung; recorded gaps get one grid step of slack for crossing-time
    quantization.

    driver may be a DriverSpec (realized once) or a SampledPath shared by
    every start.  Raises when the reference trajectory fails to finish.
    """
    if R <= 2.0 + math.sqrt(3.0):
        raise ValueError("R must exceed 2 + sqrt(3)")
    fn = f.f if isinstance(f, GrowthSpec) else f
    gpath = driver.generate() if hasattr(driver, "generate") else driver
    if gpath.dim != sys.dim:
        raise ValueError("driver dimension must match the state dimension")
    ctrl = ctrl or StepControl()

    x_ref = np.asarray(x_ref, dtype=float).reshape(sys.dim)
    starts = [np.asarray(s, dtype=float).reshape(sys.dim) for s in starts]

    rng = np.random.default_rng(seed)
    scale = max([1.0] + [float(np.linalg.norm(s)) for s in starts] + [float(np.linalg.norm(x_ref))])
    pts = list(rng.normal(0.0, scale, size=(2 * n_pair_check, sys.dim)))
    pool = pts + starts + [x_ref]
    margin = -math.inf
    for _ in range(n_pair_check):
        i, j = rng.integers(0, len(pool), size=2)
        xi, xj = pool[i], pool[j]
        dn = float(np.linalg.norm(xi - xj))
        if dn == 0.0:
            continue
        lhs = float(np.dot(sys.drift(0.0, xi) - sys.drift(0.0, xj), xi - xj))
        margin = max(margin, lhs - _eval_scalar(fn, dn) * dn)
    for i in range(len(starts)):
        for xj in starts[i + 1 :] + [x_ref]:
            dn = float(np.linalg.norm(starts[i] - xj))
            if dn == 0.0:
                continue
            lhs = float(np.dot(sys.drift(0.0, starts[i]) - sys.drift(0.0, xj), starts[i] - xj))
            margin = max(margin, lhs - _eval_scalar(fn, dn) * dn)
    tol = 1e-9 * max(1.0, abs(margin))
    if margin > tol:
        return PropagationReport(R, False, float(margin), (), 0, False, {"skipped": True})

    eye = np.eye(sys.dim)
    add = VectorFieldSystem(
        dim=sys.dim,
        driver_dim=sys.dim,
        b=sys.b,
        sigma=lambda x: eye,
        representation=sys.representation,
    )
    ref = young_solve(add, gpath, x_ref, T=T, ctrl=ctrl)
    if ref.status != COMPLETED:
        raise RuntimeError("reference not global")

    first_cap = math.sqrt(max(R * R - 4.0 * R + 1.0, 0.0))
    records = []
    n_crossings = 0
    for si, s in enumerate(starts):
        traj = young_solve(add, gpath, s, T=T, ctrl=ctrl)
        L = min(ref.path.n, traj.path.n)
        ts = ref.path.times[:L]
        psin = np.linalg.norm(traj.path.values[:L] - ref.path.values[:L], axis=1)
        init = float(psin[0])
        k_last = int(min(np.floor(float(np.max(psin)) / R) + 1, 64))
        radii = R * np.arange(1, k_last + 1, dtype=float)
        taus = np.concatenate([[float(ts[0])], crossing_times(ts, psin, radii)])
        step_med = float(np.median(np.diff(ts))) if L > 1 else 0.0
        for k in range(k_last):
            nxt = float(taus[k + 1])
            if not np.isfinite(nxt):
                break
            n_crossings += 1
            if nxt <= float(ts[0]):
                continue  # start already above this rung
            if k == 0 and init > first_cap:
                continue
            required = 1.0 / _eval_scalar(fn, R * (k + 1.0))
            gap = nxt - float(taus[k])
            ok = gap + step_med >= required
            records.append(PropagationGap(si, k, float(taus[k]), gap, required, ok))

    passed = all(r.ok for r in records)
    return PropagationReport(
        R=float(R),
        assumption_ok=True,
        assumption_margin=float(margin),
        gaps=tuple(records),
        n_crossings=n_crossings,
        passed=passed,
        config={"n_starts": len(starts), "T": float(ref.path.times[-1])},
    )


def positivity_margin(a, b, c, r, x_max, n_grid=2048):
    """Largest root of `a` and the positivity margin of a - c(eps) * b.

    x_star is the largest sign-change root of `a` on [0, x_max], found by a
    grid scan with bisection refinement to 1e-12.  epsilon_star is the
    largest eps in (0, 1] keeping a(x) - c(eps) b(x) strictly positive on
    the verification grid over [x_star + r, x_max]; c non-decreasing with
    c(0) = 0 makes the predicate monotone, so a bisection over the eps grid
    (step 2^-21) finds it.  Returns (x_star, epsilon_star); 1.0 means the
    condition holds for every eps, 0.0 that no grid eps works.
    """
    x_max = float(x_max)
    xs = np.linspace(0.0, x_max, int(n_grid) + 1)
    av = _eval_elementwise(a, xs)
    sign = av > 0.0
    brackets = np.nonzero(sign[1:] != sign[:-1])[0]
    zeros = np.nonzero(av == 0.0)[0]
    if brackets.size == 0 and zeros.size == 0:
        raise ValueError("x* undefined on domain: a has no sign change")
    cand = []
    if brackets.size:
        i = int(brackets[-1])
        lo, hi = float(xs[i]), float(xs[i + 1])
        s_lo = av[i] > 0.0
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            fm = _eval_scalar(a, mid)
            if fm == 0.0:
                lo = hi = mid
                break
            if (fm > 0.0) == s_lo:
                lo = mid
            else:
                hi = mid
        cand.append(0.5 * (lo + hi))
    if zeros.size:
        cand.append(float(xs[zeros[-1]]))
    x_star = max(cand)

    lo_x = x_star + float(r)
    if lo_x >= x_max:
        return float(x_star), 1.0  # empty verification range
    grid = np.linspace(lo_x, x_max, int(n_grid) + 1)
    ag = _eval_elementwise(a, grid)
    bg = _eval_elementwise(b, grid)

    def holds(eps):
        return bool(np.all(ag - _eval_scalar(c, eps) * bg > 0.0))

    step = 2.0 ** -21
    if holds(1.0):
        return float(x_star), 1.0
    if not holds(step):
        return float(x_star), 0.0
    lo_k, hi_k = 1, 1 << 21
    while hi_k - lo_k > 1:
        mid = (lo_k + hi_k) // 2
        if holds(mid * step):
            lo_k = mid
        else:
            hi_k = mid
    return float(x_star), lo_k * step


def hq_value(sys, x, v, q, t=0.0):
    """Derivative-flow growth functional H_q(x, v).

    H_q = 2 <Db v, v> + (q - 2) sum_k <Dsigma_k v, v>^2 / |v|^2
        + sum_k |Dsigma_k v|^2.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    db = np.asarray(sys.Db(t, x), dtype=float)
    out = 2.0 * float(v @ db @ v)
    if sys.Dsigma is not None:
        ds = np.asarray(sys.Dsigma(x), dtype=float)  # (d, m, d)
        grad_v = np.einsum("ike,e->ik", ds, v)
        inner = v @ grad_v
        out += (q - 2.0) * float(np.sum(inner**2)) / float(v @ v)
        out += float(np.sum(grad_v**2))
    return out


_CASE_NAMES = {
    1: "bounded",
    2: "bounded-derivatives",
    3: "linear-growth",
    4: "polynomial-decay",
    5: "exponential-decay",
}


@dataclass(frozen=True)
class CompletenessReport:
    """Worst margins of one pointwise completeness criterion family."""

    case: int
    case_name: str
    conditions: dict
    hq_worst: float
    hq_state: tuple
    passed: bool
    params: dict


def strong_completeness_check(sys, case, samples, params=None):
    """Static pointwise check of one completeness criterion family.

    Evaluates the selected case's inequalities and the derivative-growth
    functional H_q over the sampled states (unit directions for H_q) and
    reports worst margins per condition.  A condition checker on samples,
    not a completeness proof.

    Cases: 1 bounded balance, 2 bounded derivatives (explicit constant C),
    3 linear growth, 4 polynomial growth with decay exponent eps (required,
    positive, != 1), 5 exponential decay.  The comparison constant for the
    growth cases is params["c"] (default 1); params also takes q (default
    dim + 1), n_dirs and seed.
    """
    if case not in _CASE_NAMES:
        raise ValueError("case must be 1..5")
    if sys.Db is None:
        raise ValueError("completeness check needs Db")
    if sys.sigma is not None and sys.Dsigma is None:
        raise ValueError("completeness check needs Dsigma when sigma is present")
    params = dict(params or {})
    c = float(params.get("c", 1.0))
    C = float(params.get("C", 1.0))
    q = float(params.get("q", sys.dim + 1))
    n_dirs = int(params.get("n_dirs", 8))
    seed = int(params.get("seed", 0))
    if case == 4:
        if "eps" not in params:
            raise ValueError("case 4 needs params['eps']")
        eps = float(params["eps"])
        if eps <= 0.0 or eps == 1.0:
            raise ValueError("eps must be positive and != 1")

    xs = np.asarray(samples, dtype=float)
    if xs.ndim == 1:
        xs = xs[:, None]
    n = len(xs)
    n2 = np.einsum("ij,ij->i", xs, xs)

    grad_sig = np.zeros(n)  # max_k |Dsigma_k|^2
    sig_sq = np.zeros(n)  # sum_k |sigma_k|^2
    sig_dot = np.zeros(n)  # sum_k <x, sigma_k>^2
    grad_b = np.empty(n)  # sup_{|v|=1} <Db v, v>
    bdot = np.empty(n)  # <x, b>
    for i, x in enumerate(xs):
        db = np.asarray(sys.Db(0.0, x), dtype=float)
        grad_b[i] = float(np.max(np.linalg.eigvalsh(0.5 * (db + db.T))))
        bdot[i] = float(np.dot(x, sys.drift(0.0, x)))
        if sys.sigma is not None:
            sig = sys.diffusion(x)
            sig_sq[i] = float(np.sum(sig**2))
            sig_dot[i] = float(np.sum((x @ sig) ** 2))
            ds = np.asarray(sys.Dsigma(x), dtype=float)
            grad_sig[i] = max(_op_norm(ds[:, k, :]) ** 2 for k in range(sys.driver_dim))

    with np.errstate(over="ignore"):
        if case == 1:
            grad_env = c * (1.0 + n2)
            combo = bdot + sig_sq + sig_dot
            combo_env = np.full(n, c)
        elif case == 2:
            grad_env = np.full(n, C)
            combo = None
            combo_env = None
        elif case == 3:
            grad_env = c * (1.0 + np.log1p(n2))
            combo = bdot + sig_sq + sig_dot
            combo_env = c * (1.0 + n2)
        elif case == 4:
            grad_env = c * (1.0 + n2) ** eps
            combo = bdot + sig_sq + 2.0 * (eps - 1.0) * sig_dot / (1.0 + n2)
            combo_env = c * (1.0 + n2) ** (1.0 - eps)
        else:
            grad_env = c * np.exp(1.0 + n2)
            combo = bdot + 2.0 * sig_sq + 2.0 * sig_dot / (1.0 + n2)
            combo_env = c * np.exp(-n2)

    conditions = {}
    for name, vals in (("grad-sigma", grad_sig), ("grad-b", grad_b)):
        margins = vals - grad_env
        i = int(np.argmax(margins))
        conditions[name] = ViolationRecord(name, float(margins[i]), tuple(xs[i]), n)
    if combo is not None:
        margins = combo - combo_env
        i = int(np.argmax(margins))
        conditions["balance"] = ViolationRecord("balance", float(margins[i]), tuple(xs[i]), n)

    rng = np.random.default_rng(seed)
    hq_worst = -math.inf
    hq_state = ()
    for x in xs:
        dirs = rng.standard_normal((n_dirs, sys.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        for v in dirs:
            h = hq_value(sys, x, v, q)
            if h > hq_worst:
                hq_worst, hq_state = h, tuple(x)

    passed = all(rec.margin <= 0.0 for rec in conditions.values())
    params_echo = {"c": c, "C": C, "q": q, "n_dirs": n_dirs, "seed": seed}
    if case == 4:
        params_echo["eps"] = eps
    return CompletenessReport(
        case=case,
        case_name=_CASE_NAMES[case],
        conditions=conditions,
        hq_worst=float(hq_worst),
        hq_state=hq_state,
        passed=passed,
        params=params_echo,
    )
