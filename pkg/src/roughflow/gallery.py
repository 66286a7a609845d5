"""Named example systems with closed-form oracles where they exist.

Each registry entry bundles a VectorFieldSystem with hand-coded exact
derivatives, a default driver configuration, optional state/blow-up oracles,
and notes on what the example demonstrates.  `sharp_counterexample` builds
the rough-drift blow-up construction: a z-ODE integrated to a norm cap, the
driving curve gamma read off the z-trajectory, and the assembled solution
x = z + gamma together with its comparison-ODE blow-up bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import VectorFieldSystem
from .noise import DriverSpec
from .paths import SampledPath

J = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class GalleryEntry:
    """One catalogued example.

    driver is the default driver configuration: a DriverSpec for stochastic
    entries, the literal string "pure-quadratic" for entries driven by the
    deterministic quadratic lift, or None for drift-only systems.  oracle,
    when present, maps (t, x0) to the exact state of the noise-free dynamics;
    blowup_oracle maps x0 to the exact blow-up time of those dynamics
    (math.inf when the solution is global).
    """

    id: str
    system: VectorFieldSystem
    driver: object
    oracle: callable
    blowup_oracle: callable
    notes: str
    default_x0: tuple


def _entry_elworthy(level: int = 10, seed: int = 0, T: float = 1.0) -> GalleryEntry:
    def b(t, x):
        return np.zeros(2)

    def Db(t, x):
        return np.zeros((2, 2))

    def sigma(x):
        u, v = x
        return np.array([[v * v - u * u, 2.0 * u * v],
                         [-2.0 * u * v, u * u - v * v]])

    def Dsigma(x):
        u, v = x
        return np.array([[[-2.0 * u, 2.0 * v], [2.0 * v, 2.0 * u]],
                         [[-2.0 * v, -2.0 * u], [2.0 * u, -2.0 * v]]])

    _D2 = np.array([[[[-2.0, 0.0], [0.0, 2.0]], [[0.0, 2.0], [2.0, 0.0]]],
                    [[[0.0, -2.0], [-2.0, 0.0]], [[2.0, 0.0], [0.0, -2.0]]]])

    def D2sigma(x):
        return _D2.copy()

    sys = VectorFieldSystem(dim=2, driver_dim=2, b=b, sigma=sigma, Db=Db,
                            Dsigma=Dsigma, D2sigma=D2sigma,
                            representation="named:elworthy")
    notes = ("Planar diffusion with quadratic driver coefficients and no "
             "drift.  The solution from any start explodes only if the "
             "driving planar Brownian path hits one specific point, an event "
             "of probability zero, so individual trajectories are complete "
             "and no numeric blow-up is expected at desk horizons.  The "
             "two-parameter solution map is the interesting object: probe it "
             "with flow_grid over a grid of starts.  Quadratic coefficients "
             "violate every bounded-derivative completeness criterion, which "
             "is the point of the example.")
    return GalleryEntry("elworthy", sys,
                        DriverSpec("brownian", dim=2, T=T, level=level, seed=seed),
                        None, None, notes, (1.0, 0.0))


def _entry_sheared_ou(C: float = 1.0, eps: float = 0.5, alpha: float = 1.0,
                      level: int = 10, seed: int = 0, T: float = 1.0) -> GalleryEntry:
    if eps <= 0:
        raise ValueError("eps must be positive")

    def b(t, x):
        r = float(np.linalg.norm(x))
        return -(alpha / 2.0) * x + C * r ** (3.0 + eps) * (J @ x)

    def Db(t, x):
        r = float(np.linalg.norm(x))
        out = -(alpha / 2.0) * np.eye(2)
        if r > 0.0:
            out = out + C * ((3.0 + eps) * r ** (1.0 + eps) * np.outer(J @ x, x)
                             + r ** (3.0 + eps) * J)
        return out

    def sigma(x):
        return np.eye(2)

    def Dsigma(x):
        return np.zeros((2, 2, 2))

    def D2sigma(x):
        return np.zeros((2, 2, 2, 2))

    sys = VectorFieldSystem(dim=2, driver_dim=2, b=b, sigma=sigma, Db=Db,
                            Dsigma=Dsigma, D2sigma=D2sigma,
                            representation="named:sheared-ou")
    notes = ("Ornstein-Uhlenbeck attraction sheared by a fast tangential "
             "rotation of magnitude C * r^(3+eps) * r at radius r, with "
             "additive noise.  The radial part of the drift is exactly "
             "-(alpha/2) r, so one-point motions are tame, yet the rotation "
             "gradient grows so fast that the flow is known to fail strong "
             "completeness.  That failure is not numerically decidable, so "
             "this entry carries no oracle; it exists for exploration with "
             "flow_grid and derivative_flow.  Parameters exposed: C, eps, "
             "alpha.")
    return GalleryEntry("sheared-ou", sys,
                        DriverSpec("brownian", dim=2, T=T, level=level, seed=seed),
                        None, None, notes, (1.0, 0.0))


def _entry_gl09() -> GalleryEntry:
    def sigma(x):
        return np.array([[x[0] * math.sin(x[1])], [x[0]]])

    def Dsigma(x):
        return np.array([[[math.sin(x[1]), x[0] * math.cos(x[1])]],
                         [[1.0, 0.0]]])

    def D2sigma(x):
        c = math.cos(x[1])
        return np.array([[[[0.0, c], [c, -x[0] * math.sin(x[1])]]],
                         [[[0.0, 0.0], [0.0, 0.0]]]])

    sys = VectorFieldSystem(dim=2, driver_dim=1, b=None, sigma=sigma, Db=None,
                            Dsigma=Dsigma, D2sigma=D2sigma,
                            representation="named:gl09")

    def oracle(t, x0):
        x0 = np.asarray(x0, dtype=float)
        if x0[1] != 0.0:
            raise ValueError("closed form known only on the x2 = 0 slice")
        denom = 1.0 - x0[0] * t
        if denom <= 0.0:
            raise ValueError("state has blown up by this time")
        return np.array([x0[0] / denom, 0.0])

    def blowup_oracle(x0):
        x0 = np.asarray(x0, dtype=float)
        if x0[1] != 0.0:
            raise ValueError("closed form known only on the x2 = 0 slice")
        if x0[0] <= 0.0:
            return math.inf
        return 1.0 / x0[0]

    notes = ("Driftless system with a single smooth, linearly growing driver "
             "field whose rough-driver dynamics blow up: under the pure "
             "quadratic lift (first level frozen, second level t*I) the "
             "effective motion on the x2 = 0 slice is x1' = x1^2, exploding "
             "at t = 1 from (1, 0).  Linear growth of sigma guarantees "
             "global solutions for ordinary and Young drivers, so the blow-up "
             "is attributable to the second-order rough term.  Drive with "
             "pure_quadratic_lift and rde_solve.")
    return GalleryEntry("gl09", sys, "pure-quadratic", oracle, blowup_oracle, notes,
                        (1.0, 0.0))


def _entry_complex_square() -> GalleryEntry:
    def b(t, x):
        u, v = x
        return np.array([u * u - v * v, 2.0 * u * v])

    def Db(t, x):
        u, v = x
        return np.array([[2.0 * u, -2.0 * v], [2.0 * v, 2.0 * u]])

    sys = VectorFieldSystem(dim=2, driver_dim=0, b=b, sigma=None, Db=Db,
                            representation="named:complex-square")

    def oracle(t, x0):
        z0 = complex(x0[0], x0[1])
        denom = 1.0 - z0 * t
        if denom == 0.0:
            raise ValueError("state has blown up by this time")
        z = z0 / denom
        return np.array([z.real, z.imag])

    def blowup_oracle(x0):
        z0 = complex(x0[0], x0[1])
        if z0.imag == 0.0 and z0.real > 0.0:
            return 1.0 / z0.real
        return math.inf

    notes = ("The plane read as complex numbers with z' = z^2, whose exact "
             "flow is z0 / (1 - z0 t).  Starts on the positive real axis "
             "blow up at exactly 1/z0; every other start is global and "
             "converges to 0.  The deterministic benchmark for blow-up "
             "detection and for exit-time accumulation under localize_solve.")
    return GalleryEntry("complex-square", sys, None, oracle, blowup_oracle, notes,
                        (0.5, 0.0))


def _entry_radial_rotation(alpha: float = 0.5, level: int = 10, seed: int = 0,
                           T: float = 1.0) -> GalleryEntry:
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    def b(t, x):
        r = float(np.linalg.norm(x))
        if r == 0.0:
            return np.zeros(2)
        return r ** (1.0 + alpha) * (J @ x)

    def Db(t, x):
        r = float(np.linalg.norm(x))
        if r == 0.0:
            return np.zeros((2, 2))
        return ((1.0 + alpha) * r ** (alpha - 1.0) * np.outer(J @ x, x)
                + r ** (1.0 + alpha) * J)

    def sigma(x):
        return np.eye(2)

    def Dsigma(x):
        return np.zeros((2, 2, 2))

    def D2sigma(x):
        return np.zeros((2, 2, 2, 2))

    sys = VectorFieldSystem(dim=2, driver_dim=2, b=b, sigma=sigma, Db=Db,
                            Dsigma=Dsigma, D2sigma=D2sigma,
                            representation="named:radial-rotation")

    def oracle(t, x0):
        x0 = np.asarray(x0, dtype=float)
        w = float(np.linalg.norm(x0)) ** (1.0 + alpha)
        c, s = math.cos(w * t), math.sin(w * t)
        return c * x0 + s * (J @ x0)

    def blowup_oracle(x0):
        return math.inf

    notes = ("Purely tangential drift of magnitude r^(1+alpha): the "
             "noise-free motion rotates on circles at angular rate "
             "||x0||^(1+alpha) and conserves the norm exactly, so the drift "
             "alone can never explode.  Adding a driving curve couples radius "
             "to phase; with the adversarial curve from sharp_counterexample "
             "the assembled solution blows up in finite time even though the "
             "radial growth condition <x, b(x)> = 0 is as benign as possible. "
             "Default driver is additive Brownian for well-posed exploration.")
    return GalleryEntry("radial-rotation", sys,
                        DriverSpec("brownian", dim=2, T=T, level=level, seed=seed),
                        oracle, blowup_oracle, notes, (1.0, 0.0))


def _entry_linear_ou(level: int = 10, seed: int = 0, T: float = 1.0) -> GalleryEntry:
    def b(t, x):
        return -x

    def Db(t, x):
        return -np.eye(2)

    def sigma(x):
        return np.eye(2)

    def Dsigma(x):
        return np.zeros((2, 2, 2))

    def D2sigma(x):
        return np.zeros((2, 2, 2, 2))

    sys = VectorFieldSystem(dim=2, driver_dim=2, b=b, sigma=sigma, Db=Db,
                            Dsigma=Dsigma, D2sigma=D2sigma,
                            representation="named:linear-ou")

    def oracle(t, x0):
        return math.exp(-t) * np.asarray(x0, dtype=float)

    def blowup_oracle(x0):
        return math.inf

    notes = ("Linear mean reversion with additive noise; the noise-free flow "
             "is exp(-t) x0.  A well-behaved baseline: every growth "
             "certificate and crossing audit should pass here, and the "
             "bounded-derivative completeness criterion holds with C = 1.")
    return GalleryEntry("linear-ou", sys,
                        DriverSpec("brownian", dim=2, T=T, level=level, seed=seed),
                        oracle, blowup_oracle, notes, (1.0, 0.0))


def _entry_double_well(level: int = 10, seed: int = 0, T: float = 5.0) -> GalleryEntry:
    def b(t, x):
        return np.array([x[0] - x[0] ** 3])

    def Db(t, x):
        return np.array([[1.0 - 3.0 * x[0] ** 2]])

    def sigma(x):
        return np.array([[1.0]])

    def Dsigma(x):
        return np.zeros((1, 1, 1))

    def D2sigma(x):
        return np.zeros((1, 1, 1, 1))

    sys = VectorFieldSystem(dim=1, driver_dim=1, b=b, sigma=sigma, Db=Db,
                            Dsigma=Dsigma, D2sigma=D2sigma,
                            representation="named:double-well")

    def blowup_oracle(x0):
        return math.inf

    notes = ("Scalar bistable drift x - x^3 with additive noise.  The cubic "
             "confinement dominates at large |x| (radial component "
             "x b(x) = x^2 - x^4 is eventually negative), so solutions are "
             "global from any start; equilibria at -1, 0, +1.  A nonlinear "
             "but well-behaved baseline for propagation audits across "
             "scattered starts.")
    return GalleryEntry("double-well", sys,
                        DriverSpec("brownian", dim=1, T=T, level=level, seed=seed),
                        None, blowup_oracle, notes, (1.0,))


_FACTORIES = {
    "elworthy": _entry_elworthy,
    "sheared-ou": _entry_sheared_ou,
    "gl09": _entry_gl09,
    "complex-square": _entry_complex_square,
    "radial-rotation": _entry_radial_rotation,
    "linear-ou": _entry_linear_ou,
    "double-well": _entry_double_well,
}


def available() -> tuple:
    return tuple(sorted(_FACTORIES))


def registry(id: str, **params) -> GalleryEntry:
    """Build the named entry; params override entry-specific defaults."""
    if id not in _FACTORIES:
        raise KeyError(f"unknown gallery id {id!r}; available: {', '.join(available())}")
    return _FACTORIES[id](**params)


def comparison_blowup_bound(alpha: float, mu: float, norm_z0: float) -> float:
    """Blow-up upper bound of the scalar comparison u' = 2 u^(1+(alpha-mu)/2)
    started from u0 = norm_z0^2: T* = u0^(-(alpha-mu)/2) / (alpha - mu)."""
    if alpha <= mu:
        raise ValueError("alpha must exceed mu for finite-time comparison blow-up")
    if norm_z0 <= 0:
        raise ValueError("norm_z0 must be positive")
    u0 = norm_z0 * norm_z0
    return u0 ** (-(alpha - mu) / 2.0) / (alpha - mu)


@dataclass(frozen=True)
class SharpCounterexample:
    """Assembled blow-up construction.

    z is the auxiliary trajectory, gamma the driving curve read off it
    (gamma identically 0 after the blow-up time, by convention; the sampled
    path ends at the norm-cap crossing), x = z + gamma the assembled
    solution of dx = ||x||^(1+alpha) J x dt + dgamma.  blowup_time is the
    cap-crossing time, a lower approximation of the true blow-up time, and
    bound the comparison upper bound.  assembly_residual is the largest
    one-step defect ||x_{i+1} - x_i - b(x_i) dt - dgamma|| / dt over the
    rotation-resolved steps (||z|| <= assembly_scope); NaN if the start is
    already above that scale.  The scope exists because the recovered step
    dt = diff(times) carries the rounding of the absolute time grid (one
    ulp of elapsed time), which the step speed ~ r^(2+alpha) amplifies;
    beyond the scope the recovered-dt noise dominates any genuine defect.
    growth_margin_rel is the smallest relative
    slack in the pointwise comparison d/dt ||z||^2 >= 2 ||z||^(2+alpha-mu),
    and norm_identity_error the largest deviation from
    ||gamma|| = ||z||^(-mu); both hold at every sample of either phase.
    """

    alpha: float
    mu: float
    z_system: VectorFieldSystem
    z: SampledPath
    gamma: SampledPath
    x: SampledPath
    blowup_time: float
    bound: float
    assembly_residual: float
    assembly_scope: float
    growth_margin_rel: float
    norm_identity_error: float
    config: dict


def sharp_counterexample(alpha: float, mu: float, z0, rel_step: float = 1e-3,
                         norm_cap: float = 1e6, h_max: float = 0.01,
                         assembly_scope: float = 100.0,
                         max_steps: int = 10_000_000) -> SharpCounterexample:
    """Integrate the auxiliary z-ODE to the norm cap and assemble the
    blow-up pair (gamma, x).

    The z-ODE is z' = ||w||^(1+alpha) J w with w = z - ||z||^(-(1+mu)) J z.
    The motion is rotation-dominated: per unit of arc the radius gains only
    a factor ~||z||^(-(1+mu)), so resolving every rotation up to the cap is
    hopeless.  In polar coordinates the radius decouples exactly,

        d(log r)/dt = q^(1+alpha) r^(alpha-mu),   q = sqrt(1 + r^(-2-2mu)),
        dtheta/dt   = q^(1+alpha) r^(1+alpha),

    so integration runs in two phases.  While ||z|| <= assembly_scope the
    plain Euler scheme resolves the full arc (||dz|| <= rel_step ||z||,
    steps capped at h_max), which is what makes the per-step assembly
    residual meaningful there.  Above the scope the polar form advances
    with radius-resolving steps (d log r <= rel_step) up to the cap; the
    rotation is then sampled coarsely, but amplitudes, radii, and times
    stay accurate, which is all the oscillation statistics need, and ||z||
    is resolved geometrically all the way to the cap so the Holder
    exponent estimate of gamma has samples close to blow-up.  Calibrated
    for ||z0|| >= 1; smaller starts are accepted but the driving curve is
    then initially large.
    """
    z0 = np.asarray(z0, dtype=float).reshape(2)
    r0 = float(np.linalg.norm(z0))
    if r0 == 0.0:
        raise ValueError("z0 must be nonzero")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if not alpha / 2.0 < mu < alpha:
        raise ValueError("mu must lie in (alpha/2, alpha)")
    bound = comparison_blowup_bound(alpha, mu, r0)
    t_max = 1.5 * bound

    def zfield(t, z):
        z = np.asarray(z, dtype=float)
        r = float(np.linalg.norm(z))
        w = z - r ** (-(1.0 + mu)) * (J @ z)
        return float(np.linalg.norm(w)) ** (1.0 + alpha) * (J @ w)

    z_system = VectorFieldSystem(dim=2, b=zfield, representation="named:sharp-z")

    # phase 1: arc-resolved Euler on z; ||z|| strictly increases, no origin guard
    zx, zy = float(z0[0]), float(z0[1])
    t = 0.0
    ts = [0.0]
    zxs = [zx]
    zys = [zy]
    arc_cap = min(assembly_scope, norm_cap)
    r = math.hypot(zx, zy)
    while r < arc_cap:
        if t >= t_max or len(ts) > max_steps:
            raise RuntimeError("norm cap not reached before the comparison "
                               "bound; integration parameters inconsistent")
        gs = r ** (-(1.0 + mu))
        wx, wy = zx + gs * zy, zy - gs * zx
        nw = math.hypot(wx, wy)
        sc = nw ** (1.0 + alpha)
        vx, vy = -sc * wy, sc * wx
        speed = sc * nw
        h = rel_step * r / speed
        if h > h_max:
            h = h_max
        zx += h * vx
        zy += h * vy
        t += h
        ts.append(t)
        zxs.append(zx)
        zys.append(zy)
        r = math.hypot(zx, zy)

    # phase 2: exact polar form, radius-resolving steps
    if r < norm_cap:
        lr = math.log(r)
        theta = math.atan2(zy, zx)
        lcap = math.log(norm_cap)
        while lr < lcap:
            if t >= t_max or len(ts) > max_steps:
                raise RuntimeError("norm cap not reached before the comparison "
                                   "bound; integration parameters inconsistent")
            rr = math.exp(lr)
            q = math.sqrt(1.0 + rr ** (-2.0 - 2.0 * mu))
            qa = q ** (1.0 + alpha)
            rad_rate = qa * rr ** (alpha - mu)
            h = min(h_max, rel_step / rad_rate)
            theta += h * qa * rr ** (1.0 + alpha)
            lr += h * rad_rate
            t += h
            rr = math.exp(lr)
            ts.append(t)
            zxs.append(rr * math.cos(theta))
            zys.append(rr * math.sin(theta))

    times = np.array(ts)
    zs = np.column_stack([zxs, zys])
    rs = np.linalg.norm(zs, axis=1)
    gscale = rs ** (-(1.0 + mu))
    gs_arr = np.column_stack([gscale * zs[:, 1], -gscale * zs[:, 0]])
    ws = zs + gs_arr
    nws = np.linalg.norm(ws, axis=1)

    z_path = SampledPath(times, zs)
    gamma = SampledPath(times, gs_arr)
    x_path = SampledPath(times, ws)

    # pointwise comparison: d/dt ||z||^2 = 2 ||w||^(1+alpha) ||z||^(1-mu)
    growth = 2.0 * nws ** (1.0 + alpha) * rs ** (1.0 - mu)
    floor = 2.0 * rs ** (2.0 + alpha - mu)
    growth_margin_rel = float(np.min((growth - floor) / floor))

    norm_identity_error = float(np.max(np.abs(np.linalg.norm(gs_arr, axis=1)
                                              - rs ** (-mu))))

    # assembly defect against the drift of the assembled equation
    dts = np.diff(times)
    drift = nws[:-1, None] ** (1.0 + alpha) * (ws[:-1] @ J.T)
    defect = ws[1:] - ws[:-1] - dts[:, None] * drift - (gs_arr[1:] - gs_arr[:-1])
    per_step = np.linalg.norm(defect, axis=1) / dts
    in_scope = np.maximum(rs[:-1], rs[1:]) <= assembly_scope
    assembly_residual = float(np.max(per_step[in_scope])) if np.any(in_scope) else float("nan")

    config = {"alpha": alpha, "mu": mu, "z0": [float(z0[0]), float(z0[1])],
              "rel_step": rel_step, "norm_cap": norm_cap, "h_max": h_max,
              "assembly_scope": assembly_scope, "n_steps": int(times.size)}
    return SharpCounterexample(alpha, mu, z_system, z_path, gamma, x_path,
                               float(times[-1]), bound, assembly_residual,
                               assembly_scope, growth_margin_rel,
                               norm_identity_error, config)
