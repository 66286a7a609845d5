"""Explicit one-step solvers with blow-up detection and level-crossing records.

All solvers step on the driver's grid and never substep driver increments;
only the drift term is refined adaptively, by capping its per-substep
displacement at cap_rel * max(|x|, 1).  Blow-up is declared when the norm
threshold is crossed and the drift substep simultaneously hits its floor,
when a driver-term update lands past the threshold (no substep machinery
exists there), or when the hard overflow ceiling (1e6 x threshold) is hit;
the recorded blow-up time is the first threshold crossing.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .fields import VectorFieldSystem
from .paths import SampledPath
from .rough import RoughPath

COMPLETED = "completed"
BLOWN_UP = "blown-up"
STEP_FLOOR = "step-floor-reached"


@dataclass(frozen=True)
class StepControl:
    """Solver tolerances and the radius ladder for crossing records."""

    threshold: float = 1e8
    step_floor: float = 1e-12
    cap_rel: float = 0.01
    radii: tuple = ()

    def with_ladder(self, R, k_max=64):
        """Default ladder r_k = R * (k + 1), k = 0..k_max-1."""
        return StepControl(self.threshold, self.step_floor, self.cap_rel,
                           tuple(R * (k + 1) for k in range(k_max)))


@dataclass(frozen=True)
class Trajectory:
    """Solver output: samples, termination status, crossing records.

    eta is the effective driver accumulated by the solver (the path of the
    driver terms only: gamma increments for drift+additive runs, the running
    integral of sigma(x) against the driver otherwise).
    """

    path: SampledPath
    status: str
    blowup_time: float | None
    level_crossings: tuple
    eta: SampledPath | None
    config: dict = dc_field(default_factory=dict)

    def sup_norm_until(self, t):
        keep = self.path.times <= t + 1e-12
        return float(np.max(np.linalg.norm(self.path.values[keep], axis=1)))


class _Tracker:
    """Watches the state after every update: ladder crossings, threshold,
    overflow ceiling."""

    def __init__(self, ctrl: StepControl, t0, x0):
        self.ctrl = ctrl
        self.radii = np.asarray(ctrl.radii, dtype=float)
        if self.radii.size and np.any(np.diff(self.radii) <= 0):
            raise ValueError("radius ladder must be strictly increasing")
        self.ceiling = 1e6 * ctrl.threshold
        self.crossings = []
        self.k = 0
        self.threshold_time = None
        self.observe(t0, x0)

    def observe(self, t, x):
        nrm = float(np.linalg.norm(x))
        while self.k < self.radii.size and nrm >= self.radii[self.k]:
            self.crossings.append((float(self.radii[self.k]), float(t)))
            self.k += 1
        if nrm >= self.ctrl.threshold and self.threshold_time is None:
            self.threshold_time = float(t)
        return nrm >= self.ceiling


def _advance_drift(drift, t, x, dt, ctrl: StepControl, tracker: _Tracker):
    """Advance the drift over a time budget dt with displacement-capped
    substeps.  Returns (x, t, event) with event None, BLOWN_UP, or
    STEP_FLOOR."""
    remaining = dt
    while remaining > 0.0:
        bv = drift(t, x)
        speed = float(np.linalg.norm(bv))
        h = remaining
        if speed > 0.0:
            cap = ctrl.cap_rel * max(float(np.linalg.norm(x)), 1.0)
            if speed * h > cap:
                h = cap / speed
                if h < ctrl.step_floor:
                    over = float(np.linalg.norm(x)) >= ctrl.threshold
                    if over and tracker.threshold_time is None:
                        tracker.threshold_time = float(t)
                    return x, t, (BLOWN_UP if over else STEP_FLOOR)
        x = x + h * bv
        t = t + h
        remaining -= h
        if tracker.observe(t, x):
            return x, t, BLOWN_UP
    return x, t, None


def _drive(sys, times, increment_fn, x0, ctrl, config):
    """Shared stepping loop.  increment_fn(i, x) returns the driver-term
    increment for cell i evaluated at the cell-start state (never substepped).
    """
    x = np.asarray(x0, dtype=float).reshape(-1).copy()
    if x.shape[0] != sys.dim:
        raise ValueError(f"x0 must have dim {sys.dim}, got {x.shape[0]}")
    tracker = _Tracker(ctrl, times[0], x)
    drift = sys.drift
    rec_t = [float(times[0])]
    rec_x = [x.copy()]
    eta = np.zeros_like(x)
    rec_eta = [eta.copy()]
    status = COMPLETED
    for i in range(times.shape[0] - 1):
        dt = float(times[i + 1] - times[i])
        inc = increment_fn(i, x)
        x, t_now, event = _advance_drift(drift, float(times[i]), x, dt, ctrl, tracker)
        if event is not None:
            status = event
            if t_now > rec_t[-1] + 1e-300:
                rec_t.append(float(t_now))
                rec_x.append(x.copy())
                rec_eta.append(eta.copy())
            break
        nrm_before = float(np.linalg.norm(x))
        x = x + inc
        eta = eta + inc
        hit_ceiling = tracker.observe(times[i + 1], x)
        rec_t.append(float(times[i + 1]))
        rec_x.append(x.copy())
        rec_eta.append(eta.copy())
        crossed_by_driver = (nrm_before < ctrl.threshold
                             and float(np.linalg.norm(x)) >= ctrl.threshold)
        if hit_ceiling or crossed_by_driver:
            # a driver-term update cannot be refined, so past the threshold
            # it terminates the run directly
            status = BLOWN_UP
            break
    blowup_time = tracker.threshold_time if status == BLOWN_UP else None
    path = SampledPath(np.asarray(rec_t), np.vstack(rec_x))
    eta_path = SampledPath(np.asarray(rec_t), np.vstack(rec_eta))
    return Trajectory(path=path, status=status, blowup_time=blowup_time,
                      level_crossings=tuple(tracker.crossings), eta=eta_path,
                      config=config)


def _restrict(times, T):
    keep = times <= T + 1e-12
    if keep.sum() < 2:
        raise ValueError(f"driver grid has fewer than two points before T={T}")
    return times[keep]


def _base_config(name, sys, x0, T, ctrl):
    return {"solver": name, "system": sys.representation,
            "x0": list(np.asarray(x0, dtype=float).reshape(-1)), "T": float(T),
            "threshold": ctrl.threshold, "step_floor": ctrl.step_floor,
            "cap_rel": ctrl.cap_rel, "radii": list(ctrl.radii)}


def ode_solve(sys: VectorFieldSystem, driver: SampledPath, x0, T=None,
              ctrl: StepControl = StepControl()) -> Trajectory:
    """dx = b(t, x) dt + d gamma: explicit Euler on the driver grid with
    adaptive drift substepping.  With b = 0 the increments reproduce the
    driver's bit for bit."""
    T = float(driver.times[-1]) if T is None else float(T)
    times = _restrict(driver.times, T)
    if driver.dim != sys.dim:
        raise ValueError(f"driver dim {driver.dim} != system dim {sys.dim}")
    dgamma = np.diff(driver.values, axis=0)
    return _drive(sys, times, lambda i, x: dgamma[i], x0, ctrl,
                  _base_config("ode", sys, x0, T, ctrl))


def young_solve(sys: VectorFieldSystem, driver: SampledPath, x0, T=None,
                ctrl: StepControl = StepControl()) -> Trajectory:
    """dx = b(x) dt + sigma(x) d gamma, first-order one-step scheme.

    Driver regularity above 1/2 is the caller's declaration; for a Brownian
    driver the same recursion is the Euler-Maruyama scheme."""
    T = float(driver.times[-1]) if T is None else float(T)
    times = _restrict(driver.times, T)
    if driver.dim != sys.driver_dim:
        raise ValueError(f"driver dim {driver.dim} != system driver_dim {sys.driver_dim}")
    dgamma = np.diff(driver.values, axis=0)

    def inc(i, x):
        return sys.diffusion(x) @ dgamma[i]

    return _drive(sys, times, inc, x0, ctrl, _base_config("young", sys, x0, T, ctrl))


def rde_solve(sys: VectorFieldSystem, rp: RoughPath, x0, T=None,
              ctrl: StepControl = StepControl()) -> Trajectory:
    """Davie step against a two-level rough driver:

        x_{i+1} = x_i + b dt + sigma(x_i) X_cell + (D sigma sigma)(x_i) XX_cell

    with the second-level contraction sum_{j,k} Dsigma[d,k,e] sigma[e,j]
    XX[j,k].  Zeroing the second level reduces to the first-order scheme on
    the same grid."""
    T = float(rp.times[-1]) if T is None else float(T)
    times = _restrict(rp.times, T)
    if rp.dim != sys.driver_dim:
        raise ValueError(f"rough path dim {rp.dim} != system driver_dim {sys.driver_dim}")
    dX = np.diff(rp.level1.values, axis=0)
    cells = rp.cells

    def inc(i, x):
        sig = sys.diffusion(x)
        ds = np.asarray(sys.Dsigma(x), dtype=float)
        return sig @ dX[i] + np.einsum("dke,ej,jk->d", ds, sig, cells[i])

    return _drive(sys, times, inc, x0, ctrl, _base_config("rde", sys, x0, T, ctrl))


def derivative_flow(sys: VectorFieldSystem, driver, x0, v0, T=None,
                    ctrl: StepControl = StepControl()):
    """Jointly steps the state and its first-variation:

        v_{i+1} = v_i + Db(t_i, x_i) v_i dt + sum_k Dsigma_k(x_i) v_i dX^k_i.

    driver may be a sampled path or a rough path (the variation uses level-1
    increments either way).  Returns (trajectory, v_path)."""
    if isinstance(driver, RoughPath):
        traj = rde_solve(sys, driver, x0, T, ctrl)
        lvl1 = driver.level1
    elif sys.sigma is not None:
        traj = young_solve(sys, driver, x0, T, ctrl)
        lvl1 = driver
    else:
        traj = ode_solve(sys, driver, x0, T, ctrl)
        lvl1 = driver
    times = traj.path.times
    xs = traj.path.values
    dX = np.diff(lvl1.values, axis=0)
    v = np.asarray(v0, dtype=float).reshape(-1).copy()
    vs = [v.copy()]
    tol = 1e-12 * max(1.0, abs(float(lvl1.times[-1])))
    for i in range(xs.shape[0] - 1):
        dt = float(times[i + 1] - times[i])
        x = xs[i]
        if sys.Db is not None:
            v = v + dt * (np.asarray(sys.Db(times[i], x), dtype=float) @ v)
        # driver increments only act on full driver cells (a blown-up run's
        # final partial cell is drift-only)
        full_cell = i + 1 < lvl1.n and abs(times[i + 1] - lvl1.times[i + 1]) <= tol
        if full_cell and sys.sigma is not None and sys.Dsigma is not None:
            ds = np.asarray(sys.Dsigma(x), dtype=float)
            v = v + np.einsum("dke,e,k->d", ds, v, dX[i])
        vs.append(v.copy())
    return traj, SampledPath(times, np.vstack(vs))


def localize_solve(sys: VectorFieldSystem, driver: SampledPath, x0, radii, T=None,
                   ctrl: StepControl = StepControl()) -> Trajectory:
    """Solve by patching drift-clamped problems shell by shell.

    Inside shell k the drift is b(t, x) for |x| <= R_k and b(t, R_k x / |x|)
    outside; when the state first leaves the closed ball R_k the field
    switches to the next clamp and the solve continues from the exit state.
    Exit times accumulating before T (ladder exhausted at a radius past the
    blow-up threshold) declare blow-up; a trajectory that never makes the
    clamps bind reproduces the direct solve exactly.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or radii.size == 0 or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be a nonempty strictly increasing 1-d array")
    if radii[-1] < ctrl.threshold:
        raise ValueError("radius ladder must reach the blow-up threshold "
                         f"({radii[-1]:.3g} < {ctrl.threshold:.3g})")
    T = float(driver.times[-1]) if T is None else float(T)
    times = _restrict(driver.times, T)
    x = np.asarray(x0, dtype=float).reshape(-1).copy()
    tracker = _Tracker(ctrl, times[0], x)
    dgamma = np.diff(driver.values, axis=0)

    k = int(np.searchsorted(radii, np.linalg.norm(x), side="left"))
    exits = [(float(radii[j]), float(times[0])) for j in range(k)]

    def clamped(R):
        def bR(t, y):
            nrm = float(np.linalg.norm(y))
            if nrm <= R:
                return sys.drift(t, y)
            return sys.drift(t, (R / nrm) * y)
        return bR

    rec_t = [float(times[0])]
    rec_x = [x.copy()]
    status = COMPLETED
    blowup_time = None

    def exited(t_now):
        nonlocal k
        moved = False
        while k < radii.size and float(np.linalg.norm(x)) > radii[k]:
            exits.append((float(radii[k]), float(t_now)))
            k += 1
            moved = True
        return moved and k == radii.size

    for i in range(times.shape[0] - 1):
        remaining = float(times[i + 1] - times[i])
        t_now = float(times[i])
        inc = dgamma[i]
        exhausted = False
        while remaining > 0.0:
            drift = clamped(radii[min(k, radii.size - 1)])
            bv = drift(t_now, x)
            speed = float(np.linalg.norm(bv))
            h = remaining
            if speed > 0.0:
                cap = ctrl.cap_rel * max(float(np.linalg.norm(x)), 1.0)
                if speed * h > cap:
                    h = cap / speed
                    if h < ctrl.step_floor:
                        status = STEP_FLOOR
                        break
            x = x + h * bv
            t_now += h
            remaining -= h
            tracker.observe(t_now, x)
            if exited(t_now):
                exhausted = True
                break
        if status == STEP_FLOOR:
            break
        if exhausted:
            status = BLOWN_UP
            blowup_time = (tracker.threshold_time
                           if tracker.threshold_time is not None else float(t_now))
            if t_now > rec_t[-1] + 1e-300:
                rec_t.append(float(t_now))
                rec_x.append(x.copy())
            break
        x = x + inc
        tracker.observe(times[i + 1], x)
        if exited(times[i + 1]):
            status = BLOWN_UP
            blowup_time = (tracker.threshold_time
                           if tracker.threshold_time is not None else float(times[i + 1]))
            rec_t.append(float(times[i + 1]))
            rec_x.append(x.copy())
            break
        rec_t.append(float(times[i + 1]))
        rec_x.append(x.copy())

    path = SampledPath(np.asarray(rec_t), np.vstack(rec_x))
    cfg = _base_config("localize", sys, x0, T, ctrl)
    cfg["shell_radii"] = [float(r) for r in radii]
    cfg["shell_exits"] = [(r, t) for r, t in exits]
    return Trajectory(path=path, status=status, blowup_time=blowup_time,
                      level_crossings=tuple(exits), eta=None, config=cfg)


@dataclass(frozen=True)
class FlowPointSummary:
    x0: tuple
    status: str
    blowup_time: float | None
    endpoint: tuple
    sup_norm: float


def flow_grid(sys: VectorFieldSystem, driver: SampledPath, x0s, T=None,
              ctrl: StepControl = StepControl(), neighbor_pairs=None,
              max_workers: int = 1):
    """Runs the flow from many starts under one shared driver realization.

    Returns (summaries, neighbor_distances): per-start records plus endpoint
    distances for the given neighbor index pairs (completed pairs only).
    The per-start solves are independent and pure, so they parallelize over
    a bounded thread pool when max_workers > 1.
    """
    x0s = np.asarray(x0s, dtype=float)
    if x0s.ndim == 1:
        x0s = x0s[:, None]

    def run(x0):
        if sys.sigma is not None:
            traj = young_solve(sys, driver, x0, T, ctrl)
        else:
            traj = ode_solve(sys, driver, x0, T, ctrl)
        return FlowPointSummary(
            x0=tuple(float(v) for v in x0),
            status=traj.status,
            blowup_time=traj.blowup_time,
            endpoint=tuple(float(v) for v in traj.path.values[-1]),
            sup_norm=float(np.max(np.linalg.norm(traj.path.values, axis=1))),
        )

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            summaries = list(pool.map(run, x0s))
    else:
        summaries = [run(x0) for x0 in x0s]

    distances = []
    for a, b in (neighbor_pairs or []):
        sa, sb = summaries[a], summaries[b]
        if sa.status == COMPLETED and sb.status == COMPLETED:
            d = float(np.linalg.norm(np.asarray(sa.endpoint) - np.asarray(sb.endpoint)))
            distances.append((a, b, d))
    return summaries, distances
