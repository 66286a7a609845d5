"""Solver oracles: closed forms, blow-up detection, localization, flows."""

import numpy as np
import pytest

from roughflow.noise import DriverSpec, brownian
from roughflow.paths import SampledPath
from roughflow.rough import RoughPath, ito_lift, pure_quadratic_lift
from roughflow.solvers import (
    BLOWN_UP,
    COMPLETED,
    STEP_FLOOR,
    StepControl,
    derivative_flow,
    flow_grid,
    localize_solve,
    ode_solve,
    rde_solve,
    young_solve,
)

from conftest import (
    additive_noise_system,
    linear_decay_system,
    scalar_multiplicative_system,
    square_drift_system,
)


def zero_path(T=1.0, n_cells=1024, dim=1):
    t = np.linspace(0.0, T, n_cells + 1)
    return SampledPath(t, np.zeros((n_cells + 1, dim)))


def test_ode_zero_drift_reproduces_driver():
    w = brownian(DriverSpec("brownian", dim=2, T=1.0, level=8, seed=0))
    from roughflow.fields import system_from_polynomial
    sys_ = system_from_polynomial({"dim": 2})
    traj = ode_solve(sys_, w, [0.0, 0.0])
    assert traj.status == COMPLETED
    # increments re-summed sequentially, so only bit-level drift allowed
    assert np.max(np.abs(traj.path.values - w.values)) < 1e-12


def test_ode_linear_decay_oracle():
    sys_ = linear_decay_system()
    traj = ode_solve(sys_, zero_path(1.0, 1024), [2.0])
    got = float(traj.path.values[-1, 0])
    expect = 2.0 * np.exp(-1.0)
    assert abs(got - expect) / expect < 1e-3, got


def test_ode_driver_dim_guard():
    w = zero_path(1.0, 16, dim=2)
    with pytest.raises(ValueError, match="driver dim"):
        ode_solve(linear_decay_system(), w, [1.0])


def test_young_additive_is_exact():
    sys_ = additive_noise_system(dim=2)
    w = brownian(DriverSpec("brownian", dim=2, T=1.0, level=9, seed=1))
    x0 = np.array([0.5, -0.5])
    traj = young_solve(sys_, w, x0)
    assert traj.status == COMPLETED
    assert np.max(np.abs(traj.path.values - (x0 + w.values))) < 1e-14
    # the recorded effective driver is the raw curve
    assert np.max(np.abs(traj.eta.values - w.values)) < 1e-14


def test_young_smooth_multiplicative_oracle():
    # dx = x dgamma with smooth gamma: x = x0 exp(gamma_t - gamma_0)
    t = np.linspace(0.0, 1.0, 4097)
    gamma = SampledPath(t, np.sin(t))
    traj = young_solve(scalar_multiplicative_system(), gamma, [1.0])
    expect = np.exp(np.sin(t))
    rel = np.max(np.abs(traj.path.values[:, 0] - expect) / expect)
    assert rel < 1e-3, rel


def test_young_driver_dim_guard():
    w = zero_path(1.0, 16, dim=2)
    with pytest.raises(ValueError, match="driver_dim"):
        young_solve(scalar_multiplicative_system(), w, [1.0])


def test_rde_geometric_brownian_oracle():
    w = brownian(DriverSpec("brownian", dim=1, T=1.0, level=12, seed=0))
    rp = ito_lift(w, refine=16)
    traj = rde_solve(scalar_multiplicative_system(), rp, [1.0])
    assert traj.status == COMPLETED
    wt = w.values[::16, 0]
    expect = np.exp(wt - 0.5 * rp.times)
    rel = np.max(np.abs(traj.path.values[:, 0] - expect) / expect)
    assert rel < 0.05, rel


def test_rde_quadratic_time_driver_oracle():
    # level 1 vanishes and each cell's second level is its length, so the
    # Davie step reduces to Euler for x' = (D sigma sigma)(x) = x
    rp = pure_quadratic_lift(1.0, 2.0 ** -10)
    traj = rde_solve(scalar_multiplicative_system(), rp, [1.0])
    got = float(traj.path.values[-1, 0])
    assert abs(got - np.e) / np.e < 5e-3, got


def test_rde_zeroed_second_level_matches_first_order_scheme():
    w = brownian(DriverSpec("brownian", dim=1, T=1.0, level=8, seed=5))
    rp = RoughPath(w, np.zeros((w.n - 1, 1, 1)), alpha=0.5)
    a = rde_solve(scalar_multiplicative_system(), rp, [1.0])
    b = young_solve(scalar_multiplicative_system(), w, [1.0])
    assert np.max(np.abs(a.path.values - b.path.values)) < 1e-14


def test_rde_driver_dim_guard():
    rp = pure_quadratic_lift(1.0, 0.25)
    with pytest.raises(ValueError, match="driver_dim"):
        rde_solve(additive_noise_system(dim=2), rp, [0.0, 0.0])


def test_square_drift_blowup_time():
    traj = ode_solve(square_drift_system(), zero_path(2.0, 2048), [1.0])
    assert traj.status == BLOWN_UP
    assert traj.blowup_time is not None
    assert abs(traj.blowup_time - 1.0) < 0.02, traj.blowup_time
    assert float(traj.path.norms()[-1]) >= 1e8


def test_step_floor_reported():
    ctrl = StepControl(step_floor=1e-3)
    traj = ode_solve(square_drift_system(), zero_path(2.0, 2048), [1.0], ctrl=ctrl)
    assert traj.status == STEP_FLOOR
    assert traj.blowup_time is None


def test_ladder_crossings_match_closed_form():
    # x(t) = 1/(1 - t) crosses R at t = 1 - 1/R
    ctrl = StepControl().with_ladder(2.0, k_max=4)  # rungs 2, 4, 6, 8
    traj = ode_solve(square_drift_system(), zero_path(2.0, 2048), [1.0], ctrl=ctrl)
    crossed = dict(traj.level_crossings)
    for R in (2.0, 4.0, 6.0, 8.0):
        assert R in crossed
        assert abs(crossed[R] - (1.0 - 1.0 / R)) < 0.02, (R, crossed[R])
    times = [t for _, t in traj.level_crossings]
    assert all(a <= b for a, b in zip(times, times[1:]))


def test_horizon_restriction():
    w = zero_path(2.0, 512)
    traj = ode_solve(linear_decay_system(), w, [1.0], T=1.0)
    assert traj.path.times[-1] == pytest.approx(1.0)


def test_localize_inactive_clamps_reproduce_direct_solve():
    w = zero_path(1.0, 256)
    radii = np.geomspace(10.0, 1e8, 8)
    a = localize_solve(linear_decay_system(), w, [1.5], radii)
    b = ode_solve(linear_decay_system(), w, [1.5])
    assert a.status == COMPLETED
    assert np.array_equal(a.path.values, b.path.values)


def test_localize_exit_accumulation_declares_blowup():
    radii = np.geomspace(2.0, 1e8, 40)
    traj = localize_solve(square_drift_system(), zero_path(2.0, 4096), [1.0], radii)
    assert traj.status == BLOWN_UP
    assert abs(traj.blowup_time - 1.0) < 0.03, traj.blowup_time
    exit_times = [t for _, t in traj.level_crossings]
    assert len(exit_times) == 40
    assert all(a <= b for a, b in zip(exit_times, exit_times[1:]))


def test_localize_radii_validation():
    w = zero_path(1.0, 16)
    with pytest.raises(ValueError, match="strictly increasing"):
        localize_solve(square_drift_system(), w, [1.0], [4.0, 2.0, 1e9])
    with pytest.raises(ValueError, match="threshold"):
        localize_solve(square_drift_system(), w, [1.0], [2.0, 4.0])


def test_derivative_flow_linear_decay():
    traj, vpath = derivative_flow(linear_decay_system(), zero_path(1.0, 1024),
                                  [1.0], [3.0])
    assert traj.status == COMPLETED
    got = float(vpath.values[-1, 0])
    expect = 3.0 * np.exp(-1.0)
    assert abs(got - expect) / expect < 1e-2, got


def test_derivative_flow_multiplicative_matches_state_recursion():
    # dv = v dW is the same recursion as dx = x dW when v0 = x0
    sys_ = scalar_multiplicative_system()
    w = brownian(DriverSpec("brownian", dim=1, T=1.0, level=8, seed=2))
    traj, vpath = derivative_flow(sys_, w, [1.0], [1.0])
    assert np.max(np.abs(vpath.values - traj.path.values)) < 1e-14


def test_flow_grid_linear_contraction():
    sys_ = linear_decay_system(dim=1)
    w = zero_path(1.0, 512)
    x0s = [[0.0], [1.0], [2.0]]
    summaries, distances = flow_grid(sys_, w, x0s, neighbor_pairs=[(0, 1), (1, 2)])
    assert [s.status for s in summaries] == [COMPLETED] * 3
    for (_, _, d) in distances:
        assert abs(d - np.exp(-1.0)) < 1e-2
    par = flow_grid(sys_, w, x0s, neighbor_pairs=[(0, 1), (1, 2)], max_workers=2)
    assert par[0] == summaries and par[1] == distances


def test_flow_grid_drops_blown_up_pairs():
    sys_ = square_drift_system()
    w = zero_path(2.0, 1024)
    summaries, distances = flow_grid(sys_, w, [[-1.0], [1.0]], neighbor_pairs=[(0, 1)])
    assert summaries[0].status == COMPLETED
    assert summaries[1].status == BLOWN_UP
    assert distances == []
