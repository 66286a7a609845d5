"""Certificate oracles: radius algebra, envelopes, audits, growth checks."""

import json
import math

import numpy as np
import pytest

from roughflow.certificates import (
    GrowthSpec,
    audit_batch,
    base_radius,
    check_orthogonal_growth,
    check_radial_growth,
    check_rde_growth,
    crossing_audit,
    difference_energy_check,
    escape_time_envelope,
    estimate_K,
    growth_control,
    hq_value,
    level_time_scale,
    merge_reports,
    one_point_propagation_audit,
    positivity_margin,
    pvar_audit,
    strong_completeness_check,
)
from roughflow.fields import VectorFieldSystem, system_from_polynomial
from roughflow.noise import DriverSpec, brownian, levy
from roughflow.paths import SampledPath
from roughflow.solvers import localize_solve, ode_solve, young_solve

from conftest import additive_noise_system, linear_decay_system, mono


def affine_spec(beta=1.5, **kw):
    return GrowthSpec.from_preset("affine", beta=beta, **kw)


def zero_path(T=1.0, n_cells=256, dim=1):
    t = np.linspace(0.0, T, n_cells + 1)
    return SampledPath(t, np.zeros((n_cells + 1, dim)))


# ---------------------------------------------------------------- radius


def test_base_radius_closed_forms():
    assert base_radius(0.0, 0.0) == 2.0
    assert base_radius(1.0, 0.0) == pytest.approx(3.0 + math.sqrt(13.0), abs=1e-14)


def test_base_radius_solves_its_quadratic():
    for K in np.linspace(0.0, 8.0, 10):
        for b in np.linspace(0.0, 12.0, 10):
            R0 = base_radius(K, b)
            resid = R0 * R0 - 2.0 * (2.0 * K + 1.0) * R0 - 2.0 * K * (2.0 + b)
            assert abs(resid) < 1e-10 * max(1.0, R0 * R0)


def test_base_radius_rejects_negative_inputs():
    with pytest.raises(ValueError):
        base_radius(-0.1, 0.0)
    with pytest.raises(ValueError):
        base_radius(0.0, -1.0)


def test_level_time_scale_oracle():
    spec = affine_spec()
    # min(1, 1/f(R), (a/K)^(1/(beta-1))) with f(s) = 1 + s
    assert level_time_scale(spec, 7.0, 1.0, 0) == pytest.approx(0.125, abs=1e-15)
    # the driver-oscillation cap binds for large K: (1/4)^2 = 1/16
    assert level_time_scale(spec, 0.5, 4.0, 0) == pytest.approx(1.0 / 16.0, abs=1e-15)
    ks = np.arange(12)
    deltas = level_time_scale(spec, 3.0, 1.0, ks)
    assert deltas.shape == (12,)
    assert np.all(np.diff(deltas) <= 0.0)


def test_level_time_scale_validation():
    spec = affine_spec()
    with pytest.raises(ValueError, match="positive"):
        level_time_scale(spec, 0.0, 1.0, 0)
    with pytest.raises(ValueError, match="positive"):
        level_time_scale(spec, 1.0, -1.0, 0)
    flat = GrowthSpec(f=lambda s: 0.0 * s, beta=1.5)
    with pytest.raises(ValueError, match="positive at the ladder"):
        level_time_scale(flat, 1.0, 1.0, 0)


# ---------------------------------------------------------------- envelope


def test_envelope_constant_control_is_affine():
    spec = GrowthSpec(f=lambda s: 1.0 + 0.0 * s, beta=1.5)
    env = escape_time_envelope(spec, R=5.0, K=1.0, k_max=16)
    # delta_k = 1 for every rung, so psi(N) = N + 2
    assert np.allclose(env.values, env.nodes + 2.0)
    assert not env.exhausted
    for n in (0.0, 3.0, 7.5, 16.0):
        assert env.psi_inv(env.psi(n)) == pytest.approx(n, abs=1e-12)


def test_envelope_summable_tail_is_exhausted():
    spec = GrowthSpec(f=lambda s: s * s, beta=1.5)
    env = escape_time_envelope(spec, R=2.0, K=1.0, k_max=32)
    assert env.exhausted


def test_envelope_horizon_shortfall_is_exhausted():
    spec = GrowthSpec(f=lambda s: 1.0 + 0.0 * s, beta=1.5)
    env = escape_time_envelope(spec, R=5.0, K=1.0, k_max=4, horizon=100.0)
    assert env.exhausted


def test_envelope_range_validation():
    spec = GrowthSpec(f=lambda s: 1.0 + 0.0 * s, beta=1.5)
    env = escape_time_envelope(spec, R=5.0, K=1.0, k_max=4)
    with pytest.raises(ValueError, match="rung index"):
        env.psi(5.0)
    with pytest.raises(ValueError, match="beyond envelope"):
        env.psi_inv(env.values[-1] + 1.0)
    with pytest.raises(ValueError, match="k_max"):
        escape_time_envelope(spec, R=5.0, K=1.0, k_max=0)


def test_estimate_K_linear_curve():
    t = np.linspace(0.0, 1.0, 2049)
    eta = SampledPath(t, t.copy())
    # (beta-1)-Holder seminorm of the identity on [0, 1] is span^(1-(beta-1)) = 1
    assert estimate_K(eta, 1.5) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ValueError, match="beta"):
        estimate_K(eta, 1.0)
    with pytest.raises(ValueError, match="beta"):
        estimate_K(eta, 2.0)


# ---------------------------------------------------------------- crossing audit


def ou_run(seed, T=5.0, level=10):
    sys_ = additive_noise_system(dim=1, decay=1.0)
    w = brownian(DriverSpec("brownian", dim=1, T=T, level=level, seed=seed))
    return young_solve(sys_, w, [0.5])


def test_crossing_audit_ou_passes():
    spec = affine_spec(beta=1.4, a=1.0, b_a_T=1.0)
    traj = ou_run(0)
    K = estimate_K(traj.eta, spec.beta)
    R = 1.01 * base_radius(K, spec.b_a_T)
    rep = crossing_audit(traj, None, spec, R)
    assert rep.overall == "pass"
    assert rep.levels[0].k == 0 and rep.levels[0].tau == 0.0
    assert all(l.verdict == "pass" for l in rep.levels)
    assert "overall: pass" in rep.table()


def test_crossing_audit_quiet_driver_is_inconclusive():
    traj = ode_solve(linear_decay_system(), zero_path(2.0), [1.0])
    rep = crossing_audit(traj, None, affine_spec(), R=3.0)
    assert rep.overall == "inconclusive"
    assert all(l.vacuous for l in rep.levels)


def test_crossing_audit_fast_ramp_fails():
    # driver climbs 12 units in 0.01s: oscillation in the rung-1 window
    # dwarfs K * delta^(beta-1)
    t = np.linspace(0.0, 1.0, 1025)
    v = np.clip((t - 0.5) / 0.01, 0.0, 1.0) * 12.0
    gamma = SampledPath(t, v)
    traj = young_solve(additive_noise_system(dim=1, decay=None), gamma, [0.0])
    rep = crossing_audit(traj, None, affine_spec(), R=7.0, K=1.0)
    assert rep.overall == "fail"
    assert any(l.verdict == "fail" and l.oscillation > l.bound for l in rep.levels)


def test_crossing_audit_validation():
    traj = ou_run(0)
    with pytest.raises(ValueError, match="R must be positive"):
        crossing_audit(traj, None, affine_spec(), R=0.0)
    loc = localize_solve(
        linear_decay_system(), zero_path(1.0), [1.0], np.geomspace(10.0, 1e8, 4)
    )
    with pytest.raises(ValueError, match="effective driver"):
        crossing_audit(loc, None, affine_spec(), R=3.0)


def test_report_json_round_trip():
    spec = affine_spec(beta=1.4, a=1.0, b_a_T=1.0)
    traj = ou_run(0)
    rep = crossing_audit(traj, None, spec, R=20.0, K=2.0)
    payload = json.loads(rep.to_json())
    assert payload["overall"] == rep.overall
    assert payload["R"] == rep.R and payload["K"] == rep.K
    assert len(payload["levels"]) == len(rep.levels)
    assert payload["envelope"]["values"][-1] >= payload["envelope"]["values"][0]


def test_audit_batch_merges_runs():
    spec = affine_spec(beta=1.4, a=1.0, b_a_T=1.0)
    trajs = [ou_run(s) for s in range(3)]
    reports, merged = audit_batch(trajs, None, spec, R=25.0, K=2.0)
    assert len(reports) == 3
    assert merged.overall in ("pass", "inconclusive")
    assert merged.config["merged_from"] == 3
    # merged rung keeps the shortest gap and largest oscillation
    for l in merged.levels:
        group = [r.levels[l.k] for r in reports if l.k < len(r.levels)]
        assert l.gap == min(g.gap for g in group)
        assert l.oscillation == max(g.oscillation for g in group)
    par_reports, par_merged = audit_batch(trajs, None, spec, R=25.0, K=2.0, max_workers=2)
    assert par_merged.overall == merged.overall
    assert [r.overall for r in par_reports] == [r.overall for r in reports]
    with pytest.raises(ValueError, match="nothing to merge"):
        merge_reports([])


# ---------------------------------------------------------------- growth specs


def test_growth_spec_validation():
    with pytest.raises(ValueError, match="beta"):
        GrowthSpec(f=lambda s: 1.0 + s, beta=2.5)
    with pytest.raises(ValueError, match="non-decreasing"):
        GrowthSpec(f=lambda s: 1.0 / (1.0 + s), beta=1.5)
    with pytest.raises(ValueError, match="nonnegative"):
        GrowthSpec(f=lambda s: s - 100.0, beta=1.5)
    with pytest.raises(KeyError, match="unknown control"):
        growth_control("cubic")
    spec = affine_spec()
    assert spec.control(3.0) == 4.0
    assert spec.describe()["f"] == "affine"


# ---------------------------------------------------------------- energy check


def test_energy_check_pure_curve_has_no_excess():
    # b = 0 makes x - gamma constant, so the budget is never exceeded
    sys_ = additive_noise_system(dim=1, decay=None)
    w = brownian(DriverSpec("brownian", dim=1, T=1.0, level=8, seed=3))
    traj = young_solve(sys_, w, [0.7])
    rec = difference_energy_check(sys_, traj, w, affine_spec())
    assert rec.assumption_ok
    assert rec.residual <= 1e-12


def test_energy_check_contracting_drift():
    sys_ = additive_noise_system(dim=1, decay=1.0)
    w = brownian(DriverSpec("brownian", dim=1, T=1.0, level=8, seed=3))
    traj = young_solve(sys_, w, [0.7])
    rec = difference_energy_check(sys_, traj, w, affine_spec())
    assert rec.assumption_ok
    assert rec.residual <= 1e-12


def test_energy_check_declines_when_control_is_too_small():
    # |b(x)| = |x|^3 outgrows the affine control at |x| = 2
    sys_ = system_from_polynomial({"dim": 1, "b": [[mono(-1.0, 3)]]})
    traj = ode_solve(sys_, zero_path(1.0), [2.0])
    rec = difference_energy_check(sys_, traj, zero_path(1.0), affine_spec())
    assert not rec.assumption_ok
    assert math.isnan(rec.residual)
    assert rec.assumption_margin > 0.0


def test_energy_check_grid_mismatch():
    sys_ = additive_noise_system(dim=1)
    w = brownian(DriverSpec("brownian", dim=1, T=1.0, level=8, seed=3))
    traj = young_solve(sys_, w, [0.7])
    with pytest.raises(ValueError, match="share the sample grid"):
        difference_energy_check(sys_, traj, zero_path(1.0, 100), affine_spec())


# ---------------------------------------------------------------- pvar audit


def test_pvar_audit_splits_jump_levels():
    spec = affine_spec(beta=1.5)
    drv = DriverSpec("levy", dim=1, T=1.0, level=8, seed=0,
                     params={"jumps": [[0.2, [8.0]], [0.5, [8.0]], [0.8, [8.0]]]})
    gamma = levy(drv)
    traj = young_solve(additive_noise_system(dim=1, decay=None), gamma, [0.0])
    rep = pvar_audit(traj, gamma, spec, p=2.0)
    R = base_radius(1.0, 0.0) + 1.0
    assert rep.R == pytest.approx(R)
    assert rep.q == pytest.approx(2.0)
    # each jump carries the state across one rung; rung 0 stays quiet
    assert tuple(b.k for b in rep.bad_levels) == (1, 2, 3)
    assert rep.good_gap_violations == ()
    expect_sum = sum(1.0 / (1.0 + (k + 1) * R) for k in (1, 2, 3))
    assert rep.bad_level_sum == pytest.approx(expect_sum, abs=1e-12)
    # monotone jumps: q-variation is the endpoint gap
    assert rep.pvar == pytest.approx(24.0, abs=1e-12)
    assert rep.pvar_bound == pytest.approx(1.0 + 576.0, abs=1e-9)
    assert rep.passed


def test_pvar_audit_validation():
    spec = affine_spec(beta=1.5)
    gamma = zero_path(1.0)
    traj = ode_solve(linear_decay_system(), gamma, [0.5])
    with pytest.raises(ValueError, match="p must exceed 1"):
        pvar_audit(traj, gamma, spec, p=1.0)
    with pytest.raises(ValueError, match="beta <= 1"):
        pvar_audit(traj, gamma, affine_spec(beta=1.8), p=2.0)


# ---------------------------------------------------------------- propagation


def test_propagation_audit_expanding_linear_field():
    # b = x doubles differences every ln 2: every rung gap beats 1/f
    sys_ = system_from_polynomial({"dim": 1, "b": [[mono(1.0, 1)]]})
    rep = one_point_propagation_audit(
        sys_, zero_path(5.0, 2048), [0.0], [[1.0], [-1.0]], affine_spec(), R=4.0
    )
    assert rep.assumption_ok
    assert rep.assumption_margin <= 1e-9
    assert rep.n_crossings > 10
    assert rep.passed
    assert all(r.gap + 1e-2 >= r.required for r in rep.gaps)


def test_propagation_audit_double_well_passes():
    sys_ = system_from_polynomial({"dim": 1, "b": [[mono(1.0, 1), mono(-1.0, 3)]]})
    rep = one_point_propagation_audit(
        sys_, zero_path(2.0, 512), [0.1], [[1.2], [-0.8]], affine_spec(), R=4.0
    )
    assert rep.assumption_ok
    assert rep.passed


def test_propagation_audit_skips_on_pairwise_violation():
    # b = x^3 violates the one-sided pairwise bound at moderate radii
    sys_ = system_from_polynomial({"dim": 1, "b": [[mono(1.0, 3)]]})
    rep = one_point_propagation_audit(
        sys_, zero_path(1.0, 128), [0.0], [[2.0]], affine_spec(), R=4.0
    )
    assert not rep.assumption_ok
    assert rep.config.get("skipped")
    assert rep.gaps == ()


def test_propagation_audit_radius_floor():
    sys_ = linear_decay_system()
    with pytest.raises(ValueError, match="R must exceed"):
        one_point_propagation_audit(
            sys_, zero_path(1.0, 64), [0.0], [[1.0]], affine_spec(), R=3.7
        )


# ---------------------------------------------------------------- positivity


def test_positivity_identity_pair():
    x_star, eps_star = positivity_margin(
        lambda x: x - 5.0, lambda x: x - 5.0, lambda e: e, r=0.5, x_max=10.0
    )
    assert abs(x_star - 5.0) < 1e-9
    # (1 - eps)(x - 5) > 0 for every eps below 1; the grid stops one step short
    assert eps_star == pytest.approx(1.0 - 2.0 ** -21, abs=1e-12)


def test_positivity_zero_subtrahend_gives_full_margin():
    x_star, eps_star = positivity_margin(
        lambda x: x - 5.0, lambda x: 0.0 * x, lambda e: e, r=0.5, x_max=10.0
    )
    assert eps_star == 1.0


def test_positivity_empty_range_gives_full_margin():
    x_star, eps_star = positivity_margin(
        lambda x: x - 5.0, lambda x: x, lambda e: e, r=2.0, x_max=6.0
    )
    assert abs(x_star - 5.0) < 1e-9
    assert eps_star == 1.0


def test_positivity_requires_sign_change():
    with pytest.raises(ValueError, match="no sign change"):
        positivity_margin(lambda x: x + 1.0, lambda x: x, lambda e: e, 0.5, 10.0)


# ---------------------------------------------------------------- hq / completeness


def test_hq_drift_only_oracle():
    sys_ = linear_decay_system(dim=2)
    v = np.array([1.0, 0.0])
    assert hq_value(sys_, [0.3, -0.2], v, q=3.0) == pytest.approx(-2.0, abs=1e-12)


def test_hq_multiplicative_oracle():
    # scalar b = -x, sigma = x: H_q = -2 + (q - 2) + 1 = q - 3
    sys_ = system_from_polynomial(
        {"dim": 1, "driver_dim": 1, "b": [[mono(-1.0, 1)]], "sigma": [[[mono(1.0, 1)]]]}
    )
    for q in (2.0, 3.0, 5.5):
        assert hq_value(sys_, [2.0], [1.0], q) == pytest.approx(q - 3.0, abs=1e-12)


def test_completeness_bounded_balance_case():
    # b = -x, sigma = I: <x,b> + |sigma|^2 + <x,sigma>^2 = 1 exactly at c = 1
    sys_ = additive_noise_system(dim=1, decay=1.0)
    samples = np.linspace(-3.0, 3.0, 13)[:, None]
    rep = strong_completeness_check(sys_, 1, samples)
    assert rep.passed
    assert rep.case_name == "bounded"
    assert rep.conditions["balance"].margin <= 1e-12


def test_completeness_bounded_derivative_case():
    sys_ = additive_noise_system(dim=1, decay=1.0)
    samples = np.linspace(-10.0, 10.0, 21)[:, None]
    rep = strong_completeness_check(sys_, 2, samples)
    assert rep.passed
    assert "balance" not in rep.conditions
    # quadratic diffusion breaks the bounded-derivative envelope at radius 10
    steep = system_from_polynomial(
        {"dim": 1, "driver_dim": 1, "b": [[mono(-1.0, 1)]], "sigma": [[[mono(1.0, 2)]]]}
    )
    rep2 = strong_completeness_check(steep, 2, samples)
    assert not rep2.passed
    assert rep2.conditions["grad-sigma"].margin == pytest.approx(399.0, abs=1e-6)


def test_completeness_validation():
    sys_ = additive_noise_system(dim=1, decay=1.0)
    samples = [[1.0]]
    with pytest.raises(ValueError, match="case"):
        strong_completeness_check(sys_, 0, samples)
    with pytest.raises(ValueError, match="eps"):
        strong_completeness_check(sys_, 4, samples)
    with pytest.raises(ValueError, match="eps"):
        strong_completeness_check(sys_, 4, samples, params={"eps": 1.0})
    bare = VectorFieldSystem(dim=1, driver_dim=1, b=lambda t, x: -x)
    with pytest.raises(ValueError, match="needs Db"):
        strong_completeness_check(bare, 1, samples)


# ---------------------------------------------------------------- static growth


def test_static_growth_checks_linear_decay():
    sys_ = linear_decay_system(dim=2)
    rng = np.random.default_rng(0)
    samples = rng.standard_normal((64, 2)) * 3.0
    rad = check_radial_growth(sys_, growth_control("affine"), samples)
    assert rad.passed and rad.n_samples == 64
    orth = check_orthogonal_growth(sys_, growth_control("affine"), 1.5, samples)
    assert orth.passed


def test_rde_growth_checks_additive_system():
    sys_ = additive_noise_system(dim=2, decay=1.0)
    spec = affine_spec(beta=1.5, kappa=0.25, theta=0.5, alpha=0.5)
    rng = np.random.default_rng(1)
    samples = rng.standard_normal((32, 2))
    out = check_rde_growth(sys_, spec, samples)
    assert set(out) == {"drift", "sigma", "dsigma", "d2sigma"}
    assert out["sigma"].passed and out["dsigma"].passed and out["d2sigma"].passed
    with pytest.raises(ValueError, match="kappa"):
        check_rde_growth(sys_, affine_spec(kappa=0.6), samples)
