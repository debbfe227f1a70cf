"""Comparison-diffusion simulation: oracles, invariants, and samplers."""

import math

import numpy as np
import pytest

from reflectcost import comparison as cmp, cost
from reflectcost.specfun import CurvatureDimension, chi

CD_FLAT = CurvatureDimension(0.0, math.inf)
CD_SPHERE = CurvatureDimension(1.0, 2.0)


def cfg_for(t, n, seed=11, dt=1e-3):
    return cmp.SdeConfig(dt=dt, horizon=t, n_paths=n, master_seed=seed)


class TestSdeConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            cmp.SdeConfig(dt=0.0, horizon=1.0, n_paths=1, master_seed=0)
        with pytest.raises(ValueError):
            cmp.SdeConfig(dt=2.0, horizon=1.0, n_paths=1, master_seed=0)
        with pytest.raises(ValueError):
            cmp.SdeConfig(dt=0.1, horizon=1.0, n_paths=0, master_seed=0)

    def test_margin_default_and_bound(self):
        c = cfg_for(1.0, 10)
        assert c.resolve_margin(CD_SPHERE) == pytest.approx(0.05 * math.pi)
        bad = cmp.SdeConfig(dt=1e-3, horizon=1.0, n_paths=10, master_seed=0,
                            boundary_margin=4.0)
        with pytest.raises(ValueError):
            bad.resolve_margin(CD_SPHERE)

    def test_cap_default(self):
        c = cfg_for(1.0, 10, dt=1e-4)
        assert c.resolve_cap() == pytest.approx(50.0 / math.sqrt(1e-4))


class TestSimulateRho:
    def test_initial_condition(self):
        ens = cmp.simulate_rho(CD_SPHERE, 0.7, cfg_for(0.01, 50))
        assert np.all(ens.values[:, 0] == 0.7)

    def test_start_outside_domain_rejected(self):
        with pytest.raises(ValueError):
            cmp.simulate_rho(CD_SPHERE, math.pi, cfg_for(0.01, 5))

    def test_determinism(self):
        e1 = cmp.simulate_rho(CD_SPHERE, 1.0, cfg_for(0.2, 200))
        e2 = cmp.simulate_rho(CD_SPHERE, 1.0, cfg_for(0.2, 200))
        assert np.array_equal(e1.values, e2.values)
        assert np.array_equal(e1.seed_trace, e2.seed_trace)

    def test_reflection_symmetry_exact(self):
        e_pos = cmp.simulate_rho(CD_SPHERE, 1.0, cfg_for(0.2, 200))
        e_neg = cmp.simulate_rho(CD_SPHERE, -1.0, cfg_for(0.2, 200))
        assert np.array_equal(e_neg.values, -e_pos.values)
        assert np.allclose(e_neg.absorbed_at, e_pos.absorbed_at, equal_nan=True)

    def test_flat_case_is_scaled_brownian(self):
        # variance of rho(t) from 0 is 8t
        t = 0.7
        ens = cmp.simulate_rho(CD_FLAT, 0.0, cfg_for(t, 20_000, dt=1e-3),
                               store_times=[t])
        var = ens.values[:, -1].var()
        se = 8.0 * t * math.sqrt(2.0 / 20_000)
        assert abs(var - 8.0 * t) < 3.0 * se

    def test_entrance_boundary_never_reached(self):
        ens = cmp.simulate_rho(CD_SPHERE, math.pi / 2, cfg_for(1.0, 2000))
        assert np.nanmax(np.abs(ens.values)) < math.pi

    def test_kill_masks_values_after_absorption(self):
        ens = cmp.simulate_rho(CD_FLAT, 0.3, cfg_for(0.5, 500), kill_at_zero=True)
        absorbed = ~np.isnan(ens.absorbed_at)
        assert absorbed.any()
        i = int(np.argmax(absorbed))
        after = ens.times > ens.absorbed_at[i]
        assert np.all(np.isnan(ens.values[i, after]))

    def test_pathwise_comparison_pre_absorption(self):
        # K >= K', N <= N', same noise: ordered until the lower one dies
        cfg = cfg_for(0.5, 400, seed=99)
        pairs = [((1.0, 2.0), (0.0, 5.0)), ((0.0, 5.0), (-1.0, math.inf)),
                 ((1.0, 2.0), (-1.0, math.inf))]
        for (K1, N1), (K2, N2) in pairs:
            lo = cmp.simulate_rho(CurvatureDimension(K1, N1), 1.0, cfg, kill_at_zero=True)
            hi = cmp.simulate_rho(CurvatureDimension(K2, N2), 1.0, cfg, kill_at_zero=True)
            alive_lo = ~np.isnan(lo.values)
            assert not np.any(alive_lo & np.isnan(hi.values))
            excess = np.max(lo.values[alive_lo] - hi.values[alive_lo])
            assert excess <= 10.0 * cfg.dt


class TestSurvival:
    def test_domain(self):
        with pytest.raises(ValueError):
            cmp.survival_probability(CD_SPHERE, 0.0, 1.0, cfg_for(1.0, 10))
        with pytest.raises(ValueError):
            cmp.survival_probability(CD_SPHERE, 3.5, 1.0, cfg_for(1.0, 10))

    def test_far_from_barrier_one_step(self):
        est, se = cmp.survival_probability(CD_FLAT, 3.0, 1e-3, cfg_for(1e-3, 2000))
        assert est == pytest.approx(1.0, abs=1e-3)

    def test_flat_closed_form_oracle(self):
        # chi(1) at a = 2 sqrt(2), t = 1
        est, se = cmp.survival_probability(CD_FLAT, 2.0 * math.sqrt(2.0), 1.0,
                                           cfg_for(1.0, 40_000, seed=5))
        assert abs(est - chi(1.0)) < 3.0 * se + 0.004

    def test_monotone_in_t_and_a(self):
        cfg = cfg_for(1.0, 20_000, seed=6)
        e_short, s1 = cmp.survival_probability(CD_FLAT, 1.0, 0.25, cfg)
        e_long, s2 = cmp.survival_probability(CD_FLAT, 1.0, 1.0, cfg)
        assert e_long <= e_short + 3.0 * (s1 + s2)
        e_small, s3 = cmp.survival_probability(CD_FLAT, 0.5, 1.0, cfg)
        assert e_small <= e_long + 3.0 * (s2 + s3)


class TestSampleZeta:
    def test_requires_finite_n(self):
        with pytest.raises(ValueError):
            cmp.sample_zeta(CD_FLAT, 1.0, 10, cfg_for(1.0, 10))

    def test_flat_n2_integrand_is_constant(self):
        ms = cmp.sample_zeta(CurvatureDimension(0.0, 2.0), 0.3, 500, cfg_for(0.3, 500))
        assert ms.samples == pytest.approx(0.3, abs=1e-12)

    def test_positive_curvature_samples_at_least_t(self):
        ms = cmp.sample_zeta(CD_SPHERE, 0.4, 2000, cfg_for(0.4, 2000))
        assert np.all(ms.samples >= 0.4 - 1e-9)

    def test_negative_curvature_samples_at_most_t(self):
        ms = cmp.sample_zeta(CurvatureDimension(-1.0, 3.0), 0.4, 2000, cfg_for(0.4, 2000))
        assert np.all(ms.samples <= 0.4 + 1e-9)

    def test_series_cross_check(self):
        t = 0.5
        ms = cmp.sample_zeta(CD_SPHERE, t, 20_000, cfg_for(t, 20_000, dt=5e-4))
        mix = cost.phi_mixture(ms, math.pi / 2)
        ser = cost.phi_series(CD_SPHERE, t, math.pi / 2)
        assert abs(mix.value - ser.value) < 0.02


class TestHyperbolicSampler:
    def test_domain(self):
        with pytest.raises(ValueError):
            cmp.sample_zeta_hyperbolic(1.0, 3.0, 1.0, 10, cfg_for(1.0, 10))
        with pytest.raises(ValueError):
            cmp.sample_zeta_hyperbolic(-1.0, math.inf, 1.0, 10, cfg_for(1.0, 10))

    def test_short_time_limit(self):
        # theta'(0) = 1, so samples -> t as t -> 0
        t = 1e-4
        ms = cmp.sample_zeta_hyperbolic(-1.0, 3.0, t, 500,
                                        cfg_for(t, 500, dt=t / 50))
        assert ms.samples == pytest.approx(t, rel=2e-2)

    def test_two_representations_same_law(self):
        t = 1.0
        cfg = cfg_for(t, 20_000, seed=3)
        mi = cmp.sample_zeta(CurvatureDimension(-1.0, 3.0), t, 20_000, cfg)
        mh = cmp.sample_zeta_hyperbolic(-1.0, 3.0, t, 20_000, cfg)
        for a in (0.5, 1.0, 2.0):
            assert abs(cost.phi_mixture(mi, a).value
                       - cost.phi_mixture(mh, a).value) < 0.02


class TestConstancy:
    def test_validation(self):
        with pytest.raises(ValueError):
            cmp.constancy_statistic(CD_FLAT, 1.0, 1.0, [], cfg_for(1.0, 10))
        with pytest.raises(ValueError):
            cmp.constancy_statistic(CD_FLAT, 1.0, 1.0, [0.5, 0.25], cfg_for(1.0, 10))

    def test_s_zero_is_exact(self):
        out = cmp.constancy_statistic(CD_FLAT, 1.0, 1.0, [0.0], cfg_for(1.0, 10))
        s, est, se = out[0]
        assert se == 0.0
        assert est == pytest.approx(float(cost.phi_closed(0.0, 1.0, 1.0)), abs=1e-12)

    def test_s_equals_t_matches_survival_estimate(self):
        cfg = cfg_for(0.5, 5000, seed=21)
        out = cmp.constancy_statistic(CD_FLAT, 1.0, 0.5, [0.5], cfg)
        _, est, _ = out[0]
        surv, _ = cmp.survival_probability(CD_FLAT, 1.0, 0.5, cfg)
        assert est == pytest.approx(surv, abs=1e-12)

    def test_flat_constancy(self):
        cfg = cfg_for(1.0, 20_000, seed=2)
        ref = float(cost.phi_closed(0.0, 1.0, 1.0))
        for s, est, se in cmp.constancy_statistic(CD_FLAT, 1.0, 1.0,
                                                  [0.0, 0.25, 0.5, 0.75], cfg):
            assert abs(est - ref) <= 3.0 * se + 1e-12
