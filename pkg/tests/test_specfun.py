"""Special-function layer: oracle values, invariants, and error contracts."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from reflectcost.errors import PoleError
from reflectcost.specfun import (CurvatureDimension, c_k, chi, comparison_fns,
                                 eta, gegenbauer, gegenbauer_value_at_one,
                                 interval_survival, interval_survival_slope0,
                                 norm_cdf, psi, s_k, series_coefficient)


class TestCurvatureDimension:
    def test_rbar_finite_iff_positive_k_finite_n(self):
        assert CurvatureDimension(1.0, 2.0).rbar == pytest.approx(math.pi, abs=1e-15)
        assert CurvatureDimension(2.0, 5.0).rbar == pytest.approx(math.pi * math.sqrt(2.0), rel=1e-15)
        assert math.isinf(CurvatureDimension(0.0, 5.0).rbar)
        assert math.isinf(CurvatureDimension(-1.0, 2.0).rbar)
        assert math.isinf(CurvatureDimension(3.0, math.inf).rbar)

    def test_kbar(self):
        cd = CurvatureDimension(3.0, 4.0)
        assert cd.kbar == pytest.approx(1.0)
        assert cd.kbar_defined
        cdi = CurvatureDimension(3.0, math.inf)
        assert cdi.kbar == 0.0
        assert not cdi.kbar_defined

    def test_n_below_two_rejected(self):
        with pytest.raises(ValueError):
            CurvatureDimension(1.0, 1.5)


class TestComparisonFns:
    def test_flat_branch(self):
        assert comparison_fns(0.0, 2.5) == (2.5, 1.0, 2.5)

    def test_trig_branch(self):
        s, c, t = comparison_fns(1.0, math.pi / 4)
        assert s == pytest.approx(math.sqrt(2) / 2, abs=1e-15)
        assert c == pytest.approx(math.sqrt(2) / 2, abs=1e-15)
        assert t == pytest.approx(1.0, abs=1e-15)

    def test_hyperbolic_branch_hand_values(self):
        # sinh/cosh/tanh of ln 2 by hand: (2 - 1/2)/2, (2 + 1/2)/2, 3/5
        s, c, t = comparison_fns(-1.0, math.log(2.0))
        assert s == pytest.approx(0.75, abs=1e-15)
        assert c == pytest.approx(1.25, abs=1e-15)
        assert t == pytest.approx(0.6, abs=1e-15)

    def test_pole(self):
        with pytest.raises(PoleError):
            comparison_fns(1.0, math.pi / 2)

    @given(st.floats(-5.0, 5.0), st.floats(-8.0, 8.0))
    @settings(max_examples=200, deadline=None)
    def test_pythagorean_identity(self, kbar, theta):
        s = s_k(kbar, theta)
        c = c_k(kbar, theta)
        if abs(s) < 1e8 and abs(c) < 1e8:
            assert c * c + kbar * s * s == pytest.approx(1.0, abs=1e-10)

    @given(st.floats(-4.0, 4.0), st.floats(-3.0, 3.0))
    @settings(max_examples=100, deadline=None)
    def test_ode(self, kbar, theta):
        h = 1e-4
        s2 = (s_k(kbar, theta + h) - 2 * s_k(kbar, theta) + s_k(kbar, theta - h)) / h ** 2
        assert s2 == pytest.approx(-kbar * s_k(kbar, theta), abs=1e-6)

    def test_continuity_at_zero_curvature(self):
        for kbar in (1e-12, -1e-12):
            s, c, t = comparison_fns(kbar, 1.7)
            assert s == pytest.approx(1.7, abs=1e-11)
            assert c == pytest.approx(1.0, abs=1e-11)


class TestChi:
    def test_endpoints(self):
        assert chi(0.0) == 0.0
        assert chi(math.inf) == 1.0

    def test_normal_cdf_oracle(self):
        # 2 Phi(1) - 1
        assert chi(1.0) == pytest.approx(2 * norm.cdf(1.0) - 1.0, abs=1e-14)
        assert chi(1.0) == pytest.approx(0.6826894921370859, abs=1e-14)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            chi(-0.1)

    def test_erf_kernel_relative_accuracy(self):
        r = np.linspace(1e-6, 40.0, 40001)
        mine = chi(r)
        ref = np.array([math.erf(x / math.sqrt(2.0)) for x in r])
        rel = np.abs(mine - ref) / ref
        assert rel.max() < 1e-12

    def test_monotone_and_midpoint_concave(self):
        r = np.linspace(0.0, 12.0, 4001)
        v = chi(r)
        assert np.all(np.diff(v) >= -1e-12)
        assert np.all(0.5 * (v[:-2] + v[2:]) <= v[1:-1] + 1e-12)

    def test_norm_cdf_oracle(self):
        x = np.linspace(-8, 8, 1001)
        assert np.max(np.abs(norm_cdf(x) - norm.cdf(x))) < 1e-14


class TestIntervalSurvival:
    def test_infinite_interval_matches_chi(self):
        T = np.array([0.1, 1.0, 10.0])
        assert interval_survival(0.7, math.inf, T) == pytest.approx(
            list(chi(0.7 / np.sqrt(T))), abs=1e-14)

    def test_reflection_symmetry(self):
        L = 2.0
        for T in (0.05, 0.5, 5.0):
            assert interval_survival(0.3, L, T) == pytest.approx(
                interval_survival(L - 0.3, L, T), abs=1e-12)

    def test_boundary_zero(self):
        assert interval_survival(0.0, 1.0, 0.5) == 0.0
        assert interval_survival(1.0, 1.0, 0.5) == 0.0

    def test_switch_region_continuity(self):
        # image and spectral forms agree where the evaluator switches
        L = math.pi
        Ts = np.linspace(0.4 * L * L, 0.6 * L * L, 41)
        v = interval_survival(1.0, L, Ts)
        assert np.all(np.abs(np.diff(v, 2)) < 1e-6)

    def test_bridge_corrected_mc_oracle(self):
        # Euler BM with crossing corrections at both barriers is unbiased
        rng = np.random.default_rng(3)
        x, L, T = 0.9, math.pi, 1.7
        n, steps = 200_000, 50
        h = T / steps
        pos = np.full(n, x)
        alive = np.ones(n, bool)
        for _ in range(steps):
            new = pos + rng.standard_normal(n) * math.sqrt(h)
            u1 = rng.random(n)
            u2 = rng.random(n)
            cross = ((new <= 0) | (new >= L)
                     | (u1 < np.exp(-2 * np.clip(pos, 0, None) * np.clip(new, 0, None) / h))
                     | (u2 < np.exp(-2 * np.clip(L - pos, 0, None) * np.clip(L - new, 0, None) / h)))
            alive &= ~cross
            pos = new
        est = alive.mean()
        se = math.sqrt(est * (1 - est) / n)
        assert interval_survival(x, L, T) == pytest.approx(est, abs=4 * se)

    def test_slope_matches_finite_difference(self):
        for L, T in ((math.pi, 0.3), (math.pi, 3.0), (2.0, 8.0), (math.inf, 0.7)):
            h = 1e-7
            fd = interval_survival(h, L, T) / h
            assert interval_survival_slope0(L, T) == pytest.approx(fd, rel=1e-5)


class TestEta:
    def test_flat(self):
        assert eta(0.0, 3.0) == 3.0

    def test_zero_time(self):
        assert eta(-2.7, 0.0) == 0.0

    def test_scalar_value(self):
        assert eta(1.0, 1.0) == pytest.approx((math.e ** 2 - 1) / 2, rel=1e-14)

    def test_continuity_at_zero_k(self):
        t = 3.0
        for K in (1e-9, -1e-9, 1e-13):
            assert eta(K, t) == pytest.approx(t, rel=1e-8)
            assert eta(K, t) == pytest.approx(t + K * t * t, rel=1e-12)


class TestPsi:
    def test_vanishes_at_zero_curvature(self):
        assert psi(CurvatureDimension(0.0, 7.0), 1.7) == 0.0
        assert psi(CurvatureDimension(0.0, math.inf), 1.7) == 0.0

    def test_linear_branch(self):
        assert psi(CurvatureDimension(2.0, math.inf), 0.5) == -1.0

    def test_finite_n_branch(self):
        assert psi(CurvatureDimension(1.0, 2.0), math.pi / 2) == pytest.approx(-2.0, rel=1e-14)

    def test_pole_rejected(self):
        cd = CurvatureDimension(1.0, 2.0)
        with pytest.raises(PoleError):
            psi(cd, math.pi)
        with pytest.raises(PoleError):
            psi(cd, -4.0)

    @given(st.floats(-3.0, 3.0), st.floats(2.0, 12.0), st.floats(-2.0, 2.0))
    @settings(max_examples=200, deadline=None)
    def test_exactly_odd(self, K, N, u):
        cd = CurvatureDimension(K, N)
        if abs(u) < cd.rbar:
            assert psi(cd, -u) == -psi(cd, u)

    def test_nonincreasing(self):
        cd = CurvatureDimension(1.5, 3.0)
        u = np.linspace(-0.95 * cd.rbar, 0.95 * cd.rbar, 401)
        vals = [psi(cd, float(x)) for x in u]
        assert np.all(np.diff(vals) <= 1e-12)


def _gegenbauer_series_oracle(n, lam, x):
    """Explicit finite sum for C_n^lambda, independent of the recursion."""
    total = 0.0
    for k in range(n // 2 + 1):
        total += ((-1) ** k * math.exp(math.lgamma(n - k + lam) - math.lgamma(lam))
                  / (math.factorial(k) * math.factorial(n - 2 * k))
                  * (2 * x) ** (n - 2 * k))
    return total


class TestGegenbauer:
    def test_degree_one(self):
        assert gegenbauer(1, 5.0, 0.25) == pytest.approx(1.0, abs=1e-15)

    def test_chebyshev_u_case(self):
        # N=3 -> lambda=1 -> U_2(x) = 4x^2 - 1
        assert gegenbauer(2, 3.0, 0.5) == pytest.approx(0.0, abs=1e-15)

    def test_legendre_endpoint(self):
        assert gegenbauer(4, 2.0, 1.0) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("N", [2.0, 3.0, 4.5])
    def test_series_oracle(self, N):
        lam = (N - 1.0) / 2.0
        xs = np.linspace(-1.0, 1.0, 20)
        for n in range(7):
            for x in xs:
                assert gegenbauer(n, N, float(x)) == pytest.approx(
                    _gegenbauer_series_oracle(n, lam, float(x)), abs=1e-9)

    def test_scipy_cross_check(self):
        from scipy.special import eval_gegenbauer
        xs = np.linspace(-1, 1, 11)
        for n in (3, 8, 15):
            ref = eval_gegenbauer(n, 1.75, xs)  # N = 4.5
            assert gegenbauer(n, 4.5, xs) == pytest.approx(list(ref), rel=1e-10, abs=1e-10)

    def test_value_at_one(self):
        for n, N in ((0, 3.0), (4, 2.0), (6, 4.5)):
            assert gegenbauer_value_at_one(n, N) == pytest.approx(
                gegenbauer(n, N, 1.0), rel=1e-11)

    def test_refuses_large_degree(self):
        with pytest.raises(ValueError):
            gegenbauer(201, 3.0, 0.5)


class TestSeriesCoefficient:
    def test_scalar_value(self):
        # B(1/2, 1/2) = pi cancels the 1/pi prefactor
        cd = CurvatureDimension(1.0, 2.0)
        assert series_coefficient(0, cd, 1.0) == pytest.approx(1.5 * math.exp(-2.0), rel=1e-12)

    def test_sign_alternation(self):
        cd = CurvatureDimension(0.7, 3.5)
        for n in range(8):
            assert math.copysign(1.0, series_coefficient(n, cd, 0.3)) == (-1.0) ** n

    def test_vanishes_at_large_time(self):
        cd = CurvatureDimension(1.0, 2.0)
        assert series_coefficient(0, cd, 1e5) == 0.0

    def test_domain(self):
        with pytest.raises(ValueError):
            series_coefficient(0, CurvatureDimension(-1.0, 3.0), 1.0)
        with pytest.raises(ValueError):
            series_coefficient(0, CurvatureDimension(1.0, math.inf), 1.0)
