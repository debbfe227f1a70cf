"""Exact OT: brute-force oracles, duality, metric structure, degeneracy."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reflectcost import transport as tp
from reflectcost.errors import IterationCapError
from reflectcost.specfun import CurvatureDimension
from reflectcost import cost


def _random_metric(rng, n):
    pts = rng.random((n, 2))
    return np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)


class TestTypes:
    def test_measure_validation(self):
        with pytest.raises(ValueError):
            tp.DiscreteMeasure(np.array([0.5, 0.4]))
        with pytest.raises(ValueError):
            tp.DiscreteMeasure(np.array([1.5, -0.5]))
        tp.DiscreteMeasure(np.array([0.5, 0.5]))

    def test_cost_validation(self):
        with pytest.raises(ValueError):
            tp.CostMatrix(np.array([[0.0, -1.0], [1.0, 0.0]]))
        with pytest.raises(ValueError):
            tp.CostMatrix(np.array([[0.0, 1.0], [2.0, 0.0]]), metric_flag=True)
        with pytest.raises(ValueError):
            tp.CostMatrix(np.array([[0.3, 1.0], [1.0, 0.0]]), metric_flag=True)
        # triangle violation
        e = np.array([[0.0, 1.0, 3.0], [1.0, 0.0, 1.0], [3.0, 1.0, 0.0]])
        with pytest.raises(ValueError):
            tp.CostMatrix(e, metric_flag=True)

    def test_phi_of_distance_is_metric(self):
        # cost built from phi_t(d) on sphere points passes metric validation
        rng = np.random.default_rng(8)
        pts = rng.standard_normal((40, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        d = np.arccos(np.clip(pts @ pts.T, -1, 1))
        np.fill_diagonal(d, 0.0)
        cd = CurvatureDimension(1.0, 2.0)
        vals = cost.phi_values(cd, 0.5, d.ravel(), tol=1e-13).reshape(d.shape)
        vals = 0.5 * (vals + vals.T)
        np.fill_diagonal(vals, 0.0)
        tp.CostMatrix(vals, metric_flag=True)  # must not raise


class TestTransportCost:
    def test_dirac_pair(self):
        rng = np.random.default_rng(0)
        C = tp.CostMatrix(rng.random((6, 6)))
        plan = tp.transport_cost(C, tp.DiscreteMeasure.dirac(2, 6),
                                 tp.DiscreteMeasure.dirac(4, 6))
        assert plan.value == pytest.approx(C.entries[2, 4], abs=1e-15)
        assert plan.matrix[2, 4] == pytest.approx(1.0, abs=1e-12)

    def test_identity_plan_for_equal_marginals(self):
        rng = np.random.default_rng(1)
        D = _random_metric(rng, 12)
        mu = tp.DiscreteMeasure(rng.dirichlet(np.ones(12)))
        plan = tp.transport_cost(tp.CostMatrix(D, metric_flag=True), mu, mu)
        assert plan.value == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(np.diag(plan.matrix), mu.weights, atol=1e-12)

    def test_brute_force_battery(self):
        rng = np.random.default_rng(2)
        for _ in range(60):
            n = int(rng.integers(1, 7))
            C = tp.CostMatrix(rng.random((n, n)))
            uni = tp.DiscreteMeasure(np.full(n, 1.0 / n))
            assert tp.transport_cost(C, uni, uni).value == pytest.approx(
                tp.brute_force_uniform(C), abs=1e-9)

    def test_marginals_and_certificate(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n, m = int(rng.integers(2, 25)), int(rng.integers(2, 25))
            C = tp.CostMatrix(rng.random((n, m)))
            mu = tp.DiscreteMeasure(rng.dirichlet(np.ones(n)))
            nu = tp.DiscreteMeasure(rng.dirichlet(np.ones(m)))
            plan = tp.transport_cost(C, mu, nu)
            assert np.abs(plan.matrix.sum(axis=1) - mu.weights).max() < 1e-9
            assert np.abs(plan.matrix.sum(axis=0) - nu.weights).max() < 1e-9
            assert plan.gap <= 1e-9 * (1.0 + abs(plan.value))
            assert np.all(plan.matrix >= 0.0)

    def test_monotone_in_cost(self):
        rng = np.random.default_rng(4)
        C1 = rng.random((10, 10))
        C2 = C1 + rng.random((10, 10))
        mu = tp.DiscreteMeasure(rng.dirichlet(np.ones(10)))
        nu = tp.DiscreteMeasure(rng.dirichlet(np.ones(10)))
        v1 = tp.transport_cost(tp.CostMatrix(C1), mu, nu).value
        v2 = tp.transport_cost(tp.CostMatrix(C2), mu, nu).value
        assert v1 <= v2 + 1e-12

    def test_transport_metric_axioms(self):
        # T_C is a metric on measures for metric C: symmetry + triangle
        rng = np.random.default_rng(5)
        D = _random_metric(rng, 9)
        C = tp.CostMatrix(D, metric_flag=True)
        ms = [tp.DiscreteMeasure(rng.dirichlet(np.ones(9))) for _ in range(3)]
        t01 = tp.transport_cost(C, ms[0], ms[1]).value
        t10 = tp.transport_cost(C, ms[1], ms[0]).value
        t12 = tp.transport_cost(C, ms[1], ms[2]).value
        t02 = tp.transport_cost(C, ms[0], ms[2]).value
        assert t01 == pytest.approx(t10, abs=1e-8)
        assert t02 <= t01 + t12 + 1e-8

    def test_dimension_mismatch(self):
        C = tp.CostMatrix(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            tp.transport_cost(C, tp.DiscreteMeasure(np.ones(3) / 3),
                              tp.DiscreteMeasure(np.ones(3) / 3))

    def test_iteration_cap(self):
        rng = np.random.default_rng(6)
        C = tp.CostMatrix(rng.random((12, 12)))
        mu = tp.DiscreteMeasure(rng.dirichlet(np.ones(12)))
        nu = tp.DiscreteMeasure(rng.dirichlet(np.ones(12)))
        with pytest.raises(IterationCapError):
            tp.transport_cost(C, mu, nu, max_iter=2)


class TestBruteForce:
    def test_single_point(self):
        assert tp.brute_force_uniform(tp.CostMatrix(np.array([[0.7]]))) == 0.7

    def test_identity_optimal(self):
        C = tp.CostMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert tp.brute_force_uniform(C) == 0.0

    def test_size_cap(self):
        with pytest.raises(ValueError):
            tp.brute_force_uniform(tp.CostMatrix(np.zeros((9, 9))))


class TestTotalVariation:
    def test_equal_measures(self):
        mu = tp.DiscreteMeasure(np.array([0.3, 0.7]))
        assert tp.total_variation(mu, mu) == 0.0

    def test_disjoint_diracs(self):
        assert tp.total_variation(tp.DiscreteMeasure.dirac(0, 4),
                                  tp.DiscreteMeasure.dirac(2, 4)) == 1.0

    def test_maximal_coupling_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            n = int(rng.integers(2, 10))
            mu = tp.DiscreteMeasure(rng.dirichlet(np.ones(n)))
            nu = tp.DiscreteMeasure(rng.dirichlet(np.ones(n)))
            C = tp.CostMatrix(1.0 - np.eye(n), metric_flag=True)
            assert tp.transport_cost(C, mu, nu).value == pytest.approx(
                tp.total_variation(mu, nu), abs=1e-9)


class TestKRDual:
    def test_requires_metric(self):
        C = tp.CostMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
        with pytest.raises(ValueError):
            tp.kr_dual_value(C, tp.DiscreteMeasure(np.array([1.0, 0.0])),
                             tp.DiscreteMeasure(np.array([0.0, 1.0])))

    def test_equal_measures(self):
        C = tp.CostMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]), metric_flag=True)
        mu = tp.DiscreteMeasure(np.array([0.4, 0.6]))
        assert tp.kr_dual_value(C, mu, mu) == pytest.approx(0.0, abs=1e-12)

    def test_two_point_hand_lp(self):
        d = 0.8
        C = tp.CostMatrix(np.array([[0.0, d], [d, 0.0]]), metric_flag=True)
        mu = tp.DiscreteMeasure(np.array([0.7, 0.3]))
        nu = tp.DiscreteMeasure(np.array([0.2, 0.8]))
        assert tp.kr_dual_value(C, mu, nu) == pytest.approx(d * 0.5, abs=1e-10)

    @given(st.integers(2, 10), st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_strong_duality(self, n, seed):
        rng = np.random.default_rng(seed)
        C = tp.CostMatrix(_random_metric(rng, n), metric_flag=True)
        mu = tp.DiscreteMeasure(rng.dirichlet(np.ones(n)))
        nu = tp.DiscreteMeasure(rng.dirichlet(np.ones(n)))
        primal = tp.transport_cost(C, mu, nu).value
        dual = tp.kr_dual_value(C, mu, nu)
        assert dual <= primal + 1e-10   # weak duality
        assert abs(dual - primal) < 1e-8
