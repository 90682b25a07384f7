"""Weight increases: balanced boosting, exact re-centering and shrinking."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import path_points, preconditioned
from oracles import naive_gaps, naive_resistances
from ipmflow.central_path import IPMPoint, Weights, congestion, gaps, weighted_norm
from ipmflow.graph import undirected_graph
from ipmflow.weights import compute_weights, perfect_center, reduce_weights


def point_on_edge(u, f, y_diff=0.0, w=(1.0, 1.0)):
    g = undirected_graph(2, [(0, 1, u)], 0, 1)
    p = IPMPoint(np.array([float(f)]), np.array([0.0, y_diff]),
                 Weights(np.array([w[0]]), np.array([w[1]])), 0.0)
    return g, p


def random_point(seed):
    rng = np.random.default_rng(seed)
    g = preconditioned(rng, n=int(rng.integers(4, 9)), m=int(rng.integers(6, 16)),
                       U=int(rng.integers(1, 6)))
    p = path_points(g, int(rng.integers(1, 12)))[-1]
    # make the point generic: random weights and duals
    w = Weights(p.w.plus * rng.uniform(1, 3, g.m), p.w.minus * rng.uniform(1, 3, g.m))
    return g, IPMPoint(p.f, p.y + 1e-2 * rng.normal(size=g.n), w, p.t), rng


class TestComputeWeights:
    def test_closed_form(self):
        g, p = point_on_edge(2, 1)
        w = compute_weights(g, p, np.array([1.0]))
        assert (w.plus[0], w.minus[0]) == (1.0, 3.0)
        assert w.l1 <= 4 * 2 * 1 * 1

    def test_zero(self):
        g, p = point_on_edge(2, 1)
        assert compute_weights(g, p, np.zeros(1)).l1 == 0

    def test_rejects_negative(self):
        g, p = point_on_edge(2, 1)
        with pytest.raises(ValueError):
            compute_weights(g, p, np.array([-1.0]))

    @given(st.integers(0, 2 ** 32 - 1))
    def test_post_conditions(self, seed):
        g, p, rng = random_point(seed)
        rp = rng.exponential(size=g.m) * (rng.random(g.m) < 0.6)
        wp = compute_weights(g, p, rp)
        w_new = p.w + wp
        r_old = naive_resistances(g, p.w.plus, p.w.minus, p.f)
        r_new = naive_resistances(g, w_new.plus, w_new.minus, p.f)
        assert np.all(r_new - r_old >= rp * (1 - 1e-12))
        np.testing.assert_allclose(gaps(g, p.with_weights(w_new)), gaps(g, p),
                                   rtol=1e-12, atol=1e-12 * np.max(np.abs(p.y)))
        s = np.minimum(g.u_plus - p.f, g.u_minus + p.f)
        assert wp.l1 <= 4 * g.U * np.sum(rp * s) * (1 + 1e-12)
        assert np.all(wp.plus >= 0) and np.all(wp.minus >= 0)


class TestPerfectCenter:
    def test_zero_gaps(self):
        g, p = point_on_edge(2, 0)
        assert perfect_center(g, p, np.array([True])).l1 == 0

    def test_single_edge(self):
        # u+ - f = 2, u- + f = 4, unit weights: gradient 1/2 - 1/4 = 0.25
        g, p = point_on_edge(3, 1, y_diff=0.35)
        assert gaps(g, p)[0] == pytest.approx(0.1)
        w = perfect_center(g, p, np.array([0]))
        assert w.plus[0] == pytest.approx(0.2) and w.minus[0] == 0
        assert gaps(g, p.with_weights(p.w + w))[0] == pytest.approx(0.0, abs=1e-15)

    def test_empty_set(self):
        g, p = point_on_edge(3, 1, y_diff=0.35)
        assert perfect_center(g, p, np.array([], dtype=np.int64)).l1 == 0

    @given(st.integers(0, 2 ** 32 - 1))
    def test_random_subset(self, seed):
        g, p, rng = random_point(seed)
        S = rng.random(g.m) < 0.5
        w = perfect_center(g, p, S)
        gp_old = gaps(g, p)
        gp_new = naive_gaps(g, p.w.plus + w.plus, p.w.minus + w.minus, p.f, p.y)
        assert np.all(np.abs(gp_new[S]) <= 1e-12 * (1 + np.abs(gp_old[S])))
        np.testing.assert_array_equal(gp_new[~S], gp_old[~S])
        np.testing.assert_array_equal(w.plus[~S], 0)
        np.testing.assert_array_equal(w.minus[~S], 0)


class TestReduceWeights:
    def test_balanced_pair_vanishes(self):
        g, p = point_on_edge(3, 1)
        # w+/(u+ - f) = w-/(u- + f) with slacks 2 and 4
        w = reduce_weights(g, p.f, Weights(np.array([1.0]), np.array([2.0])))
        assert w.l1 == 0

    def test_minimal_already(self):
        g, p = point_on_edge(3, 1)
        w = reduce_weights(g, p.f, Weights(np.array([3.0]), np.array([0.0])))
        assert (w.plus[0], w.minus[0]) == (pytest.approx(3.0), 0.0)

    @given(st.integers(0, 2 ** 32 - 1))
    def test_same_gaps_and_smaller(self, seed):
        g, p, rng = random_point(seed)
        wp = Weights(rng.exponential(size=g.m), rng.exponential(size=g.m))
        f_new = p.f + 0.05 * rng.uniform(-1, 1, g.m) * np.minimum(g.u_plus - p.f, g.u_minus + p.f)
        w2 = reduce_weights(g, f_new, wp)
        base = p.w
        q1 = IPMPoint(f_new, p.y, base + wp, p.t)
        q2 = IPMPoint(f_new, p.y, base + w2, p.t)
        np.testing.assert_allclose(gaps(g, q2), gaps(g, q1), rtol=1e-12,
                                   atol=1e-12 * (1 + np.max(np.abs(gaps(g, q1)))))
        w3 = reduce_weights(g, p.f, wp)
        assert np.all(w3.plus <= wp.plus * (1 + 1e-12))
        assert np.all(w3.minus <= wp.minus * (1 + 1e-12))

    @given(st.integers(0, 2 ** 32 - 1))
    def test_reduction_dominated_by_step(self, seed):
        g, p, rng = random_point(seed)
        rp = rng.exponential(size=g.m)
        wp = compute_weights(g, p, rp)
        cong = congestion(g, p)
        delta = 0.1 / weighted_norm(cong, p.w, np.inf)
        f_new = p.f + delta * cong.fhat
        w2 = reduce_weights(g, f_new, wp)
        lhs = w2.plus + w2.minus
        rhs = delta * cong.rho_max * (wp.plus + wp.minus)
        # the measured constant stays below 2 for steps of at most a tenth of the slack
        assert np.all(lhs <= 2.0 * rhs + 1e-12)
