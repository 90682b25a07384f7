"""Smoothed flow solvers, budgeted energy maximization and congestion control."""

import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import path_points, preconditioned
from oracles import (chi, electric_dense, energy_dense, fixture_graph, fixture_resistances,
                     naive_resistances)
from ipmflow.central_path import IPMPoint, Weights, congestion, weighted_norm
from ipmflow.congestion import (BoostConfig, BracketError, CongestionControlError,
                                SmoothedFlowProblem, _pnorm,
                                control_congestion, dual_index, energy_maximize, eval_g,
                                homogeneous_via_binary_search, norm_index, resistance_increase,
                                smoothed_value, solve_smoothed_lp)
from ipmflow.electric import electric_flow
from ipmflow.graph import precondition, undirected_graph
from ipmflow.trace import Trace

FROZEN = json.loads((Path(__file__).with_name("data") / "frozen.json").read_text())


def two_parallel():
    return undirected_graph(2, [(0, 1, 1), (0, 1, 1)], 0, 1), np.ones(2)


class TestProblem:
    @pytest.mark.parametrize("p", [1, 3, 0])
    def test_rejects_bad_index(self, p):
        g, r = two_parallel()
        with pytest.raises(ValueError):
            SmoothedFlowProblem(g, r, chi(g), p, 1.0)

    def test_rejects_negative_budget(self):
        g, r = two_parallel()
        with pytest.raises(ValueError):
            SmoothedFlowProblem(g, r, chi(g), 4, -1.0)

    def test_pnorm_scaling(self):
        f = np.array([3.0, -4.0])
        N, q = _pnorm(f, 2)
        assert N == pytest.approx(5.0) and np.allclose(q, f / 5)
        N, _ = _pnorm(np.array([1e200, 1e200]), 4)
        assert N == pytest.approx(2 ** 0.25 * 1e200)


class TestSmoothedSolver:
    def test_zero_budget_is_electric(self):
        g = fixture_graph(1)
        r = fixture_resistances(1, g.m)
        sol = solve_smoothed_lp(SmoothedFlowProblem(g, r, chi(g), 4, 0.0))
        ref = electric_flow(g, r, chi(g))
        np.testing.assert_allclose(sol.flow, ref.fhat, atol=1e-12)
        assert sol.value == pytest.approx(ref.energy, rel=1e-12)

    @pytest.mark.parametrize("form", ["homogeneous", "p-power"])
    def test_single_edge_forced(self, form):
        g = undirected_graph(2, [(0, 1, 1)], 0, 1)
        sol = solve_smoothed_lp(SmoothedFlowProblem(g, np.array([2.0]), chi(g), 4, 5.0), form)
        assert sol.flow[0] == pytest.approx(1.0)
        assert sol.value == pytest.approx(2.0 + 5.0)

    @pytest.mark.parametrize("case", FROZEN["smoothed"],
                             ids=lambda c: f"s{c['seed']}-P{c['P']}-W{c['W']}-{c['form']}")
    def test_frozen_oracle(self, case):
        g = fixture_graph(case["seed"], n=8, extra=6)
        r = fixture_resistances(case["seed"], g.m)
        prob = SmoothedFlowProblem(g, r, chi(g), case["P"], case["W"])
        sol = solve_smoothed_lp(prob, case["form"])
        assert sol.value == pytest.approx(case["value"], rel=1e-9)
        np.testing.assert_allclose(g.demand_of(sol.flow), chi(g), atol=1e-9)
        grad_scale = max(1.0, np.linalg.norm(2 * r * sol.flow))
        assert sol.grad_norm <= 1e-9 * grad_scale

    def test_unknown_form(self):
        g, r = two_parallel()
        with pytest.raises(ValueError):
            solve_smoothed_lp(SmoothedFlowProblem(g, r, chi(g), 4, 1.0), "cubic")

    def test_value_helper(self):
        g, r = two_parallel()
        prob = SmoothedFlowProblem(g, r, chi(g), 4, 2.0)
        f = np.array([0.5, 0.5])
        assert smoothed_value(prob, f, "p-power") == pytest.approx(0.5 + 2 * 2 * 0.5 ** 4)
        assert smoothed_value(prob, f, "homogeneous") == pytest.approx(
            0.5 + 2 * math.sqrt(2 * 0.5 ** 4))


class TestBinarySearch:
    def test_zero_budget(self):
        g = fixture_graph(2)
        r = fixture_resistances(2, g.m)
        sol = homogeneous_via_binary_search(SmoothedFlowProblem(g, r, chi(g), 4, 0.0))
        assert sol.value == pytest.approx(energy_dense(g, r, chi(g)), rel=1e-10)

    @pytest.mark.parametrize("seed,P,W", [(0, 4, 3.0), (1, 6, 40.0), (2, 4, 0.2), (3, 8, 7.0)])
    def test_bracket_exit_and_agreement(self, seed, P, W):
        g = fixture_graph(seed, n=8, extra=6)
        r = fixture_resistances(seed, g.m)
        prob = SmoothedFlowProblem(g, r, chi(g), P, W)
        sol = homogeneous_via_binary_search(prob)
        # recompute the multiplier at the returned C from the returned flow
        N, _ = _pnorm(sol.flow, P)
        assert sol.C * (P / 2) * N ** (P - 2) == pytest.approx(W, rel=1e-9)
        direct = solve_smoothed_lp(prob, "homogeneous")
        assert sol.value == pytest.approx(direct.value, rel=1e-10)

    def test_explicit_bracket_checked(self):
        g = fixture_graph(0, n=8, extra=6)
        r = fixture_resistances(0, g.m)
        prob = SmoothedFlowProblem(g, r, chi(g), 4, 3.0)
        C = homogeneous_via_binary_search(prob).C
        assert homogeneous_via_binary_search(prob, bracket=(C / 10, C * 10)).value == pytest.approx(
            solve_smoothed_lp(prob).value, rel=1e-10)
        with pytest.raises(BracketError):
            homogeneous_via_binary_search(prob, bracket=(C * 2, C * 10))
        with pytest.raises(BracketError):
            homogeneous_via_binary_search(prob, bracket=(C / 10, C / 2))
        with pytest.raises(BracketError):
            homogeneous_via_binary_search(prob, bracket=(2.0, 1.0))


class TestEnergyMaximize:
    def test_zero_budget(self):
        g = fixture_graph(3)
        r = fixture_resistances(3, g.m)
        res = energy_maximize(g, r, chi(g), 0.0, 2)
        assert not res.r_prime.any()
        assert res.new_energy == pytest.approx(energy_dense(g, r, chi(g)), rel=1e-10)

    def test_symmetric_split_and_monotone(self):
        g, r = two_parallel()
        last = 0.5
        for W in (0.01, 0.1, 0.5, 2.0):
            res = energy_maximize(g, r, chi(g), W, 2)
            assert res.r_prime[0] == pytest.approx(res.r_prime[1], rel=1e-10)
            assert res.new_energy > last
            last = res.new_energy

    @pytest.mark.parametrize("case", FROZEN["energy_max"],
                             ids=lambda c: f"s{c['seed']}-W{c['W']}-p{c['p']}")
    def test_frozen_bruteforce(self, case):
        g = fixture_graph(case["seed"], n=7, extra=5)
        r = fixture_resistances(case["seed"], g.m)
        res = energy_maximize(g, r, chi(g), case["W"], case["p"])
        assert res.new_energy == pytest.approx(case["value"], rel=1e-5)

    @given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 50.0), st.sampled_from([2, 3, 4]))
    def test_result_invariants(self, seed, W, p):
        g = fixture_graph(seed % 500, n=7, extra=6)
        r = fixture_resistances(seed % 500, g.m)
        res = energy_maximize(g, r, chi(g), W, p)
        q = dual_index(p)
        assert np.all(res.r_prime >= 0)
        assert np.sum(res.r_prime ** q) ** (1 / q) == pytest.approx(W, rel=1e-10)
        assert res.new_energy == pytest.approx(energy_dense(g, r + res.r_prime, chi(g)), rel=1e-9)
        assert res.lower_bound <= res.new_energy * (1 + 1e-12)
        assert res.lower_bound == pytest.approx(res.new_energy, rel=1e-8)
        # strong duality: the smoothed optimum is the maximal energy
        assert res.opt_value == pytest.approx(res.new_energy, rel=1e-8)

    def test_resistance_increase_norm(self, rng):
        f = rng.normal(size=9)
        for p in (2, 3, 5):
            rp = resistance_increase(f, 3.0, p)
            q = dual_index(p)
            assert np.sum(rp ** q) ** (1 / q) == pytest.approx(3.0, rel=1e-12)

    @pytest.mark.parametrize("case", FROZEN["minimax"], ids=lambda c: f"s{c['seed']}-W{c['W']}")
    def test_minimax_consistency(self, case):
        assert case["max_energy_l1"] == pytest.approx(case["linf_value"], rel=1e-5)
        g = fixture_graph(case["seed"], n=7, extra=5)
        r = fixture_resistances(case["seed"], g.m)
        # the q-ball contains the l1 ball, so the relaxation can only gain
        for p in (2, 4, 8):
            relaxed = energy_maximize(g, r, chi(g), case["W"], p).new_energy
            assert relaxed >= case["max_energy_l1"] * (1 - 1e-9)
        gap = energy_maximize(g, r, chi(g), case["W"], 8).new_energy / case["linf_value"] - 1
        print(f"relaxation gap at p=8: {gap:.3e}")


class TestEvalG:
    def test_origin_and_monotone(self):
        g = fixture_graph(4, n=9, extra=6)
        r = fixture_resistances(4, g.m)
        vals = eval_g(g, r, chi(g), [0.0, 0.1, 0.5, 1.0, 3.0, 10.0], 2)
        assert vals[0] == (0.0, 0.0)
        gs = [v for _, v in vals]
        assert all(b >= a - 1e-12 for a, b in zip(gs, gs[1:]))

    @given(st.integers(0, 2 ** 32 - 1))
    def test_concave_and_ratio_decreasing(self, seed):
        rng = np.random.default_rng(seed)
        g = fixture_graph(seed % 300, n=8, extra=6)
        r = fixture_resistances(seed % 300, g.m)
        W1, W2 = np.sort(rng.uniform(0.01, 20.0, 2))
        (_, g1), (_, g2), (_, gm) = eval_g(g, r, chi(g), [W1, W2, (W1 + W2) / 2], 2)
        assert gm >= (g1 + g2) / 2 - 1e-8
        assert g2 / W2 <= g1 / W1 + 1e-8

    def test_rejects_negative(self):
        g, r = two_parallel()
        with pytest.raises(ValueError):
            eval_g(g, r, chi(g), [-1.0], 2)


class TestBoostLowerBound:
    @given(st.integers(0, 2 ** 32 - 1))
    def test_log_energy_gain(self, seed):
        rng = np.random.default_rng(seed)
        g = preconditioned(rng, n=int(rng.integers(4, 10)), m=int(rng.integers(6, 18)), U=3)
        p = path_points(g, int(rng.integers(0, 8)))[-1]
        cong = congestion(g, p)
        rp = cong.r * rng.random(g.m) * (rng.random(g.m) < 0.5)
        s = np.minimum(g.u_plus - p.f, g.u_minus + p.f)
        lhs = math.log(energy_dense(g, cong.r + rp, g.chi)) - math.log(cong.energy)
        rhs = 0.5 * np.sum(rp * s ** 2 * cong.rho_max ** 2) / weighted_norm(cong, p.w, 2) ** 2
        assert lhs >= rhs - 1e-8


class TestNormIndex:
    def test_values(self):
        assert norm_index(2) == 2
        assert norm_index(64) == 4  # ceil(sqrt(ln 64)) = 3, bumped to even
        assert norm_index(10 ** 6) == 4
        assert norm_index(100, override=6) == 6

    def test_parity_bump_is_noted(self):
        tr = Trace()
        with tr.activate():
            norm_index(100, override=3)
        assert ("norm_index_parity_bump", 3) in tr.notes


class TestControlCongestion:
    @staticmethod
    def star_with_bottleneck():
        # many wide routes plus a single thin bridge that carries a large share
        edges = [(0, 2, 4), (2, 1, 4), (0, 3, 4), (3, 1, 4), (0, 4, 1), (4, 1, 1), (0, 1, 1)]
        return precondition(undirected_graph(5, edges, 0, 1))

    def audit(self, g, point, res, eta):
        w_new = point.w + res.w_prime
        r = naive_resistances(g, w_new.plus, w_new.minus, point.f)
        fhat, _, en = electric_dense(g, r, g.chi)
        sp_, sm_ = g.u_plus - point.f, g.u_minus + point.f
        rho_p, rho_m = np.abs(fhat) / sp_, np.abs(fhat) / sm_
        rho2 = math.sqrt(np.sum(w_new.plus * rho_p ** 2 + w_new.minus * rho_m ** 2))
        m = g.m
        s = np.minimum(sp_, sm_)
        assert max(rho_p.max(), rho_m.max()) <= m ** -eta * rho2 * (1 + 1e-9)
        assert np.all(s * np.maximum(rho_p, rho_m) <= m ** (-3 * eta) * rho2 / 100 * (1 + 1e-9))
        assert en >= res.report.energy_before * (1 - 1e-12)

    @pytest.mark.parametrize("eta", [0.0, 0.05, 0.125])
    def test_star_fixture(self, eta):
        g = self.star_with_bottleneck()
        point = IPMPoint.initial(g)
        res = control_congestion(g, point, eta)
        assert res.report.ok and not res.report.skipped
        assert res.report.g_over_W < res.report.d_target
        self.audit(g, point, res, eta)

    def test_points_along_a_run(self):
        rng = np.random.default_rng(17)
        g = preconditioned(rng, n=8, m=14, U=2)
        for point in path_points(g, 30)[::6]:
            res = control_congestion(g, point, 0.1)
            self.audit(g, point, res, 0.1)

    def test_uncongested_point(self):
        # uniform huge weights: every edge's share of the energy is tiny
        g = self.star_with_bottleneck()
        huge = Weights(np.full(g.m, 1e12), np.full(g.m, 1e12))
        point = IPMPoint(np.zeros(g.m), np.zeros(g.n), huge, 0.0)
        res = control_congestion(g, point, 0.0)
        assert res.report.ok and res.report.doublings == 0
        assert np.max(res.r_prime / res.congestion.r) < 1e-3

    def test_disconnected_terminals(self):
        g = undirected_graph(4, [(0, 2, 1), (1, 3, 1)], 0, 1)
        with pytest.raises(ValueError):
            control_congestion(g, IPMPoint.initial(g), 0.1)

    def test_degenerate_energy_skips_boost(self):
        g = undirected_graph(3, [(0, 2, 1), (2, 1, 1)], 0, 1)
        tiny = IPMPoint(np.zeros(2), np.zeros(3), Weights(np.full(2, 1e-16), np.full(2, 1e-16)),
                        0.0)
        with pytest.raises(CongestionControlError) as info:
            control_congestion(g, tiny, 0.1)
        assert info.value.report.skipped and info.value.report.W == 0

    def test_config_overrides(self):
        g = self.star_with_bottleneck()
        res = control_congestion(g, IPMPoint.initial(g), 0.05, BoostConfig(C0=4.0, p_override=6))
        assert res.report.p == 6
        assert res.report.C0 >= 4.0
        assert res.report.W == pytest.approx(res.report.C0 * math.log(g.m) / res.report.d_target)
