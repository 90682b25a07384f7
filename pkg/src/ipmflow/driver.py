"""The interior-point max-flow loop and the end-to-end pipeline.

``maxflow`` lifts directed inputs to undirected graphs, preconditions, runs
progress/centering until the certified remaining flow is small, maps the
fractional flow back, rounds it and finishes with augmenting paths.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import trace as trace_mod
from .central_path import (IPMPoint, coupling_norm, congestion, cut_upper_bound,
                           residual_upper_bound, resistances, weighted_norm)
from .combinatorial import dinic_maxflow, round_to_integral
from .congestion import BoostConfig, control_congestion, norm_index
from .electric import DEFAULT_EPS
from .graph import (EDGE_PRECONDITION, Graph, precondition, reduce_directed_to_undirected,
                    strip_zero_capacity, validate_flow)
from .steps import (CENTER_MAX_INPUT, CENTER_TARGET, CenterLog, StepError, center_fully,
                    progress_move)
from .trace import Trace
from .weights import perfect_center, reduce_weights

METHODS = ("ipm", "basic-ipm", "dinic")
BUDGET_FACTOR = 3.0


class BudgetError(RuntimeError):
    """``||w||_1`` exceeded ``3m`` at an iteration boundary."""


class IterationLimitError(RuntimeError):
    pass


class ProgressContractError(StepError):
    """A boosted progress step left the point more than 1/100-coupled."""


class ProgressPreconditionError(StepError):
    """Remaining flow too small for a boosted step."""


@dataclass
class Config:
    method: str = "ipm"
    eta: float | None = None
    eps: float = DEFAULT_EPS
    boost: BoostConfig = field(default_factory=BoostConfig)
    reduce_weights: bool = True
    strict_budget: bool = True
    max_iters: int | None = None
    audit: bool = False
    t_star: float | None = None
    center_target: float = CENTER_TARGET

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")


def choose_eta(m: int, U: float, override: float | None = None) -> float:
    """``clamp(1/8 - log_m(U)/4, 0, 1/2)`` unless overridden.

    The vanishing term in the exponent is dropped; :func:`budget_precondition`
    decides whether the schedule value is usable at this size.
    """
    if override is not None:
        return float(override)
    if m < 2:
        return 0.0
    U = max(float(U), 1.0)
    return max(0.0, min(0.5, 0.125 - math.log(U) / (4.0 * math.log(m))))


@dataclass(frozen=True)
class BudgetCheck:
    eta: float
    growth_bound: float
    excursion_bound: float
    limit: float

    @property
    def ok(self) -> bool:
        return self.growth_bound <= self.limit and self.excursion_bound <= self.limit


def budget_precondition(m: int, U: float, eta: float, C0: float = 16.0,
                        p: int | None = None) -> BudgetCheck:
    """Whether the weight budget can stay below ``3m`` with boosting at ``eta``.

    Growth over the run is at most ``m^(1/2 + 4 eta) U``; one congestion
    control may add up to ``4 U^2 ||1||_p W`` with the actual ``W``.  Both
    have to fit into the ``m/2`` headroom above ``2m + m/2``.
    """
    U = max(float(U), 1.0)
    p = p or norm_index(m)
    d = m ** (-6.0 * eta) / 20000.0
    W = C0 * math.log(max(m, 2)) / d
    growth = m ** (0.5 + 4.0 * eta) * U
    excursion = 4.0 * U * U * m ** (1.0 / p) * W
    return BudgetCheck(eta, growth, excursion, m / 2.0)


@dataclass(frozen=True)
class StepInfo:
    point: IPMPoint
    delta: float
    coupling_in: float
    coupling_out: float
    contract: float
    rho2: float
    rho4: float
    rhoinf: float
    energy: float
    energy_point: float
    extras: dict


def basic_progress(g: Graph, point: IPMPoint, cfg: Config) -> StepInfo:
    """Electric step of size ``1/(100 ||rho||_{w,4})`` without weight changes."""
    cong = congestion(g, point, cfg.eps)
    rho4 = weighted_norm(cong, point.w, 4)
    delta = 1.0 / (100.0 * rho4)
    out = progress_move(g, point, delta, cfg.eps, cong=cong)
    rho2 = weighted_norm(cong, point.w, 2)
    return StepInfo(out.point, out.delta, out.coupling_in, out.coupling_out, out.bound,
                    rho2, rho4, weighted_norm(cong, point.w, np.inf), cong.energy,
                    cong.energy, {"retried": out.retried, "edge_bound_ratio": out.edge_bound_ratio})


def progress(g: Graph, point: IPMPoint, eta: float, cfg: Config | None = None,
             F_t: float | None = None) -> StepInfo:
    """Boosted progress: control congestion, step, shrink the boost, fix gaps.

    Takes a 0-coupled point and returns a 1/100-coupled one at ``t + delta``
    with ``delta = m^eta / (100 ||rho||_{w_new,2})``.  ``F_t``, if given, is
    the remaining flow and must be at least ``m^(1/2 - eta)``.
    """
    cfg = cfg or Config()
    m = g.m
    if F_t is not None and F_t < m ** (0.5 - eta):
        raise ProgressPreconditionError(
            f"remaining flow {F_t:.4g} below m^(1/2 - eta) = {m ** (0.5 - eta):.4g}")
    r = resistances(g, point.w, point.f)
    ctrl = control_congestion(g, point, eta, cfg.boost)
    w_new = point.w + ctrl.w_prime
    cong = ctrl.congestion
    rho2 = weighted_norm(cong, w_new, 2)
    delta = m ** eta / (100.0 * rho2)
    out = progress_move(g, point.with_weights(w_new), delta, cfg.eps, cong=cong)
    stepped = out.point
    if cfg.reduce_weights:
        w2 = reduce_weights(g, stepped.f, ctrl.w_prime)
    else:
        w2 = ctrl.w_prime
    S = (cong.rho_max >= m ** (-2.0 * eta) * rho2) | (ctrl.r_prime >= r)
    mid = IPMPoint(stepped.f, stepped.y, point.w + w2, stepped.t)
    w3 = perfect_center(g, mid, S)
    final = mid.with_weights(mid.w + w3)
    gamma = coupling_norm(g, final)
    if gamma > CENTER_MAX_INPUT:
        raise ProgressContractError(f"boosted progress left coupling {gamma:.3g} > 1/100")
    rep = ctrl.report
    extras = {
        "item3_ratio": rep.item3_ratio, "item4_ratio": rep.item4_ratio,
        "boost_skipped": rep.skipped, "boost_W": rep.W, "boost_C0": rep.C0,
        "boost_p": rep.p, "r_prime_l1": rep.r_prime_l1, "ones_p_norm": rep.ones_p_norm,
        "r_prime_l1_ratio": rep.r_prime_l1_ratio,
        "energy_before_boost": rep.energy_before, "energy_after_boost": rep.energy_after,
        "w_l1_excursion": w_new.l1, "w_reduced_l1": w2.l1, "w_center_l1": w3.l1,
        "S_size": int(S.sum()), "step_coupling": out.coupling_out,
        "retried": out.retried,
    }
    return StepInfo(final, out.delta, out.coupling_in, gamma, out.bound, rho2,
                    weighted_norm(cong, w_new, 4), weighted_norm(cong, w_new, np.inf),
                    cong.energy, rep.energy_before, extras)


@dataclass
class IPMResult:
    flow: np.ndarray
    t: float
    iterations: int
    eta: float
    boosted: bool
    trace: Trace


def default_iteration_cap(m: int, U: float) -> int:
    return int(400 * math.sqrt(m) * math.log(max(m * max(U, 1.0), 3.0))) + 1000


def run_ipm(g: Graph, cfg: Config, eta: float, boosted: bool,
            tr: Trace | None = None, t_star: float | None = None) -> IPMResult:
    """Path-following on a preconditioned undirected graph.

    Stops once the certified remaining flow drops below ``m^(1/2 - eta)``.
    """
    tr = tr if tr is not None else Trace()
    m = g.m
    point = IPMPoint.initial(g)
    t_ub = cut_upper_bound(g)
    threshold = m ** (0.5 - eta)
    cap = cfg.max_iters if cfg.max_iters is not None else default_iteration_cap(m, g.U)
    it = 0
    with tr.activate():
        while True:
            F_cert = t_ub - point.t
            if F_cert < threshold:
                break
            if it >= cap:
                raise IterationLimitError(f"no convergence within {cap} iterations")
            w_in = point.w.l1
            if boosted:
                info = progress(g, point, eta, cfg, F_cert)
            else:
                info = basic_progress(g, point, cfg)
            point = info.point
            rec = dict(iter=it, phase="progress", t=point.t, F_t_cert=F_cert, delta=info.delta,
                       w_l1=point.w.l1, coupling=info.coupling_out, rho2=info.rho2,
                       rho4=info.rho4, rhoinf=info.rhoinf, energy=info.energy, eta=eta, m=m,
                       boosted=boosted, coupling_in=info.coupling_in, contract=info.contract,
                       w_l1_in=w_in, energy_point=info.energy_point, t_in=point.t - info.delta)
            rec.update(info.extras)
            if t_star is not None:
                rec["t_star"] = t_star
            if cfg.audit:
                rec["energy_after_step"] = congestion(g, point, cfg.eps).energy
            tr.append(**rec)
            log: list[CenterLog] = []
            try:
                point = center_fully(g, point, cfg.center_target, cfg.eps, log=log)
            finally:
                for k, c in enumerate(log):
                    tr.append(iter=it, phase="center", t=point.t, F_t_cert=F_cert,
                              w_l1=point.w.l1, coupling=c.coupling_out, eta=eta, m=m,
                              coupling_in=c.coupling_in, sub=k)
            cert = residual_upper_bound(g, point)
            t_ub = min(t_ub, point.t + cert)
            it += 1
            if point.w.l1 > BUDGET_FACTOR * m * (1 + 1e-12):
                tr.note("budget_violation", point.w.l1)
                if cfg.strict_budget:
                    raise BudgetError(f"||w||_1 = {point.w.l1:.6g} exceeds 3m = {3 * m}")
    tr.note("final_F_t_cert", t_ub - point.t)
    return IPMResult(point.f, point.t, it, eta, boosted, tr)


@dataclass
class MaxflowResult:
    flow: np.ndarray
    value: int
    iterations: int
    eta: float
    boosted: bool
    trace: Trace
    ipm_value: float | None = None
    wall_time: float = 0.0
    notes: dict = field(default_factory=dict)


def _work_graph(g: Graph):
    """Undirected graph the IPM runs on, plus a map back to ``g``'s edges."""
    if g.is_undirected:
        return g, None
    if g.is_directed:
        return reduce_directed_to_undirected(g)
    raise ValueError("graphs must be directed (u_minus = 0) or undirected (u_plus = u_minus)")


def _t_star_work(g: Graph, t_star: float, reduced: bool) -> float:
    return 2.0 * t_star + float(g.u_plus.sum()) if reduced else t_star


def maxflow(g: Graph, cfg: Config | None = None) -> MaxflowResult:
    """Exact integral maximum ab-flow of ``g`` and the run's trace."""
    cfg = cfg or Config()
    start = time.perf_counter()
    tr = Trace()
    if not g.has_integer_capacities:
        raise ValueError("maxflow needs integral capacities")
    if cfg.method == "dinic":
        flow, value = dinic_maxflow(g)
        return MaxflowResult(flow, value, 0, 0.0, False, tr,
                             wall_time=time.perf_counter() - start)

    work, red = _work_graph(g)
    work, keep = strip_zero_capacity(work)
    notes: dict = {}
    if work.m == 0:
        flow, value = dinic_maxflow(g)
        return MaxflowResult(flow, value, 0, 0.0, False, tr,
                             wall_time=time.perf_counter() - start)
    U = work.U
    gp = precondition(work)
    m = gp.m
    if cfg.method == "basic-ipm":
        eta, boosted = 0.0, False
    else:
        eta = choose_eta(m, U, cfg.eta)
        boosted = True
        if cfg.eta is None:
            chk = budget_precondition(m, U, eta, cfg.boost.C0)
            notes["budget_check"] = chk
            if not chk.ok:
                tr.note("eta_fallback", eta)
                eta, boosted = 0.0, False
    t_star = None
    if cfg.t_star is not None:
        t_star = _t_star_work(g, cfg.t_star, red is not None) + 2.0 * work.m * U

    res = run_ipm(gp, cfg, eta, boosted, tr, t_star)

    f_work_kept = res.flow[gp.kind != EDGE_PRECONDITION]
    pre_flow = float(res.flow[gp.kind == EDGE_PRECONDITION].sum())
    f_work = np.zeros((red.lifted.m if red is not None else g.m))
    f_work[keep] = f_work_kept
    if red is not None:
        x = red.recover(f_work)
    else:
        x = np.clip(f_work, -g.u_minus, g.u_plus)
    x_int = round_to_integral(g, x)
    flow, value = dinic_maxflow(g, initial=x_int)
    rep = validate_flow(g, flow, value * g.chi, tol=0.0)
    if not rep.ok:  # pragma: no cover - guarded by Dinic's exact arithmetic
        raise RuntimeError("final flow failed validation")
    notes["ipm_value_preconditioned"] = res.t
    notes["precondition_flow"] = pre_flow
    return MaxflowResult(flow, value, res.iterations, eta, boosted, tr,
                         ipm_value=res.t, wall_time=time.perf_counter() - start, notes=notes)
