"""Budget-constrained energy maximization and congestion control.

Raising resistances by ``r'`` with ``||r'||_q <= W`` can increase the
electric energy by at most the optimum of the smoothed flow problem

    min_{B^T f = d}  f^T R f + W ||f||_{2p}^2,

and the optimal ``f*`` tells which resistances to raise.  The smoothed
problems are solved by Newton's method restricted to the cycle space; each
Newton system reduces to one or two Laplacian solves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import trace
from .central_path import (Congestion, IPMPoint, Weights, congestion, resistances,
                           slacks, weighted_norm)
from .electric import (DEFAULT_EPS, ElectricSolution, LaplacianSolver, electric_flow,
                       energy_lower_bound)
from .graph import Graph
from .weights import compute_weights

DEGENERATE_ENERGY = 1e-14


class SolverError(RuntimeError):
    """Newton's method did not reach the requested accuracy."""


class BracketError(ValueError):
    """A binary-search bracket does not straddle the target."""


class CongestionControlError(RuntimeError):
    """Post-conditions of congestion control failed after the solve."""

    def __init__(self, message: str, report: "ControlReport") -> None:
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class SmoothedFlowProblem:
    """``min f^T R f + W * (norm term)`` over flows routing ``d``.

    ``p`` is the norm index of the objective (even).  The ``p-power`` form
    uses ``W * ||f||_p^p``, the ``homogeneous`` form ``W * ||f||_p^2``.
    """

    graph: Graph
    r: np.ndarray
    d: np.ndarray
    p: int
    W: float
    f0: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.p < 2 or self.p % 2:
            raise ValueError("norm index must be an even integer >= 2")
        if self.W < 0:
            raise ValueError("budget weight must be nonnegative")


@dataclass(frozen=True)
class SmoothedSolution:
    flow: np.ndarray
    value: float
    grad_norm: float
    iterations: int
    C: float | None = None
    wC: float | None = None


def _pnorm(f: np.ndarray, p: int) -> tuple[float, np.ndarray]:
    """``||f||_p`` and ``f / ||f||_p`` without overflow."""
    M = float(np.max(np.abs(f))) if f.size else 0.0
    if M == 0.0:
        return 0.0, np.zeros_like(f)
    q = f / M
    N = M * float(np.sum(q ** p)) ** (1.0 / p)
    return N, f / N


def smoothed_value(prob: SmoothedFlowProblem, f: np.ndarray, form: str) -> float:
    quad = float(np.dot(prob.r, f * f))
    if prob.W == 0:
        return quad
    N, _ = _pnorm(f, prob.p)
    if form == "homogeneous":
        return quad + prob.W * N * N
    if form == "p-power":
        return quad + prob.W * N ** prob.p
    raise ValueError(f"unknown objective form {form!r}")


def _derivatives(prob: SmoothedFlowProblem, f: np.ndarray, form: str):
    """Gradient and Hessian ``diag(D) + s v v^T`` of the objective."""
    r, W, P = prob.r, prob.W, prob.p
    grad = 2.0 * r * f
    D = 2.0 * r.copy()
    s, v = 0.0, None
    if W == 0:
        return grad, D, s, v
    if form == "p-power":
        grad = grad + W * P * f ** (P - 1)
        D = D + W * P * (P - 1) * f ** (P - 2)
    else:
        N, q = _pnorm(f, P)
        if N == 0.0:
            return grad, D, s, v
        grad = grad + 2.0 * W * N * q ** (P - 1)
        D = D + 2.0 * W * (P - 1) * q ** (P - 2)
        s = 2.0 * W * (2 - P)
        v = q ** (P - 1)
    return grad, D, s, v


def _newton_direction(g: Graph, grad, D, s, v, eps) -> np.ndarray:
    """Minimize the quadratic model over circulations (``B^T x = 0``)."""
    solver = LaplacianSolver(g, D, eps=eps)

    def hinv(x):
        out = x / D
        if v is not None and s != 0.0:
            z = v / D
            kappa = s / (1.0 + s * float(np.dot(v, z)))
            out = out - kappa * z * float(np.dot(z, x))
        return out

    def grad_b(lam):
        return lam[g.head] - lam[g.tail]

    b = g.demand_of(hinv(grad))
    lam = solver.solve(b)
    if v is not None and s != 0.0:
        z = v / D
        kappa = s / (1.0 + s * float(np.dot(v, z)))
        u = g.demand_of(z)
        lu = solver.solve(u)
        coef = kappa * float(np.dot(u, lam)) / (1.0 - kappa * float(np.dot(u, lu)))
        lam = lam + coef * lu
    return -hinv(grad - grad_b(lam))


def _cycle_projection_norm(g: Graph, x: np.ndarray, eps: float) -> float:
    """Euclidean norm of the projection of ``x`` onto the cycle space."""
    if g.m == 0:
        return 0.0
    solver = LaplacianSolver(g, np.ones(g.m), eps=eps)
    lam = solver.solve(g.demand_of(x))
    return float(np.linalg.norm(x - (lam[g.head] - lam[g.tail])))


def solve_smoothed_lp(prob: SmoothedFlowProblem, form: str = "homogeneous",
                      tol: float = 1e-12, max_iters: int = 100,
                      eps: float = DEFAULT_EPS) -> SmoothedSolution:
    """Damped Newton over the cycle space from a feasible start.

    Stops once the squared Newton decrement is below ``2 tol`` times the
    objective (relative suboptimality about ``tol``) and the gradient
    projected onto the cycle space has norm at most ``tol * max(1, |grad|)``.
    If rounding stalls the line search first, the current flow is returned
    provided the decrement test already holds.
    """
    if form not in ("homogeneous", "p-power"):
        raise ValueError(f"unknown objective form {form!r}")
    g = prob.graph
    if prob.f0 is None:
        f = electric_flow(g, prob.r, prob.d, eps=eps).fhat
    else:
        f = np.asarray(prob.f0, dtype=np.float64).copy()
    val = smoothed_value(prob, f, form)
    dec, gn = np.inf, np.inf
    it = 0
    for it in range(max_iters + 1):
        grad, D, s, v = _derivatives(prob, f, form)
        if val == 0.0 or g.m == 0:
            dec = gn = 0.0
            break
        step = _newton_direction(g, grad, D, s, v, eps)
        slope = float(np.dot(grad, step))
        dec = -slope
        if dec <= 2.0 * tol * val:
            gn = _cycle_projection_norm(g, grad, eps)
            if gn <= tol * max(1.0, float(np.linalg.norm(grad))):
                break
        if it == max_iters:
            break
        alpha = 1.0
        while True:
            cand = f + alpha * step
            cval = smoothed_value(prob, cand, form)
            if cval <= val + 0.25 * alpha * slope or alpha < 1e-12:
                break
            alpha *= 0.5
        if cval > val:
            break  # no descent possible at working precision
        f, val = cand, cval
    if not dec <= 2.0 * tol * val:
        raise SolverError(f"Newton stopped after {it} iterations with decrement {dec:.3g} "
                          f"(objective {val:.3g}, projected gradient "
                          f"{_cycle_projection_norm(g, grad, eps):.3g})")
    if not np.isfinite(gn):
        gn = _cycle_projection_norm(g, _derivatives(prob, f, form)[0], eps)
    return SmoothedSolution(f, val, gn, it)


def homogeneous_via_binary_search(prob: SmoothedFlowProblem, tol: float = 1e-10,
                                  bracket: tuple[float, float] | None = None,
                                  inner_tol: float = 1e-14, max_steps: int = 200,
                                  eps: float = DEFAULT_EPS) -> SmoothedSolution:
    """Solve the homogeneous form through a sequence of p-power problems.

    With ``x_C`` minimizing ``f^T R f + C ||f||_p^p`` the multiplier
    ``w(C) = C (p/2) ||x_C||_p^(p-2)`` is increasing in ``C``; at
    ``w(C) = W`` the first-order conditions of the homogeneous form hold, so
    ``x_C`` is its minimizer.  Bisection in ``log C`` finds that ``C``.
    """
    g = prob.graph
    P, W = prob.p, prob.W
    if W == 0:
        sol = electric_flow(g, prob.r, prob.d, eps=eps)
        return SmoothedSolution(sol.fhat, sol.energy, 0.0, 0, 0.0, 0.0)

    cache: dict[float, SmoothedSolution] = {}

    def inner(C: float) -> tuple[float, SmoothedSolution]:
        if C not in cache:
            sub = SmoothedFlowProblem(g, prob.r, prob.d, P, C, prob.f0)
            cache[C] = solve_smoothed_lp(sub, "p-power", tol=inner_tol, eps=eps)
        sol = cache[C]
        N, _ = _pnorm(sol.flow, P)
        return C * (P / 2.0) * N ** (P - 2), sol

    if bracket is not None:
        lo, hi = bracket
        if not (0 < lo < hi):
            raise BracketError("bracket must satisfy 0 < Z1 < Z2")
        if not inner(lo)[0] < W:
            raise BracketError(f"w(Z1) = {inner(lo)[0]:.3g} is not below the target {W:.3g}")
        if not inner(hi)[0] > W:
            raise BracketError(f"w(Z2) = {inner(hi)[0]:.3g} is not above the target {W:.3g}")
    else:
        f_el = electric_flow(g, prob.r, prob.d, eps=eps).fhat
        N0, _ = _pnorm(f_el, P)
        guess = W / max((P / 2.0) * N0 ** (P - 2), 1e-300) if P > 2 else W
        lo = hi = guess
        while inner(lo)[0] >= W:
            lo /= 4.0
        while inner(hi)[0] <= W:
            hi *= 4.0
    C = math.sqrt(lo * hi)
    for _ in range(max_steps):
        C = math.sqrt(lo * hi)
        wc, sol = inner(C)
        if abs(wc - W) <= tol * W or hi / lo - 1.0 < 1e-15:
            break
        if wc < W:
            lo = C
        else:
            hi = C
    wc, sol = inner(C)
    homog = SmoothedFlowProblem(g, prob.r, prob.d, P, W)
    val = smoothed_value(homog, sol.flow, "homogeneous")
    gn = _cycle_projection_norm(g, _derivatives(homog, sol.flow, "homogeneous")[0], eps)
    return SmoothedSolution(sol.flow, val, gn, len(cache), C, wc)


@dataclass(frozen=True)
class EnergyMaxResult:
    r_prime: np.ndarray
    f_star: np.ndarray
    new_energy: float
    certificate: np.ndarray
    opt_value: float
    lower_bound: float
    iterations: int
    electric: ElectricSolution = field(repr=False)


def dual_index(p: float) -> float:
    return p / (p - 1.0)


def resistance_increase(f_star: np.ndarray, W: float, p: int) -> np.ndarray:
    """``W f^(2(p-1)) / ||f^2||_p^(p-1)``, whose q-norm is exactly ``W``."""
    M = float(np.max(np.abs(f_star))) if f_star.size else 0.0
    if M == 0.0 or W == 0.0:
        return np.zeros_like(f_star)
    q = f_star / M
    return W * q ** (2 * (p - 1)) / float(np.sum(q ** (2 * p))) ** ((p - 1.0) / p)


def energy_maximize(g: Graph, r: np.ndarray, d: np.ndarray, W: float, p: int,
                    tol: float = 1e-12, max_iters: int = 100,
                    eps: float = DEFAULT_EPS) -> EnergyMaxResult:
    """Resistance increase within the q-ball of radius ``W`` maximizing energy."""
    r = np.asarray(r, dtype=np.float64)
    if W < 0:
        raise ValueError("budget must be nonnegative")
    if W == 0:
        sol = electric_flow(g, r, d, eps=eps)
        return EnergyMaxResult(np.zeros(g.m), sol.fhat, sol.energy, sol.phi, sol.energy,
                               sol.energy, 0, sol)
    prob = SmoothedFlowProblem(g, r, d, 2 * p, W)
    sm = solve_smoothed_lp(prob, "homogeneous", tol=tol, max_iters=max_iters, eps=eps)
    r_prime = resistance_increase(sm.flow, W, p)
    r_new = r + r_prime
    sol = electric_flow(g, r_new, d, eps=eps)
    lb = energy_lower_bound(g, r_new, d, sol.phi)
    return EnergyMaxResult(r_prime, sm.flow, sol.energy, sol.phi, sm.value, lb,
                           sm.iterations, sol)


def eval_g(g: Graph, r: np.ndarray, d: np.ndarray, W_list, p: int,
           tol: float = 1e-13, eps: float = DEFAULT_EPS) -> list[tuple[float, float]]:
    """``(W, log E_{r + r'(W)} - log E_r)`` for each budget in ``W_list``."""
    base = electric_flow(g, r, d, eps=eps).energy
    out = []
    for W in W_list:
        if W < 0:
            raise ValueError("budgets must be nonnegative")
        res = energy_maximize(g, r, d, float(W), p, tol=tol, eps=eps)
        out.append((float(W), math.log(res.new_energy) - math.log(base)))
    return out


# -- congestion control -------------------------------------------------------

@dataclass
class BoostConfig:
    C0: float = 16.0
    p_override: int | None = None
    newton_max_iters: int = 100
    newton_tol: float = 1e-12
    binary_search_tol: float = 1e-10
    max_doublings: int = 30
    eps: float = DEFAULT_EPS


def norm_index(m: int, override: int | None = None) -> int:
    """``max(2, ceil(sqrt(log m)))`` rounded up to an even integer."""
    if override is not None:
        p = int(override)
    else:
        p = max(2, math.ceil(math.sqrt(math.log(max(m, 2)))))
    if p % 2:
        trace.note("norm_index_parity_bump", p)
        p += 1
    return p


@dataclass(frozen=True)
class ControlReport:
    skipped: bool
    W: float
    C0: float
    doublings: int
    p: int
    g_over_W: float
    d_target: float
    r_prime_l1: float
    r_prime_l1_ratio: float
    ones_p_norm: float
    rho2: float
    rhoinf: float
    item3_ratio: float
    item4_ratio: float
    energy_before: float
    energy_after: float

    @property
    def ok(self) -> bool:
        return self.item3_ratio <= 1 + 1e-9 and self.item4_ratio <= 1 + 1e-9


@dataclass(frozen=True)
class ControlResult:
    r_prime: np.ndarray
    w_prime: Weights
    report: ControlReport
    congestion: Congestion


def control_congestion(g: Graph, point: IPMPoint, eta: float,
                       cfg: BoostConfig | None = None) -> ControlResult:
    """Boost resistances so no edge is congested relative to the energy.

    Uses ``d = m^(-6 eta) / 20000`` and ``W = C0 log(m) / d``; ``C0`` doubles
    until ``g_q(W) / W < d``.  Afterwards the congestion at the new weights
    satisfies ``||rho||_inf <= m^-eta ||rho||_{w,2}`` and
    ``s_e max(rho+, rho-) <= m^(-3 eta) ||rho||_{w,2} / 100``, both recomputed
    here; a violation raises :class:`CongestionControlError`.
    """
    cfg = cfg or BoostConfig()
    m = g.m
    r = resistances(g, point.w, point.f)
    base = electric_flow(g, r, g.chi, eps=cfg.eps)
    p = norm_index(m, cfg.p_override)
    q = dual_index(p)
    ones_p = m ** (1.0 / p)
    d_target = m ** (-6.0 * eta) / 20000.0
    C0 = cfg.C0
    doublings = 0
    if base.energy < DEGENERATE_ENERGY:
        w_prime = Weights.zeros(m)
        r_prime = np.zeros(m)
        W, gW = 0.0, 0.0
        skipped = True
    else:
        skipped = False
        while True:
            W = C0 * math.log(m) / d_target
            res = energy_maximize(g, r, g.chi, W, p, tol=cfg.newton_tol,
                                  max_iters=cfg.newton_max_iters, eps=cfg.eps)
            gW = math.log(res.new_energy) - math.log(base.energy)
            if gW / W < d_target:
                break
            if doublings >= cfg.max_doublings:
                raise SolverError(f"g(W)/W stays above {d_target:.3g} after {doublings} doublings")
            C0 *= 2.0
            doublings += 1
        r_prime = res.r_prime
        w_prime = compute_weights(g, point, r_prime)
        trace.note("r_prime_q_norm", float(np.sum(r_prime ** q) ** (1 / q)))
    w_new = point.w + w_prime
    cong = congestion(g, point.with_weights(w_new), cfg.eps)
    rho2 = weighted_norm(cong, w_new, 2)
    rhoinf = weighted_norm(cong, w_new, np.inf)
    s = slacks(g, point.f)
    item3 = rhoinf / (m ** (-eta) * rho2) if rho2 > 0 else 0.0
    item4 = (float(np.max(s * cong.rho_max)) / (m ** (-3.0 * eta) * rho2 / 100.0)
             if rho2 > 0 else 0.0)
    l1 = float(r_prime.sum())
    report = ControlReport(skipped, W, C0, doublings, p, gW / W if W else 0.0, d_target,
                           l1, l1 / m ** (6.0 * eta), ones_p, rho2, rhoinf, item3, item4,
                           base.energy, cong.energy)
    if not report.ok:
        raise CongestionControlError(
            f"congestion control post-check failed: item3 ratio {item3:.4g}, "
            f"item4 ratio {item4:.4g}", report)
    return ControlResult(r_prime, w_prime, report, cong)
