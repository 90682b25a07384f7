"""State of the interior-point method and the quantities read off it.

A point is ``(f, y, w)`` at path parameter ``t``: an ab-flow of value ``t``,
vertex duals ``y`` and two-sided barrier weights ``w``.  Everything here is a
pure function of a graph and a point.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import trace
from .electric import DEFAULT_EPS, LaplacianSolver, electric_flow
from .graph import Graph

STRICT_MARGIN = 1e-12


class InfeasiblePointError(ValueError):
    """A slack is nonpositive or below the strict-feasibility margin."""


@dataclass(frozen=True)
class Weights:
    """Barrier weights for the upper (``plus``) and lower (``minus``) sides."""

    plus: np.ndarray
    minus: np.ndarray

    @classmethod
    def ones(cls, m: int) -> "Weights":
        return cls(np.ones(m), np.ones(m))

    @classmethod
    def zeros(cls, m: int) -> "Weights":
        return cls(np.zeros(m), np.zeros(m))

    @property
    def l1(self) -> float:
        return float(np.add.reduce(self.plus) + np.add.reduce(self.minus))

    def __add__(self, other: "Weights") -> "Weights":
        return Weights(self.plus + other.plus, self.minus + other.minus)

    def per_edge(self) -> np.ndarray:
        return self.plus + self.minus

    def restrict(self, mask: np.ndarray) -> "Weights":
        return Weights(np.where(mask, self.plus, 0.0), np.where(mask, self.minus, 0.0))


@dataclass(frozen=True)
class IPMPoint:
    f: np.ndarray
    y: np.ndarray
    w: Weights
    t: float

    @classmethod
    def initial(cls, g: Graph) -> "IPMPoint":
        """``f = y = 0``, ``w = 1`` at ``t = 0``; 0-coupled on undirected graphs."""
        return cls(np.zeros(g.m), np.zeros(g.n), Weights.ones(g.m), 0.0)

    def with_weights(self, w: Weights) -> "IPMPoint":
        return replace(self, w=w)


@dataclass(frozen=True)
class Congestion:
    """Two-sided congestion of the electric unit flow at a point."""

    rho_plus: np.ndarray
    rho_minus: np.ndarray
    fhat: np.ndarray
    phi: np.ndarray
    energy: float
    r: np.ndarray

    @property
    def rho_max(self) -> np.ndarray:
        return np.maximum(self.rho_plus, self.rho_minus)


def upper_slack(g: Graph, f: np.ndarray) -> np.ndarray:
    return g.u_plus - f


def lower_slack(g: Graph, f: np.ndarray) -> np.ndarray:
    return g.u_minus + f


def _sides(g: Graph, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sp_ = g.u_plus - f
    sm_ = g.u_minus + f
    floor = STRICT_MARGIN * max(g.U, 1.0)
    # ufunc reductions skip the ndarray.min wrapper on this hot path
    if g.m and min(np.minimum.reduce(sp_), np.minimum.reduce(sm_)) < floor:
        e = int(np.argmin(np.minimum(sp_, sm_)))
        raise InfeasiblePointError(
            f"edge {e}: slack {min(sp_[e], sm_[e]):.3g} below margin {floor:.3g}")
    return sp_, sm_


def slacks(g: Graph, f: np.ndarray) -> np.ndarray:
    """``s_e = min(u+_e - f_e, u-_e + f_e)``."""
    sp_, sm_ = _sides(g, np.asarray(f, dtype=np.float64))
    return np.minimum(sp_, sm_)


def barrier_value(g: Graph, w: Weights, f: np.ndarray) -> float:
    sp_, sm_ = _sides(g, np.asarray(f, dtype=np.float64))
    return float(-np.sum(w.plus * np.log(sp_) + w.minus * np.log(sm_)))


def barrier_gradient(g: Graph, w: Weights, f: np.ndarray) -> np.ndarray:
    sp_, sm_ = _sides(g, np.asarray(f, dtype=np.float64))
    return w.plus / sp_ - w.minus / sm_


def resistances(g: Graph, w: Weights, f: np.ndarray) -> np.ndarray:
    """Diagonal of the barrier Hessian."""
    sp_, sm_ = _sides(g, np.asarray(f, dtype=np.float64))
    return w.plus / sp_ ** 2 + w.minus / sm_ ** 2


def gaps(g: Graph, point: IPMPoint) -> np.ndarray:
    """Per-edge mismatch between dual differences and the barrier gradient."""
    y = point.y
    return (y[g.head] - y[g.tail]) - barrier_gradient(g, point.w, point.f)


def coupling_norm(g: Graph, point: IPMPoint, r: np.ndarray | None = None) -> float:
    """``||gaps||_{R^-1}`` at the point's own resistances."""
    if r is None:
        r = resistances(g, point.w, point.f)
    gp = gaps(g, point)
    val = float(np.sqrt(np.dot(gp, gp / r)))
    trace.note("coupling", val)
    return val


def congestion(g: Graph, point: IPMPoint, eps: float = DEFAULT_EPS,
               solver: LaplacianSolver | None = None,
               r: np.ndarray | None = None) -> Congestion:
    """Congestion of the electric unit ab-flow at the point's resistances."""
    if r is None:
        r = resistances(g, point.w, point.f)
    sp_, sm_ = _sides(g, point.f)
    sol = electric_flow(g, r, g.chi, eps=eps, solver=solver)
    a = np.abs(sol.fhat)
    cong = Congestion(a / sp_, a / sm_, sol.fhat, sol.phi, sol.energy, r)
    trace.note("energy", sol.energy)
    return cong


def weighted_norm(cong: Congestion | tuple[np.ndarray, np.ndarray], w: Weights,
                  k: float) -> float:
    """``(sum w+ rho+^k + w- rho-^k)^(1/k)``; ``k = inf`` is the plain maximum."""
    if isinstance(cong, Congestion):
        rp, rm = cong.rho_plus, cong.rho_minus
    else:
        rp, rm = (np.asarray(x, dtype=np.float64) for x in cong)
    if k == np.inf:
        if rp.size == 0:
            return 0.0
        return float(max(np.maximum.reduce(rp), np.maximum.reduce(rm)))
    if k < 1:
        raise ValueError("norm index must be at least 1")
    total = np.dot(w.plus, rp ** k) + np.dot(w.minus, rm ** k)
    return float(total ** (1.0 / k))


@dataclass(frozen=True)
class Rho2Report:
    rho2_sq: float
    bound_general: float
    bound_budget: float
    bound_threshold: float | None

    @property
    def ok(self) -> bool:
        ok = self.rho2_sq <= self.bound_general * (1 + 1e-9)
        if self.bound_threshold is not None:
            ok = ok and np.sqrt(self.rho2_sq) <= self.bound_threshold * (1 + 1e-9)
        return ok

    @property
    def slack(self) -> float:
        return self.bound_general / self.rho2_sq if self.rho2_sq > 0 else np.inf


def check_rho2_bound(g: Graph, point: IPMPoint, F_t: float, eta: float = 0.0,
                     cong: Congestion | None = None) -> Rho2Report:
    """Compare ``||rho||_{w,2}^2`` with the preconditioned-graph bounds.

    ``bound_general`` is ``50 ||w||_1^3 m^-2 F_t^-2``; ``bound_budget`` is the
    ``1500 m F_t^-2`` form valid once ``||w||_1 <= 3m``; ``bound_threshold``
    is ``40 m^eta`` when ``F_t >= m^(1/2 - eta)``.
    """
    if cong is None:
        cong = congestion(g, point)
    m = g.m
    rho2_sq = weighted_norm(cong, point.w, 2) ** 2
    w1 = point.w.l1
    general = 50.0 * w1 ** 3 / (m ** 2 * F_t ** 2)
    budget = 1500.0 * m / F_t ** 2
    thr = 40.0 * m ** eta if F_t >= m ** (0.5 - eta) else None
    return Rho2Report(rho2_sq, general, budget, thr)


def residual_upper_bound(g: Graph, point: IPMPoint) -> float:
    """Certified upper bound on ``F_t = t* - t`` from the duals.

    Any flow ``f'`` routing ``F_t chi`` within the residual capacities
    satisfies ``F_t chi^T y = f'^T B y = f'^T (grad V + gaps)``; each edge
    contributes at most ``max(w+, w-) + max-side-slack * |gap|``.
    """
    cy = float(point.y[g.sink] - point.y[g.source])
    if cy <= 0:
        return np.inf
    sp_, sm_ = _sides(g, point.f)
    gp = gaps(g, point)
    total = (np.add.reduce(np.maximum(point.w.plus, point.w.minus))
             + np.dot(np.maximum(sp_, sm_), np.abs(gp)))
    return float(total / cy)


def cut_upper_bound(g: Graph) -> float:
    """Capacity of the cuts isolating the source or the sink."""
    out_a = np.sum(np.where(g.tail == g.source, g.u_plus, 0.0)
                   + np.where(g.head == g.source, g.u_minus, 0.0))
    in_b = np.sum(np.where(g.head == g.sink, g.u_plus, 0.0)
                  + np.where(g.tail == g.sink, g.u_minus, 0.0))
    return float(min(out_a, in_b))
