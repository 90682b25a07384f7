"""Progress and centering moves along the weighted central path."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import trace
from .central_path import (Congestion, IPMPoint, congestion, coupling_norm, gaps,
                           resistances, weighted_norm)
from .electric import DEFAULT_EPS, LaplacianSolver
from .graph import Graph

# a point counts as 0-coupled below this coupling (finite-precision floor)
ZERO_COUPLING = 1e-9
CENTER_TARGET = 1e-12
CENTER_MAX_ITERS = 6
CENTER_MAX_INPUT = 1e-2
# couplings within this multiple of the gap rounding error are treated as converged
NOISE_MULTIPLE = 64.0
# resistances may drift by at most this factor inside one step
DRIFT_LIMIT = 2.0


class StepError(RuntimeError):
    """A step precondition or contract failed."""


class NumericalBreakdownError(StepError):
    pass


@dataclass(frozen=True)
class ProgressOutcome:
    point: IPMPoint
    delta: float
    coupling_in: float
    coupling_out: float
    bound: float
    edge_bound_ratio: float
    retried: bool
    congestion: Congestion


def _drift(r_old: np.ndarray, r_new: np.ndarray) -> float:
    if r_old.size == 0:
        return 1.0
    ratio = r_new / r_old
    return float(max(np.maximum.reduce(ratio), 1.0 / np.minimum.reduce(ratio)))


def progress_move(g: Graph, point: IPMPoint, delta: float, eps: float = DEFAULT_EPS,
                  cong: Congestion | None = None, zero_floor: float = ZERO_COUPLING,
                  check_pre: bool = True) -> ProgressOutcome:
    """Move ``delta`` along the electric unit flow; duals follow the potentials.

    Returns the new point together with the measured coupling and its
    contract ``10 delta^2 ||rho||_{w,4}^2``.  If the measured coupling exceeds
    twice the contract, ``delta`` is halved once before giving up.
    """
    r = cong.r if cong is not None else resistances(g, point.w, point.f)
    gamma_in = coupling_norm(g, point, r)
    if check_pre and gamma_in > zero_floor:
        raise StepError(f"progress needs a 0-coupled point, coupling is {gamma_in:.3g}")
    if cong is None:
        cong = congestion(g, point, eps, r=r)
    rho_inf = weighted_norm(cong, point.w, np.inf)
    if delta < 0:
        raise StepError("negative step")
    if delta * rho_inf > 0.1 * (1 + 1e-12):
        raise StepError(f"step {delta:.3g} exceeds 1/(10 ||rho||_inf) = {0.1 / rho_inf:.3g}")
    rho4 = weighted_norm(cong, point.w, 4)
    sp_ = g.u_plus - point.f
    sm_ = g.u_minus + point.f
    for attempt in range(2):
        f_new = point.f + delta * cong.fhat
        y_new = point.y + delta * cong.phi
        new = IPMPoint(f_new, y_new, point.w, point.t + delta)
        r_new = resistances(g, point.w, f_new)
        drift = _drift(r, r_new)
        if drift > DRIFT_LIMIT:
            raise NumericalBreakdownError(f"resistance drift {drift:.3g} inside a progress step")
        gp = gaps(g, new)
        gamma_out = float(np.sqrt(np.dot(gp, gp / r_new)))
        bound = 10.0 * delta ** 2 * rho4 ** 2
        floor = 2.0 * gamma_in + 1e-12
        if gamma_out <= 2.0 * bound + floor:
            edge_bound = 5.0 * delta ** 2 * (point.w.plus * cong.rho_plus ** 2 / sp_
                                             + point.w.minus * cong.rho_minus ** 2 / sm_)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.abs(gp) / (edge_bound + floor)
            ratio = float(np.nanmax(ratios)) if ratios.size else 0.0
            trace.note("progress_coupling", gamma_out)
            return ProgressOutcome(new, delta, gamma_in, gamma_out, bound, ratio,
                                   attempt > 0, cong)
        delta *= 0.5
    raise NumericalBreakdownError(
        f"progress coupling {gamma_out:.3g} exceeds twice its contract {bound:.3g}")


def progress_step(g: Graph, point: IPMPoint, delta: float, eps: float = DEFAULT_EPS,
                  cong: Congestion | None = None) -> IPMPoint:
    """``(f + delta fhat, y + delta phi, w)`` at parameter ``t + delta``."""
    if delta == 0:
        return point
    return progress_move(g, point, delta, eps, cong).point


def rounding_floor(g: Graph, point: IPMPoint, r: np.ndarray) -> float:
    """Coupling that one-ulp errors in the terms of every gap would produce."""
    y = point.y
    terms = (np.abs(y[g.head]) + np.abs(y[g.tail]) + point.w.plus / (g.u_plus - point.f)
             + point.w.minus / (g.u_minus + point.f))
    return float(np.finfo(np.float64).eps * np.sqrt(np.dot(terms * terms, 1.0 / r)))


def _center_once(g: Graph, point: IPMPoint, r: np.ndarray, gp: np.ndarray,
                 eps: float) -> tuple[IPMPoint, np.ndarray]:
    solver = LaplacianSolver(g, r, eps=eps)
    y_corr = -solver.solve(g.demand_of(gp / r))
    f_corr = ((y_corr[g.head] - y_corr[g.tail]) + gp) / r
    new = IPMPoint(point.f + f_corr, point.y + y_corr, point.w, point.t)
    r_new = resistances(g, new.w, new.f)
    drift = _drift(r, r_new)
    if drift > DRIFT_LIMIT:
        raise NumericalBreakdownError(f"resistance drift {drift:.3g} inside a centering step")
    return new, r_new


def center(g: Graph, point: IPMPoint, eps: float = DEFAULT_EPS,
           check_pre: bool = True) -> IPMPoint:
    """One Newton correction at fixed ``t`` and ``w``.

    Solves ``L y' = -B^T R^-1 g`` and sets ``f' = R^-1 (B y' + g)``, which
    cancels the gaps to first order and routes no net demand.
    """
    r = resistances(g, point.w, point.f)
    gp = gaps(g, point)
    gamma = float(np.sqrt(np.dot(gp, gp / r)))
    if check_pre and gamma > CENTER_MAX_INPUT:
        raise StepError(f"centering needs coupling <= 1/100, got {gamma:.3g}")
    if gamma == 0.0:
        return point
    return _center_once(g, point, r, gp, eps)[0]


@dataclass(frozen=True)
class CenterLog:
    coupling_in: float
    coupling_out: float


def center_fully(g: Graph, point: IPMPoint, target: float = CENTER_TARGET,
                 eps: float = DEFAULT_EPS, max_iters: int = CENTER_MAX_ITERS,
                 log: list[CenterLog] | None = None) -> IPMPoint:
    """Repeat :func:`center` until the coupling is at most ``target``.

    Also stops once the coupling is within ``NOISE_MULTIPLE`` times the
    rounding floor, where further corrections only reshuffle noise.
    """
    r = resistances(g, point.w, point.f)
    gp = gaps(g, point)
    gamma = float(np.sqrt(np.dot(gp, gp / r)))
    if gamma > CENTER_MAX_INPUT:
        raise StepError(f"centering needs coupling <= 1/100, got {gamma:.3g}")
    for _ in range(max_iters):
        if gamma <= target or (gamma <= ZERO_COUPLING
                               and gamma <= NOISE_MULTIPLE * rounding_floor(g, point, r)):
            return point
        new, r_new = _center_once(g, point, r, gp, eps)
        gp_new = gaps(g, new)
        gamma_new = float(np.sqrt(np.dot(gp_new, gp_new / r_new)))
        if log is not None:
            log.append(CenterLog(gamma, gamma_new))
        if not gamma_new < gamma:
            raise NumericalBreakdownError(
                f"centering stalled: coupling {gamma:.3g} -> {gamma_new:.3g}")
        point, r, gp, gamma = new, r_new, gp_new, gamma_new
    if gamma > max(target, NOISE_MULTIPLE * rounding_floor(g, point, r)):
        raise NumericalBreakdownError(
            f"coupling {gamma:.3g} above target {target:.3g} after {max_iters} centerings")
    trace.note("coupling", gamma)
    return point


def taylor_remainder(u1, u2, w1, w2, x) -> tuple[np.ndarray, np.ndarray]:
    """Second-order remainder of ``w1/(u1-x) - w2/(u2+x)`` and its bound.

    Returns ``(|remainder|, (5 w1/u1^3 + 5 w2/u2^3) x^2)``; the bound holds
    for ``|x| <= min(u1, u2) / 4``.
    """
    u1, u2, w1, w2, x = (np.asarray(a, dtype=np.float64) for a in (u1, u2, w1, w2, x))
    exact = w1 / (u1 - x) - w2 / (u2 + x)
    linear = w1 / u1 - w2 / u2 + (w1 / u1 ** 2 + w2 / u2 ** 2) * x
    return np.abs(exact - linear), (5 * w1 / u1 ** 3 + 5 * w2 / u2 ** 3) * x ** 2

