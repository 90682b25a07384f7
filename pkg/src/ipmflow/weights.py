"""Weight changes: resistance-to-weight translation, exact re-centering and
shrinking a weight increase to the smallest one with the same gaps.

All three return weight *increases*; the caller adds them.
"""

from __future__ import annotations

import numpy as np

from .central_path import IPMPoint, Weights, _sides, gaps
from .graph import Graph


def compute_weights(g: Graph, point: IPMPoint, r_prime: np.ndarray) -> Weights:
    """Weight increase that raises every resistance by at least ``r_prime``.

    The increase is balanced, ``w'+ / (u+ - f) = w'- / (u- + f)``, so the
    barrier gradient and hence every gap is unchanged.  The tighter side
    receives ``r' s^2``.
    """
    r_prime = np.asarray(r_prime, dtype=np.float64)
    if np.any(r_prime < 0):
        raise ValueError("resistance increases must be nonnegative")
    sp_, sm_ = _sides(g, point.f)
    upper_tight = sp_ <= sm_
    wp = np.where(upper_tight, r_prime * sp_ ** 2, r_prime * sm_ * sp_)
    wm = np.where(upper_tight, r_prime * sp_ * sm_, r_prime * sm_ ** 2)
    return Weights(wp, wm)


def perfect_center(g: Graph, point: IPMPoint, S: np.ndarray) -> Weights:
    """Weight increase making every edge of ``S`` exactly 0-coupled."""
    mask = np.zeros(g.m, dtype=bool)
    S = np.asarray(S)
    if S.dtype == bool:
        mask[:] = S
    else:
        mask[S.astype(np.int64)] = True
    sp_, sm_ = _sides(g, point.f)
    gp = gaps(g, point)
    wp = np.where(mask & (gp >= 0), sp_ * gp, 0.0)
    wm = np.where(mask & (gp < 0), -sm_ * gp, 0.0)
    assert np.all(wp >= 0) and np.all(wm >= 0)
    return Weights(wp, wm)


def reduce_weights(g: Graph, f_new: np.ndarray, w_prime: Weights) -> Weights:
    """Smallest nonnegative increase with the same gradient as ``w_prime`` at ``f_new``."""
    sp_, sm_ = _sides(g, np.asarray(f_new, dtype=np.float64))
    diff = w_prime.plus / sp_ - w_prime.minus / sm_
    wp = np.where(diff > 0, diff * sp_, 0.0)
    wm = np.where(diff < 0, -diff * sm_, 0.0)
    return Weights(wp, wm)
