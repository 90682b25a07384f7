"""Laplacian solves, electric flows and energy certificates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dpotrf, dpotrs
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .graph import Graph

DEFAULT_EPS = 1e-10
DENSE_LIMIT = 400


class InconsistentDemandError(ValueError):
    """Demand does not sum to zero on some connected component."""


@dataclass(frozen=True)
class ElectricSolution:
    fhat: np.ndarray
    phi: np.ndarray
    energy: float


def _check_resistances(g: Graph, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (g.m,):
        raise ValueError(f"expected {g.m} resistances, got shape {r.shape}")
    if g.m:
        lo, hi = np.minimum.reduce(r), np.maximum.reduce(r)
        if not lo > 0:
            raise ValueError("resistances must be positive")
        if not np.isfinite(hi):
            raise ValueError("resistances must be finite")
    return r


def build_laplacian(g: Graph, r: np.ndarray) -> sp.csr_matrix:
    """``B^T R^{-1} B`` as a sparse symmetric matrix."""
    r = _check_resistances(g, r)
    B = g.incidence
    return (B.T @ sp.diags(1.0 / r) @ B).tocsr()


def energy(r: np.ndarray, f: np.ndarray) -> float:
    """``sum_e r_e f_e^2``."""
    r = np.asarray(r, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if r.shape != f.shape:
        raise ValueError("size mismatch between resistances and flow")
    return float(np.dot(r, f * f))


def _dense_pattern(g: Graph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flat positions in the grounded dense Laplacian touched by each edge.

    Cached on the graph; returns ``(flat index, edge id, sign)`` triples.
    """
    cached = g.__dict__.get("_dense_pattern")
    if cached is not None:
        return cached
    _, pos = g.grounding
    k = int(np.sum(pos >= 0))
    pt, ph = pos[g.tail], pos[g.head]
    e = np.arange(g.m)
    idx, sel, sign = [], [], []
    for a, b, sgn in ((pt, pt, 1.0), (ph, ph, 1.0), (pt, ph, -1.0), (ph, pt, -1.0)):
        ok = (a >= 0) & (b >= 0)
        idx.append(a[ok] * k + b[ok])
        sel.append(e[ok])
        sign.append(np.full(int(ok.sum()), sgn))
    out = (np.concatenate(idx), np.concatenate(sel), np.concatenate(sign))
    g.__dict__["_dense_pattern"] = out
    return out


class LaplacianSolver:
    """Factorization of a graph Laplacian, grounded once per component.

    ``method`` is ``"direct"`` (dense Cholesky below ``DENSE_LIMIT`` vertices,
    sparse LU above) or ``"cg"`` (Jacobi-preconditioned conjugate gradient).
    Instances are immutable after construction.
    """

    def __init__(self, g: Graph, r: np.ndarray, method: str = "direct",
                 eps: float = DEFAULT_EPS) -> None:
        r = _check_resistances(g, r)
        self.n = g.n
        self.eps = eps
        self.method = method
        self.ncomp, self.labels = g.components
        self.keep, pos = g.grounding
        self._counts = np.bincount(self.labels, minlength=self.ncomp).astype(np.float64)
        self._tail, self._head = g.tail, g.head
        self._c = c = 1.0 / r
        k = self.keep.size
        if k == 0:
            self._kind = "empty"
            return
        if method == "cg" or g.n > DENSE_LIMIT:
            L = (g.incidence.T @ sp.diags(c) @ g.incidence).tocsc()
            Lr = L[self.keep][:, self.keep].tocsc()
            if method == "cg":
                self._kind = "cg"
                self._Lr = Lr
                diag = Lr.diagonal()
                self._M = spla.LinearOperator(Lr.shape, matvec=lambda x: x / diag)
            else:
                self._kind = "lu"
                self._lu = spla.splu(Lr)
        else:
            idx, sel, sign = _dense_pattern(g)
            Lr = np.bincount(idx, weights=sign * c[sel], minlength=k * k).reshape(k, k)
            self._kind = "dense"
            # raw LAPACK: the cho_factor wrappers dominate at this size
            chol, info = dpotrf(Lr, lower=1, clean=0, overwrite_a=1)
            if info != 0:
                raise np.linalg.LinAlgError(f"Laplacian factorization failed (info={info})")
            self._chol = chol

    def apply(self, x: np.ndarray) -> np.ndarray:
        """``L x`` for the full (ungrounded) Laplacian."""
        diff = self._c * (x[self._head] - x[self._tail])
        return (np.bincount(self._head, weights=diff, minlength=self.n)
                - np.bincount(self._tail, weights=diff, minlength=self.n))

    def _solve_grounded(self, b: np.ndarray) -> np.ndarray:
        if self._kind == "dense":
            x, info = dpotrs(self._chol, b, lower=1)
            if info != 0:
                raise np.linalg.LinAlgError(f"triangular solve failed (info={info})")
            return x
        if self._kind == "lu":
            return self._lu.solve(b)
        x, info = spla.cg(self._Lr, b, rtol=self.eps * 1e-2, atol=0.0,
                          maxiter=10 * b.size + 100, M=self._M)
        if info != 0:
            raise RuntimeError(f"conjugate gradient did not converge (info={info})")
        return x

    def solve(self, d: np.ndarray) -> np.ndarray:
        """Potentials ``phi`` with ``L phi = d``, mean zero per component."""
        d = np.asarray(d, dtype=np.float64)
        if d.shape != (self.n,):
            raise ValueError("demand has wrong size")
        sums = np.bincount(self.labels, weights=d, minlength=self.ncomp)
        scale = max(1.0, float(np.max(np.abs(d)))) if d.size else 1.0
        if np.any(np.abs(sums) > 1e-9 * scale * np.sqrt(self._counts)):
            raise InconsistentDemandError(
                f"demand sums to {sums[np.argmax(np.abs(sums))]:.3g} on a component")
        phi = np.zeros(self.n)
        if self._kind == "empty":
            return phi
        phi[self.keep] = self._solve_grounded(d[self.keep])
        if self._kind != "cg":
            # one step of iterative refinement
            res = d - self.apply(phi)
            phi[self.keep] += self._solve_grounded(res[self.keep])
        means = np.bincount(self.labels, weights=phi, minlength=self.ncomp) / self._counts
        return phi - means[self.labels]


def solve_laplacian(L, d: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Solve ``L phi = d`` for a Laplacian given as a (sparse) matrix.

    Standalone entry point; the IPM uses :class:`LaplacianSolver`, which
    reuses the graph structure.
    """
    L = sp.csr_matrix(L)
    n = L.shape[0]
    ncomp, labels = connected_components(L, directed=False)
    d = np.asarray(d, dtype=np.float64)
    sums = np.bincount(labels, weights=d, minlength=ncomp)
    scale = max(1.0, float(np.max(np.abs(d)))) if n else 1.0
    if np.any(np.abs(sums) > 1e-9 * scale * np.sqrt(n)):
        raise InconsistentDemandError("demand is not orthogonal to the Laplacian kernel")
    first = {}
    for v in range(n):
        first.setdefault(labels[v], v)
    keep = np.setdiff1d(np.arange(n), np.fromiter(first.values(), dtype=np.int64))
    phi = np.zeros(n)
    if keep.size:
        Lr = L[keep][:, keep].tocsc()
        lu = spla.splu(Lr)
        phi[keep] = lu.solve(d[keep])
        res = d - L @ phi
        phi[keep] += lu.solve(res[keep])
    counts = np.bincount(labels, minlength=ncomp)
    means = np.bincount(labels, weights=phi, minlength=ncomp) / counts
    return phi - means[labels]


def electric_flow(g: Graph, r: np.ndarray, d: np.ndarray, eps: float = DEFAULT_EPS,
                  solver: LaplacianSolver | None = None) -> ElectricSolution:
    """Energy-minimizing flow routing ``d`` with resistances ``r`` (Ohm's law)."""
    r = _check_resistances(g, r)
    if solver is None:
        solver = LaplacianSolver(g, r, eps=eps)
    phi = solver.solve(d)
    fhat = (phi[g.head] - phi[g.tail]) / r
    return ElectricSolution(fhat, phi, energy(r, fhat))


def energy_lower_bound(g: Graph, r: np.ndarray, d: np.ndarray, phi_cert: np.ndarray) -> float:
    """Certified lower bound on the minimum energy of a ``d``-flow.

    Any potentials ``phi`` normalised to ``d . phi = 1`` give
    ``min energy >= 1 / sum_e (phi_u - phi_v)^2 / r_e``.
    """
    r = _check_resistances(g, r)
    phi = np.asarray(phi_cert, dtype=np.float64)
    s = float(np.dot(d, phi))
    if s == 0.0:
        raise ValueError("certificate is orthogonal to the demand")
    phi = phi / s
    diff = phi[g.head] - phi[g.tail]
    denom = float(np.sum(diff * diff / r))
    if denom == 0.0:
        return np.inf
    return 1.0 / denom
