"""Capacitated multigraphs, DIMACS I/O, flow validation and graph reductions.

Vertices are numbered ``0..n-1`` internally; DIMACS files are 1-based.
An edge ``e = (tail, head)`` may carry flow ``f_e`` in ``[-u_minus, u_plus]``;
positive flow runs along the orientation.  Undirected edges are stored with
``u_plus == u_minus``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

EDGE_REGULAR = 0
EDGE_PRECONDITION = 1


class DimacsError(ValueError):
    """Base class for DIMACS parse errors."""


class MissingProblemLineError(DimacsError):
    pass


class MalformedHeaderError(DimacsError):
    pass


class MalformedLineError(DimacsError):
    pass


class NegativeCapacityError(DimacsError):
    pass


class MissingTerminalError(DimacsError):
    pass


class VertexOutOfRangeError(DimacsError):
    pass


class SelfLoopError(DimacsError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Oriented multigraph with two-sided capacities.

    Instances are immutable; array fields are read-only views.
    """

    n: int
    tail: np.ndarray
    head: np.ndarray
    u_plus: np.ndarray
    u_minus: np.ndarray
    source: int
    sink: int
    kind: np.ndarray = field(default=None)  # EDGE_REGULAR / EDGE_PRECONDITION tags

    def __post_init__(self) -> None:
        tail = np.asarray(self.tail, dtype=np.int64).ravel().copy()
        head = np.asarray(self.head, dtype=np.int64).ravel().copy()
        up = np.asarray(self.u_plus, dtype=np.float64).ravel().copy()
        um = np.asarray(self.u_minus, dtype=np.float64).ravel().copy()
        m = tail.size
        if not (head.size == up.size == um.size == m):
            raise ValueError("edge arrays must have equal length")
        kind = (np.zeros(m, dtype=np.int8) if self.kind is None
                else np.asarray(self.kind, dtype=np.int8).ravel().copy())
        if kind.size != m:
            raise ValueError("kind array has wrong length")
        if self.n < 0:
            raise ValueError("negative vertex count")
        for v in (self.source, self.sink):
            if not 0 <= v < max(self.n, 1) or self.n == 0:
                raise ValueError(f"terminal {v} out of range for n={self.n}")
        if self.source == self.sink:
            raise ValueError("source and sink must differ")
        if m:
            if tail.min() < 0 or head.min() < 0 or tail.max() >= self.n or head.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(tail == head):
                raise ValueError("self-loops are not allowed")
            if np.any(up < 0) or np.any(um < 0):
                raise ValueError("capacities must be nonnegative")
            if not (np.all(np.isfinite(up)) and np.all(np.isfinite(um))):
                raise ValueError("capacities must be finite")
        object.__setattr__(self, "tail", _frozen(tail))
        object.__setattr__(self, "head", _frozen(head))
        object.__setattr__(self, "u_plus", _frozen(up))
        object.__setattr__(self, "u_minus", _frozen(um))
        object.__setattr__(self, "kind", _frozen(kind))

    # -- basic properties -------------------------------------------------

    @property
    def m(self) -> int:
        return int(self.tail.size)

    @cached_property
    def U(self) -> float:
        """Largest capacity over both directions (0 for an empty graph)."""
        if self.m == 0:
            return 0.0
        return float(max(self.u_plus.max(), self.u_minus.max()))

    @property
    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.tail.tolist(), self.head.tolist()))

    @property
    def is_directed(self) -> bool:
        return bool(np.all(self.u_minus == 0))

    @property
    def is_undirected(self) -> bool:
        return bool(np.array_equal(self.u_plus, self.u_minus))

    @property
    def has_integer_capacities(self) -> bool:
        return bool(np.all(self.u_plus == np.round(self.u_plus))
                    and np.all(self.u_minus == np.round(self.u_minus)))

    @cached_property
    def chi(self) -> np.ndarray:
        """Unit demand ``1_sink - 1_source``."""
        d = np.zeros(self.n)
        d[self.sink] = 1.0
        d[self.source] = -1.0
        return _frozen(d)

    @cached_property
    def incidence(self) -> sp.csr_matrix:
        """Edge-vertex incidence matrix: row e has -1 at the tail, +1 at the head."""
        m = self.m
        rows = np.repeat(np.arange(m), 2)
        cols = np.column_stack([self.tail, self.head]).ravel()
        vals = np.tile([-1.0, 1.0], m)
        return sp.csr_matrix((vals, (rows, cols)), shape=(m, self.n))

    @cached_property
    def components(self) -> tuple[int, np.ndarray]:
        """Connected components of the underlying undirected multigraph."""
        from scipy.sparse.csgraph import connected_components

        adj = sp.coo_matrix((np.ones(self.m), (self.tail, self.head)),
                            shape=(self.n, self.n))
        return connected_components(adj, directed=False)

    @cached_property
    def grounding(self) -> tuple[np.ndarray, np.ndarray]:
        """Vertices left after removing the lowest vertex of every component,
        and the position of each vertex among them (-1 when removed)."""
        ncomp, labels = self.components
        first = np.full(ncomp, self.n, dtype=np.int64)
        np.minimum.at(first, labels, np.arange(self.n))
        mask = np.ones(self.n, dtype=bool)
        mask[first] = False
        keep = np.flatnonzero(mask)
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[keep] = np.arange(keep.size)
        return _frozen(keep), _frozen(pos)

    def demand_of(self, f: np.ndarray) -> np.ndarray:
        """Net inflow ``B^T f`` at every vertex."""
        f = np.asarray(f, dtype=np.float64)
        return (np.bincount(self.head, weights=f, minlength=self.n)
                - np.bincount(self.tail, weights=f, minlength=self.n))

    def with_edges(self, tail, head, u_plus, u_minus, kind=None) -> "Graph":
        return Graph(self.n, tail, head, u_plus, u_minus, self.source, self.sink, kind)

    def __repr__(self) -> str:
        return (f"Graph(n={self.n}, m={self.m}, source={self.source}, sink={self.sink}, "
                f"U={self.U:g}, undirected={self.is_undirected})")

    def same_as(self, other: "Graph") -> bool:
        return (self.n == other.n and self.source == other.source
                and self.sink == other.sink
                and np.array_equal(self.tail, other.tail)
                and np.array_equal(self.head, other.head)
                and np.array_equal(self.u_plus, other.u_plus)
                and np.array_equal(self.u_minus, other.u_minus))


def directed_graph(n: int, arcs: Iterable[Sequence[float]], source: int, sink: int) -> Graph:
    """Build a directed graph from ``(u, v, cap)`` triples (0-based)."""
    arcs = [tuple(a) for a in arcs]
    tail = [int(a[0]) for a in arcs]
    head = [int(a[1]) for a in arcs]
    cap = [float(a[2]) for a in arcs]
    return Graph(n, tail, head, cap, np.zeros(len(cap)), source, sink)


def undirected_graph(n: int, edges: Iterable[Sequence[float]], source: int, sink: int) -> Graph:
    """Build an undirected graph from ``(u, v, cap)`` triples (0-based)."""
    edges = [tuple(e) for e in edges]
    cap = [float(e[2]) for e in edges]
    return Graph(n, [int(e[0]) for e in edges], [int(e[1]) for e in edges],
                 cap, cap, source, sink)


# -- DIMACS -----------------------------------------------------------------

def parse_dimacs(text: str | bytes) -> Graph:
    """Parse a DIMACS max-flow instance into a directed :class:`Graph`."""
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")
    n = m_declared = None
    source = sink = None
    tails: list[int] = []
    heads: list[int] = []
    caps: list[float] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] == "c":
            continue
        tok = line.split()
        tag = tok[0]
        if tag == "p":
            if n is not None:
                raise MalformedHeaderError(f"line {lineno}: duplicate problem line")
            if len(tok) != 4 or tok[1] != "max":
                raise MalformedHeaderError(f"line {lineno}: expected 'p max <n> <m>'")
            try:
                n, m_declared = int(tok[2]), int(tok[3])
            except ValueError:
                raise MalformedHeaderError(f"line {lineno}: non-integer sizes") from None
            if n < 2 or m_declared < 0:
                raise MalformedHeaderError(f"line {lineno}: need n >= 2 and m >= 0")
            continue
        if n is None:
            raise MissingProblemLineError(f"line {lineno}: '{tag}' line before problem line")
        if tag == "n":
            if len(tok) != 3 or tok[2] not in ("s", "t"):
                raise MalformedLineError(f"line {lineno}: expected 'n <id> s|t'")
            v = _vertex(tok[1], n, lineno)
            if tok[2] == "s":
                source = v
            else:
                sink = v
        elif tag == "a":
            if len(tok) != 4:
                raise MalformedLineError(f"line {lineno}: expected 'a <u> <v> <cap>'")
            u, v = _vertex(tok[1], n, lineno), _vertex(tok[2], n, lineno)
            try:
                cap = int(tok[3])
            except ValueError:
                raise MalformedLineError(f"line {lineno}: capacity must be an integer") from None
            if cap < 0:
                raise NegativeCapacityError(f"line {lineno}: capacity {cap} < 0")
            if u == v:
                raise SelfLoopError(f"line {lineno}: self-loop at vertex {u + 1}")
            tails.append(u)
            heads.append(v)
            caps.append(float(cap))
        else:
            raise MalformedLineError(f"line {lineno}: unknown line type '{tag}'")
    if n is None:
        raise MissingProblemLineError("missing problem line")
    if source is None or sink is None:
        raise MissingTerminalError("missing source" if source is None else "missing sink")
    if source == sink:
        raise MissingTerminalError("source and sink coincide")
    if len(tails) != m_declared:
        raise MalformedHeaderError(f"header declares {m_declared} arcs, found {len(tails)}")
    return Graph(n, tails, heads, caps, np.zeros(len(caps)), source, sink)


def _vertex(tok: str, n: int, lineno: int) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise MalformedLineError(f"line {lineno}: bad vertex id '{tok}'") from None
    if not 1 <= v <= n:
        raise VertexOutOfRangeError(f"line {lineno}: vertex {v} outside 1..{n}")
    return v - 1


def write_dimacs(g: Graph) -> str:
    """Serialize a directed graph with integral capacities."""
    if not g.is_directed:
        raise ValueError("DIMACS max-flow format holds directed graphs only")
    if not g.has_integer_capacities:
        raise ValueError("DIMACS capacities must be integers")
    lines = [f"p max {g.n} {g.m}", f"n {g.source + 1} s", f"n {g.sink + 1} t"]
    lines += [f"a {u + 1} {v + 1} {int(c)}"
              for u, v, c in zip(g.tail.tolist(), g.head.tolist(), g.u_plus.tolist())]
    return "\n".join(lines) + "\n"


def format_flow(f: np.ndarray, value: float) -> str:
    """Flow file: ``f <edge-index> <value>`` per edge (1-based) and ``s <value>``."""
    def num(x: float) -> str:
        return str(int(round(x))) if float(x).is_integer() else repr(float(x))

    lines = [f"f {i + 1} {num(x)}" for i, x in enumerate(np.asarray(f, dtype=float))]
    lines.append(f"s {num(value)}")
    return "\n".join(lines) + "\n"


# -- validation ---------------------------------------------------------------

@dataclass(frozen=True)
class FlowReport:
    capacity_violation: float
    demand_residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.capacity_violation <= self.tol and self.demand_residual <= self.tol


def validate_flow(g: Graph, f: np.ndarray, d: np.ndarray, tol: float = 0.0) -> FlowReport:
    """Report the worst capacity violation and demand residual of ``f``."""
    f = np.asarray(f, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if f.shape != (g.m,) or d.shape != (g.n,):
        raise ValueError("size mismatch between graph, flow and demand")
    viol = 0.0
    if g.m:
        viol = float(max(0.0, np.max(f - g.u_plus), np.max(-g.u_minus - f)))
    resid = float(np.max(np.abs(g.demand_of(f) - d))) if g.n else 0.0
    return FlowReport(viol, resid, tol)


def flow_value(g: Graph, f: np.ndarray, tol: float = 1e-9) -> float:
    """Net flow into the sink, after checking that ``f`` is an ab-flow."""
    dem = g.demand_of(f)
    t = float(dem[g.sink])
    resid = dem - t * g.chi
    scale = max(1.0, float(np.max(np.abs(f))) if g.m else 1.0)
    if np.max(np.abs(resid)) > tol * scale:
        raise ValueError(f"flow is not an ab-flow (residual {np.max(np.abs(resid)):.3g})")
    return t


# -- reductions ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DirectedReduction:
    """Back-map from the undirected lift of a directed graph.

    ``mid[e]`` is the lift edge ``(v, u)`` of original edge ``e = (u, v)``;
    ``canonical`` is the flow sending ``c_e`` along ``a -> v -> u -> b`` for
    every edge, which is feasible and saturates every lift edge it uses.
    """

    original: Graph
    lifted: Graph
    mid: np.ndarray
    canonical: np.ndarray

    @property
    def offset(self) -> float:
        """Value of the canonical flow, i.e. the sum of original capacities."""
        return float(self.original.u_plus.sum())

    def recover(self, f_lifted: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Map a feasible flow of the lift to a feasible flow of the original.

        The difference to the canonical flow lives in the residual graph of
        the canonical flow.  Its source-sink paths only use reversed middle
        edges, i.e. doubled copies of original edges; halving their sum gives
        a flow of the original graph with half the residual value.
        """
        lifted = self.lifted
        h = np.asarray(f_lifted, dtype=np.float64) - self.canonical
        # every lift edge is saturated by the canonical flow, so the
        # difference only runs against the orientation
        amount = np.clip(-h, 0.0, None)
        path_sum = decompose_paths(lifted.n, lifted.head, lifted.tail, amount,
                                   lifted.source, lifted.sink, tol)
        g = self.original
        x = np.zeros(g.m)
        ok = self.mid >= 0
        x[ok] = 0.5 * path_sum[self.mid[ok]]
        return np.clip(x, 0.0, g.u_plus)


def reduce_directed_to_undirected(g: Graph) -> tuple[Graph, DirectedReduction]:
    """Lift a directed graph to an undirected one (max flow ``2t* + sum c``).

    Edge ``(u, v)`` of capacity ``c`` becomes undirected edges ``(a, v)``,
    ``(v, u)`` and ``(u, b)`` of capacity ``c``.  A lift edge whose endpoints
    coincide (edges entering the source or leaving the sink) is a self-loop,
    carries nothing, and is dropped.
    """
    if not g.is_directed:
        raise ValueError("reduction expects a directed graph (u_minus == 0)")
    a, b = g.source, g.sink
    tails: list[int] = []
    heads: list[int] = []
    caps: list[float] = []
    mid = np.full(g.m, -1, dtype=np.int64)
    for e, (u, v, c) in enumerate(zip(g.tail.tolist(), g.head.tolist(), g.u_plus.tolist())):
        for x, y, is_mid in ((a, v, False), (v, u, True), (u, b, False)):
            if x == y:
                continue
            if is_mid:
                mid[e] = len(tails)
            tails.append(x)
            heads.append(y)
            caps.append(c)
    lifted = Graph(g.n, tails, heads, caps, caps, a, b)
    canonical = np.asarray(caps, dtype=np.float64)
    return lifted, DirectedReduction(g, lifted, _frozen(mid), _frozen(canonical))


def precondition(g: Graph) -> Graph:
    """Append ``m`` parallel source-sink edges of capacity ``2U``."""
    if not g.is_undirected:
        raise ValueError("preconditioning expects an undirected graph")
    m = g.m
    if m == 0:
        return g
    cap = 2.0 * g.U
    return g.with_edges(
        np.concatenate([g.tail, np.full(m, g.source)]),
        np.concatenate([g.head, np.full(m, g.sink)]),
        np.concatenate([g.u_plus, np.full(m, cap)]),
        np.concatenate([g.u_minus, np.full(m, cap)]),
        np.concatenate([g.kind, np.full(m, EDGE_PRECONDITION, dtype=np.int8)]),
    )


def strip_zero_capacity(g: Graph) -> tuple[Graph, np.ndarray]:
    """Drop edges with no capacity in either direction; returns kept indices."""
    keep = np.flatnonzero((g.u_plus > 0) | (g.u_minus > 0))
    sub = g.with_edges(g.tail[keep], g.head[keep], g.u_plus[keep], g.u_minus[keep],
                       g.kind[keep])
    return sub, keep


# -- path decomposition -------------------------------------------------------

def decompose_paths(n: int, tails: np.ndarray, heads: np.ndarray, amount: np.ndarray,
                    s: int, t: int, tol: float = 1e-9) -> np.ndarray:
    """Sum of the s-t paths in a decomposition of a nonnegative arc flow.

    Cycles met during the walk are cancelled and discarded.  Arcs carrying at
    most ``tol`` are treated as empty; a walk that gets stuck drops the arc it
    arrived on, so slightly non-conservative inputs are handled gracefully.
    """
    flow = np.asarray(amount, dtype=np.float64).copy()
    tails = np.asarray(tails).tolist()
    heads_l = np.asarray(heads).tolist()
    out: list[list[int]] = [[] for _ in range(n)]
    for e, u in enumerate(tails):
        if flow[e] > tol:
            out[u].append(e)
    ptr = [0] * n
    result = np.zeros(flow.size)

    def next_arc(x: int) -> int:
        arcs = out[x]
        i = ptr[x]
        while i < len(arcs) and flow[arcs[i]] <= tol:
            i += 1
        ptr[x] = i
        return arcs[i] if i < len(arcs) else -1

    while True:
        path: list[int] = []
        pos = {s: 0}
        x = s
        while x != t:
            e = next_arc(x)
            if e < 0:
                if not path:
                    return result
                dead = path.pop()
                flow[dead] = 0.0
                del pos[x]
                x = tails[dead]
                continue
            path.append(e)
            y = heads_l[e]
            if y in pos:
                k = pos[y]
                cycle = path[k:]
                c = min(flow[a] for a in cycle)
                for a in cycle:
                    flow[a] -= c
                    pos.pop(heads_l[a], None)
                del path[k:]
                pos[y] = k
                x = y
                continue
            pos[y] = len(path)
            x = y
        c = min(flow[a] for a in path)
        for a in path:
            flow[a] -= c
            result[a] += c
