"""Combinatorial max-flow routines: Dinic, Edmonds-Karp and integral rounding.

Dinic is both the exactness oracle and the augmenting-path finisher of the
interior-point pipeline.  Edmonds-Karp is an independent second
implementation kept for cross-checking.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .graph import Graph


def _as_int(x: float, what: str) -> int:
    r = round(x)
    if abs(x - r) > 1e-9:
        raise ValueError(f"{what} must be integral, got {x!r}")
    return int(r)


def dinic_maxflow(g: Graph, initial: np.ndarray | None = None) -> tuple[np.ndarray, int]:
    """Exact integral maximum flow by Dinic's blocking-flow algorithm.

    With ``initial`` given (a feasible integral ab-flow), augments on its
    residual graph, which is how the interior-point method finishes.
    Returns the final edge flow and its value.
    """
    m, n = g.m, g.n
    f0 = np.zeros(m) if initial is None else np.asarray(initial, dtype=np.float64)
    base = [_as_int(x, "initial flow") for x in f0.tolist()]
    # arc 2e runs tail->head, arc 2e+1 head->tail
    to = [0] * (2 * m)
    cap = [0] * (2 * m)
    adj: list[list[int]] = [[] for _ in range(n)]
    for e, (u, v, up, um) in enumerate(zip(g.tail.tolist(), g.head.tolist(),
                                            g.u_plus.tolist(), g.u_minus.tolist())):
        fe = base[e]
        cf = _as_int(up, "capacity") - fe
        cb = _as_int(um, "capacity") + fe
        if cf < 0 or cb < 0:
            raise ValueError(f"initial flow infeasible on edge {e}")
        to[2 * e], cap[2 * e] = v, cf
        to[2 * e + 1], cap[2 * e + 1] = u, cb
        adj[u].append(2 * e)
        adj[v].append(2 * e + 1)
    orig = cap[:]
    s, t = g.source, g.sink

    while True:
        level = [-1] * n
        level[s] = 0
        q = deque([s])
        while q:
            x = q.popleft()
            for a in adj[x]:
                if cap[a] > 0 and level[to[a]] < 0:
                    level[to[a]] = level[x] + 1
                    q.append(to[a])
        if level[t] < 0:
            break
        it = [0] * n
        while True:
            # iterative DFS for one augmenting path in the level graph
            stack: list[int] = []
            x = s
            while x != t:
                arcs = adj[x]
                i = it[x]
                while i < len(arcs):
                    a = arcs[i]
                    if cap[a] > 0 and level[to[a]] == level[x] + 1:
                        break
                    i += 1
                it[x] = i
                if i == len(arcs):
                    level[x] = -1  # dead end, prune
                    if not stack:
                        break
                    a = stack.pop()
                    x = to[a ^ 1]
                    it[x] += 1
                    continue
                stack.append(arcs[i])
                x = to[arcs[i]]
            if x != t:
                break
            c = min(cap[a] for a in stack)
            for a in stack:
                cap[a] -= c
                cap[a ^ 1] += c

    flow = np.array([base[e] + (orig[2 * e] - cap[2 * e]) for e in range(m)], dtype=np.float64)
    inflow = g.demand_of(flow)[t] if m else 0.0
    return flow, int(round(inflow))


def edmonds_karp(g: Graph) -> tuple[np.ndarray, int]:
    """Shortest-augmenting-path max flow (BFS), written independently of Dinic."""
    # residual network as a dict of arc records keyed by (edge, direction)
    residual: dict[tuple[int, int], int] = {}
    nbrs: dict[int, list[tuple[int, tuple[int, int]]]] = {v: [] for v in range(g.n)}
    for e, (u, v, up, um) in enumerate(zip(g.tail.tolist(), g.head.tolist(),
                                            g.u_plus.tolist(), g.u_minus.tolist())):
        residual[(e, 1)] = _as_int(up, "capacity")
        residual[(e, -1)] = _as_int(um, "capacity")
        nbrs[u].append((v, (e, 1)))
        nbrs[v].append((u, (e, -1)))
    flow = np.zeros(g.m)
    s, t = g.source, g.sink
    value = 0
    while True:
        parent: dict[int, tuple[int, tuple[int, int]] | None] = {s: None}
        q = deque([s])
        while q and t not in parent:
            x = q.popleft()
            for y, key in nbrs[x]:
                if residual[key] > 0 and y not in parent:
                    parent[y] = (x, key)
                    q.append(y)
        if t not in parent:
            return flow, value
        path = []
        y = t
        while parent[y] is not None:
            x, key = parent[y]
            path.append(key)
            y = x
        c = min(residual[key] for key in path)
        for e, sgn in path:
            residual[(e, sgn)] -= c
            residual[(e, -sgn)] += c
            flow[e] += sgn * c
        value += c


def round_to_integral(g: Graph, f: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    """Round a feasible real ab-flow to an integral one of value >= floor(t).

    The flow plus a virtual sink-to-source edge is a circulation.  While some
    edge has a fractional value, a cycle of fractional edges exists (every
    vertex touching one touches two); pushing around it until one edge hits
    an integer keeps every edge within its integer rounding interval.
    """
    f = np.clip(np.asarray(f, dtype=np.float64), -g.u_minus, g.u_plus).copy()
    if not g.has_integer_capacities:
        raise ValueError("rounding needs integral capacities")
    t = g.demand_of(f)[g.sink]
    m = g.m
    vals = np.append(f, t)
    tails = np.append(g.tail, g.sink)
    heads = np.append(g.head, g.source)
    lo_all = np.append(-g.u_minus, -np.inf)
    hi_all = np.append(g.u_plus, np.inf)

    def frac(x: float) -> bool:
        return abs(x - round(x)) > tol

    fractional = {e for e in range(m + 1) if frac(vals[e])}
    while fractional:
        cyc = _find_cycle(fractional, tails, heads)
        if cyc is None:
            break  # leftovers are numerical noise at tree-like vertices
        # orientation signs: +1 if the walk follows the edge direction
        room_up = min(
            (np.floor(vals[e]) + 1 - vals[e]) if sgn > 0 else (vals[e] - np.ceil(vals[e]) + 1)
            for e, sgn in cyc)
        room_dn = min(
            (vals[e] - np.floor(vals[e])) if sgn > 0 else (np.ceil(vals[e]) - vals[e])
            for e, sgn in cyc)
        eps = room_up if room_up <= room_dn else -room_dn
        for e, sgn in cyc:
            vals[e] += sgn * eps
            r = round(vals[e])
            if abs(vals[e] - r) <= tol:
                vals[e] = r
                fractional.discard(e)
    out = np.rint(vals[:m])
    out = np.clip(out, lo_all[:m], hi_all[:m])
    return out


def _find_cycle(edges: set[int], tails: np.ndarray, heads: np.ndarray):
    """A cycle in the undirected multigraph on ``edges`` as (edge, sign) pairs."""
    adj: dict[int, list[tuple[int, int, int]]] = {}
    for e in edges:
        u, v = int(tails[e]), int(heads[e])
        adj.setdefault(u, []).append((v, e, 1))
        adj.setdefault(v, []).append((u, e, -1))
    seen: dict[int, tuple[int, int, int] | None] = {}
    for root in adj:
        if root in seen:
            continue
        seen[root] = None
        stack = [(root, iter(adj[root]))]
        depth = {root: 0}
        while stack:
            x, it = stack[-1]
            advanced = False
            for y, e, sgn in it:
                par = seen[x]
                if par is not None and par[1] == e:
                    continue
                if y in seen:
                    if depth.get(y, -1) < 0 or y not in depth:
                        continue
                    # back edge x -> y closes a cycle y ~> x -> y
                    cyc = [(e, sgn)]
                    z = x
                    while z != y:
                        p, pe, psgn = seen[z]
                        cyc.append((pe, psgn))
                        z = p
                    cyc.reverse()
                    return [(pe, s) for pe, s in cyc]
                seen[y] = (x, e, sgn)
                depth[y] = depth[x] + 1
                stack.append((y, iter(adj[y])))
                advanced = True
                break
            if not advanced:
                stack.pop()
                depth[x] = -1
    return None
