"""Seeded graph families for tests and benchmarks.

Every generator takes a ``numpy.random.Generator`` so a single seed drives
a whole benchmark.
"""

from __future__ import annotations

import numpy as np

from .graph import Graph, directed_graph, undirected_graph

FAMILIES = ("random", "bipartite", "path", "star")


def random_directed(rng: np.random.Generator, n: int, m: int, U: int) -> Graph:
    """``m`` random arcs on ``n`` vertices (no self-loops), capacities in ``[1, U]``.

    A source-to-sink path of random intermediate vertices is planted first so
    most instances have positive flow value.
    """
    if n < 2:
        raise ValueError("need at least two vertices")
    arcs: list[tuple[int, int, int]] = []
    s, t = 0, n - 1
    hops = min(int(rng.integers(1, 4)), n - 1, m)
    inner = rng.permutation(np.arange(1, n - 1))[: hops - 1].tolist()
    chain = [s] + inner + [t]
    for u, v in zip(chain[:-1], chain[1:]):
        arcs.append((u, v, int(rng.integers(1, U + 1))))
    while len(arcs) < m:
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u != v:
            arcs.append((u, v, int(rng.integers(1, U + 1))))
    order = rng.permutation(len(arcs))
    return directed_graph(n, [arcs[i] for i in order], s, t)


def random_undirected(rng: np.random.Generator, n: int, m: int, U: int) -> Graph:
    g = random_directed(rng, n, m, U)
    return undirected_graph(n, zip(g.tail.tolist(), g.head.tolist(), g.u_plus.tolist()),
                            g.source, g.sink)


def bipartite_matching(rng: np.random.Generator, k: int, m: int) -> Graph:
    """Unit-capacity matching gadget: source, ``k`` left, ``k`` right, sink."""
    s, t = 0, 2 * k + 1
    arcs = [(s, 1 + i, 1) for i in range(k)] + [(1 + k + j, t, 1) for j in range(k)]
    pairs = {(int(i), int(j)) for i, j in zip(rng.integers(0, k, m), rng.integers(0, k, m))}
    arcs += [(1 + i, 1 + k + j, 1) for i, j in sorted(pairs)]
    return directed_graph(2 * k + 2, arcs, s, t)


def path_graph(rng: np.random.Generator, m: int, U: int) -> Graph:
    """Path with ``m`` arcs and random capacities; the value is the minimum."""
    caps = rng.integers(1, U + 1, size=m)
    return directed_graph(m + 1, [(i, i + 1, int(c)) for i, c in enumerate(caps)], 0, m)


def star_graph(rng: np.random.Generator, m: int, U: int) -> Graph:
    """Source and sink joined through ``m // 2`` middle vertices."""
    k = max(1, m // 2)
    arcs = []
    for i in range(k):
        arcs.append((0, 2 + i, int(rng.integers(1, U + 1))))
        arcs.append((2 + i, 1, int(rng.integers(1, U + 1))))
    return directed_graph(k + 2, arcs, 0, 1)


def family_instance(family: str, rng: np.random.Generator, m: int, U: int = 1) -> Graph:
    """An instance of roughly ``m`` arcs from the named family."""
    if family == "random":
        n = max(4, int(round(2 * np.sqrt(m))))
        return random_directed(rng, n, m, U)
    if family == "bipartite":
        k = max(2, int(round(np.sqrt(m))))
        return bipartite_matching(rng, k, max(m - 2 * k, 1))
    if family == "path":
        return path_graph(rng, m, U)
    if family == "star":
        return star_graph(rng, m, U)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
