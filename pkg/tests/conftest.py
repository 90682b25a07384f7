import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ipmflow.graph import Graph, directed_graph, undirected_graph

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("default")


def random_arcs(rng: np.random.Generator, n: int, m: int, U: int) -> list[tuple[int, int, int]]:
    arcs = []
    while len(arcs) < m:
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u != v:
            arcs.append((u, v, int(rng.integers(1, U + 1))))
    return arcs


def random_digraph(rng: np.random.Generator, n: int | None = None, m: int | None = None,
                   U: int = 8) -> Graph:
    n = n if n is not None else int(rng.integers(3, 12))
    m = m if m is not None else int(rng.integers(n, 3 * n))
    return directed_graph(n, random_arcs(rng, n, m, U), 0, n - 1)


def random_ugraph(rng: np.random.Generator, n: int | None = None, m: int | None = None,
                  U: int = 8) -> Graph:
    n = n if n is not None else int(rng.integers(3, 12))
    m = m if m is not None else int(rng.integers(n, 3 * n))
    return undirected_graph(n, random_arcs(rng, n, m, U), 0, n - 1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def preconditioned(rng: np.random.Generator, n: int = 8, m: int = 16, U: int = 4) -> Graph:
    from ipmflow.graph import precondition, strip_zero_capacity

    g = random_ugraph(rng, n=n, m=m, U=U)
    return precondition(strip_zero_capacity(g)[0])


def path_points(g: Graph, steps: int):
    """Centered points along the basic path-following run on ``g``."""
    from ipmflow.central_path import IPMPoint
    from ipmflow.driver import Config, basic_progress
    from ipmflow.steps import center_fully

    cfg = Config(method="basic-ipm")
    point = IPMPoint.initial(g)
    out = [point]
    for _ in range(steps):
        point = center_fully(g, basic_progress(g, point, cfg).point)
        out.append(point)
    return out


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def report_criterion(number: int, ok: bool, detail: str) -> bool:
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
