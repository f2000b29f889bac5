import numpy as np
import pytest

from splinefb.graph import from_edges, path_graph, ring


@pytest.fixture
def k2():
    return from_edges(2, [(0, 1, 1.0)])


@pytest.fixture
def p3():
    return path_graph(3)


@pytest.fixture
def c4():
    return ring(4)


@pytest.fixture
def c3():
    return from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])


def bfs_reachable(n, edges, start=0):
    """Independent connectivity oracle working on a plain edge list."""
    adj = {i: set() for i in range(n)}
    for u, v, *_ in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen, frontier = {start}, [start]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u] - seen:
                seen.add(v)
                nxt.append(v)
        frontier = nxt
    return seen


def unit_signals(rng, n, count):
    x = rng.standard_normal((count, n))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
