"""Weighted undirected graphs with edge-list I/O and random generators, plus
the symmetric normalized adjacency."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GraphError(ValueError):
    """Raised for malformed input or graphs violating the invariants."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Connected weighted undirected graph without self-loops.

    A single isolated vertex is accepted as the trivial graph so that
    coarsening can terminate on it; every other graph must be connected
    with positive degrees.
    """

    weights: np.ndarray
    labels: tuple | None = None
    coords: np.ndarray | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1] or w.shape[0] == 0:
            raise GraphError(f"weights must be a non-empty square matrix, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise GraphError("weights contain non-finite entries")
        if np.any(w < 0):
            i, j = np.argwhere(w < 0)[0]
            raise GraphError(f"negative weight between vertices {i} and {j}")
        if np.any(np.diag(w) != 0):
            i = int(np.flatnonzero(np.diag(w))[0])
            raise GraphError(f"self-loop at vertex {i}")
        if not np.array_equal(w, w.T):
            i, j = np.argwhere(w != w.T)[0]
            raise GraphError(f"weights not symmetric at ({i}, {j})")
        n = w.shape[0]
        if n > 1:
            deg = w.sum(axis=1)
            if np.any(deg <= 0):
                raise GraphError(f"vertex {int(np.flatnonzero(deg <= 0)[0])} is isolated")
            unreached = _unreached(w)
            if unreached:
                raise GraphError(f"graph is disconnected: vertex {unreached[0]} unreachable from vertex 0")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.coords is not None:
            c = np.array(self.coords, dtype=float)
            if c.shape != (n, 2):
                raise GraphError(f"coords must have shape ({n}, 2), got {c.shape}")
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)
        if self.labels is not None:
            if len(self.labels) != n:
                raise GraphError("labels length does not match vertex count")
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def edges(self):
        """Yield (u, v, w) with u < v for every edge."""
        iu, ju = np.nonzero(np.triu(self.weights, 1))
        for i, j in zip(iu, ju):
            yield int(i), int(j), float(self.weights[i, j])

    def hop_distances(self) -> np.ndarray:
        """All-pairs shortest-path hop counts (BFS, unweighted)."""
        n = self.n
        nbrs = [np.flatnonzero(self.weights[i]) for i in range(n)]
        dist = np.full((n, n), -1, dtype=int)
        for s in range(n):
            dist[s, s] = 0
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for v in nbrs[u]:
                    if dist[s, v] < 0:
                        dist[s, v] = dist[s, u] + 1
                        queue.append(v)
        return dist

    def two_coloring(self) -> np.ndarray | None:
        """Return a 0/1 color per vertex, or None if an odd cycle exists.

        Vertex 0 always gets color 0.
        """
        n = self.n
        color = np.full(n, -1, dtype=int)
        color[0] = 0
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in np.flatnonzero(self.weights[u]):
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    queue.append(v)
                elif color[v] == color[u]:
                    return None
        return color

    def is_bipartite(self) -> bool:
        return self.two_coloring() is not None


def _unreached(w: np.ndarray) -> list[int]:
    n = w.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(w[u]):
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return [int(i) for i in np.flatnonzero(~seen)]


def is_connected(w: np.ndarray) -> bool:
    return not _unreached(np.asarray(w))


def from_edges(n: int, edges, coords=None) -> Graph:
    w = np.zeros((n, n))
    for u, v, wt in edges:
        w[u, v] = w[v, u] = wt
    return Graph(w, coords=coords)


# -- ingestion -------------------------------------------------------------


def load_graph(path, coords_path=None) -> Graph:
    """Read a tab/whitespace separated edge list ``u v [w]``.

    Vertex ids are 0-based and each undirected edge is listed once. Lines
    starting with ``#`` and blank lines are skipped.
    """
    path = Path(path)
    if not path.exists():
        raise GraphError(f"{path}: no such file")
    edges = []
    n = 0
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphError(f"{path}:{lineno}: expected 'u v [w]', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
            wt = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise GraphError(f"{path}:{lineno}: cannot parse {raw!r}") from None
        if u < 0 or v < 0:
            raise GraphError(f"{path}:{lineno}: negative vertex id")
        if u == v:
            raise GraphError(f"{path}:{lineno}: self-loop at vertex {u}")
        if wt < 0 or not np.isfinite(wt):
            raise GraphError(f"{path}:{lineno}: invalid weight {wt}")
        edges.append((u, v, wt))
        n = max(n, u + 1, v + 1)
    if not edges:
        raise GraphError(f"{path}: no edges")
    coords = None
    if coords_path is not None:
        coords = np.loadtxt(coords_path, ndmin=2)
    try:
        return from_edges(n, edges, coords=coords)
    except GraphError as exc:
        raise GraphError(f"{path}: {exc}") from None


def save_graph(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={g.n}\n")
        for u, v, wt in g.edges():
            fh.write(f"{u}\t{v}\t{wt!r}\n")


# -- generators ------------------------------------------------------------

MAX_RETRIES = 50


def ring(n: int) -> Graph:
    if n < 3:
        if n == 2:
            return path_graph(2)
        raise GraphError("ring needs n >= 2")
    theta = 2 * np.pi * np.arange(n) / n
    return from_edges(n, [(i, (i + 1) % n, 1.0) for i in range(n)],
                      coords=np.column_stack([np.cos(theta), np.sin(theta)]))


def path_graph(n: int) -> Graph:
    if n < 2:
        raise GraphError("path needs n >= 2")
    return from_edges(n, [(i, i + 1, 1.0) for i in range(n - 1)],
                      coords=np.column_stack([np.arange(n, dtype=float), np.zeros(n)]))


def comet(n: int, head: int | None = None) -> Graph:
    """Star with ``head`` leaves hanging off the first vertex of a path tail.

    Tail vertices are 0..n-head-1 (vertex 0 is the hub), leaves follow.
    """
    if head is None:
        head = n // 4
    tail = n - head
    if head < 1 or tail < 1:
        raise GraphError(f"comet needs 1 <= head < n, got head={head}, n={n}")
    edges = [(i, i + 1, 1.0) for i in range(tail - 1)]
    edges += [(0, tail + k, 1.0) for k in range(head)]
    # layout fits the unit box: tail along y = 0.5, leaves on a circle round the hub
    angles = 2 * np.pi * np.arange(head) / head
    coords = np.vstack([
        np.column_stack([0.25 + 0.75 * np.arange(tail) / max(tail - 1, 1), np.full(tail, 0.5)]),
        np.column_stack([0.25 - 0.2 * np.cos(angles), 0.5 + 0.2 * np.sin(angles)]),
    ])
    return from_edges(n, edges, coords=coords)


def default_sensor_radius(n: int) -> float:
    # slightly above the connectivity threshold; mean degree about 8 at n=512
    return 1.2 * np.sqrt(np.log(n) / (np.pi * n))


def random_sensor(n: int, radius: float | None = None, seed: int = 0) -> Graph:
    """Random geometric graph on the unit square with Gaussian-kernel weights.

    Points are redrawn (up to ``MAX_RETRIES`` times) until connected.
    """
    if n < 2:
        raise GraphError("random_sensor needs n >= 2")
    if radius is None:
        radius = default_sensor_radius(n)
    if radius <= 0:
        raise GraphError("radius must be positive")
    sigma = radius / 2
    rng = np.random.default_rng(seed)
    for _ in range(MAX_RETRIES):
        pts = rng.uniform(size=(n, 2))
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        w = np.exp(-d2 / (2 * sigma**2))
        w[d2 > radius**2] = 0.0
        np.fill_diagonal(w, 0.0)
        w = np.maximum(w, w.T)
        if is_connected(w):
            return Graph(w, coords=pts)
    raise GraphError(f"no connected sensor graph after {MAX_RETRIES} draws (n={n}, radius={radius})")


def random_bipartite(n_a: int, n_b: int, p: float = 0.3, seed: int = 0) -> Graph:
    """Random bipartite graph with unit weights; part A is 0..n_a-1."""
    if n_a < 1 or n_b < 1 or not 0 < p <= 1:
        raise GraphError("random_bipartite needs part sizes >= 1 and 0 < p <= 1")
    rng = np.random.default_rng(seed)
    n = n_a + n_b
    for _ in range(MAX_RETRIES):
        block = (rng.uniform(size=(n_a, n_b)) < p).astype(float)
        w = np.zeros((n, n))
        w[:n_a, n_a:] = block
        w[n_a:, :n_a] = block.T
        if is_connected(w):
            coords = np.column_stack([
                np.r_[np.zeros(n_a), np.ones(n_b)],
                np.r_[np.linspace(0, 1, n_a), np.linspace(0, 1, n_b)],
            ])
            return Graph(w, coords=coords)
    raise GraphError(f"no connected bipartite graph after {MAX_RETRIES} draws")


GENERATORS = ("ring", "path", "comet", "random_sensor", "random_bipartite")


def generate_graph(kind: str, seed: int = 0, **params) -> Graph:
    if kind == "ring":
        return ring(int(params["n"]))
    if kind == "path":
        return path_graph(int(params["n"]))
    if kind == "comet":
        return comet(int(params["n"]), params.get("head"))
    if kind == "random_sensor":
        return random_sensor(int(params["n"]), params.get("radius"), seed=seed)
    if kind == "random_bipartite":
        return random_bipartite(int(params["n_a"]), int(params["n_b"]), params.get("p", 0.3), seed=seed)
    raise GraphError(f"unknown graph kind {kind!r}; expected one of {GENERATORS}")


# -- normalization ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NormalizedGraph:
    graph: Graph
    deg: np.ndarray = field(repr=False)
    a_sym: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.graph.n


def normalize(g: Graph) -> NormalizedGraph:
    """Symmetric normalized adjacency D^-1/2 W D^-1/2."""
    if g.n < 2:
        raise GraphError("cannot normalize a single-vertex graph")
    deg = g.degrees
    s = 1.0 / np.sqrt(deg)
    a = s[:, None] * g.weights * s[None, :]
    a = 0.5 * (a + a.T)
    deg.setflags(write=False)
    a.setflags(write=False)
    return NormalizedGraph(g, deg, a)
