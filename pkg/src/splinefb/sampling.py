"""Vertex partitions {A, B} for critically sampled banks.

``A`` keeps the lowpass sample, ``B`` the highpass one.  A partition is
admissible when U(A, first r columns) and U(B, last s columns) both have full
column rank.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graph import Graph, normalize
from .spectral import SpectralDecomposition, eigendecompose

PIVOT_TOL = 1e-10
RANK_TOL = 1e-8
SINGULAR_TOL = 1e-12
STRATEGIES = ("polarity", "random")


class RankDeficiencyError(ValueError):
    def __init__(self, message, stage):
        super().__init__(message)
        self.stage = stage


class NotBipartiteError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SamplingPattern:
    set_a: np.ndarray
    set_b: np.ndarray
    n: int

    def __post_init__(self):
        a = np.unique(np.asarray(self.set_a, dtype=int))
        b = np.unique(np.asarray(self.set_b, dtype=int))
        if np.intersect1d(a, b).size:
            raise ValueError("sets A and B overlap")
        if a.size + b.size != self.n or (a.size and a.max() >= self.n) or (b.size and b.max() >= self.n):
            raise ValueError("sets A and B do not partition the vertex set")
        object.__setattr__(self, "set_a", a)
        object.__setattr__(self, "set_b", b)

    @classmethod
    def from_k(cls, k_diag) -> "SamplingPattern":
        k = np.asarray(k_diag)
        return cls(np.flatnonzero(k > 0), np.flatnonzero(k < 0), k.shape[0])

    @property
    def k_diag(self) -> np.ndarray:
        k = np.ones(self.n)
        k[self.set_b] = -1.0
        return k

    @property
    def mask_a(self) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[self.set_a] = True
        return m

    def to_json(self) -> str:
        return json.dumps({"A": self.set_a.tolist(), "B": self.set_b.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "SamplingPattern":
        d = json.loads(text)
        return cls(d["A"], d["B"], len(d["A"]) + len(d["B"]))


def independent_rows(m: np.ndarray, k: int, tol: float = PIVOT_TOL) -> list[int]:
    """Indices of the first ``k`` linearly independent rows of ``m``.

    Row echelon form of ``m.T``: columns of ``m.T`` (rows of ``m``) are
    scanned in order; a column becomes a pivot when its largest remaining
    entry exceeds ``tol`` times the largest entry of the remaining block
    (and of the input, so that round-off left after elimination never
    qualifies).
    """
    work = np.array(m, dtype=float).T  # k x rows
    nrows, ncols = work.shape
    floor = np.abs(work).max() if work.size else 0.0
    pivots = []
    prow = 0
    for col in range(ncols):
        if prow == nrows or len(pivots) == k:
            break
        block = work[prow:, col:]
        scale = max(np.abs(block).max(), floor)
        if scale == 0:
            break
        piv = prow + int(np.argmax(np.abs(work[prow:, col])))
        if abs(work[piv, col]) <= tol * scale:
            continue
        work[[prow, piv]] = work[[piv, prow]]
        below = work[prow + 1:, col] / work[prow, col]
        work[prow + 1:] -= np.outer(below, work[prow])
        pivots.append(col)
        prow += 1
    return pivots


def min_singular(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False).min()) if m.shape[0] >= m.shape[1] else 0.0


def rank_conditions(sd: SpectralDecomposition, pattern: SamplingPattern, r: int, s: int) -> tuple[float, float]:
    """Smallest singular values of U(A, I_r) and U(B, I_s)."""
    u = sd.u
    return (min_singular(u[np.ix_(pattern.set_a, np.arange(r))]),
            min_singular(u[np.ix_(pattern.set_b, np.arange(sd.n - s, sd.n))]))


def polarity_assign(u_last, rest) -> tuple[list[int], list[int]]:
    """Negative entries of the highest-frequency eigenvector go to B, the rest to A."""
    u_last = np.asarray(u_last)
    to_a = [int(i) for i in rest if u_last[i] >= 0]
    to_b = [int(i) for i in rest if u_last[i] < 0]
    return to_a, to_b


def random_assign(rest, rng: np.random.Generator) -> tuple[list[int], list[int]]:
    """Random split whose halves differ in size by at most one."""
    rest = np.asarray(sorted(rest), dtype=int)
    perm = rng.permutation(rest)
    half = (perm.size + 1) // 2
    return sorted(int(i) for i in perm[:half]), sorted(int(i) for i in perm[half:])


def partition_search(sd: SpectralDecomposition, r: int, s: int, strategy: str = "polarity",
                     seed: int | np.random.Generator | None = 0) -> SamplingPattern:
    """Pick r independent rows of the low-frequency block for A, then s
    independent rows of the high-frequency block among the remaining vertices
    for B, and distribute the rest by ``strategy``."""
    n = sd.n
    if r < 1 or s < 1:
        raise ValueError("r and s must be >= 1")
    if r + s > n:
        raise RankDeficiencyError(f"r + s = {r + s} exceeds n = {n}", stage="size")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    u = sd.u
    u_last = u[:, -1]
    # polarity scans its own side first so the pivots rarely break the sign split
    order_a = np.arange(n)
    if strategy == "polarity":
        order_a = np.r_[np.flatnonzero(u_last >= 0), np.flatnonzero(u_last < 0)]
    a = [int(order_a[i]) for i in independent_rows(u[order_a, :r], r)]
    if len(a) < r:
        raise RankDeficiencyError(f"U(:, I_r) has rank {len(a)} < r = {r}", stage="lowpass")
    remaining = np.setdiff1d(np.arange(n), a)
    if strategy == "polarity":
        remaining = np.r_[remaining[u_last[remaining] < 0], remaining[u_last[remaining] >= 0]]
    sub = u[np.ix_(remaining, np.arange(n - s, n))]
    if min_singular(sub) <= RANK_TOL:
        raise RankDeficiencyError(
            f"U(V\\A, I_s) is not full column rank (s = {s}); reset r and s", stage="highpass")
    b = [int(remaining[i]) for i in independent_rows(sub, s)]
    if len(b) < s:
        raise RankDeficiencyError(f"only {len(b)} independent rows for s = {s}", stage="highpass")
    rest = np.setdiff1d(remaining, b)
    if strategy == "polarity":
        to_a, to_b = polarity_assign(u_last, rest)
    else:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        to_a, to_b = random_assign(rest, rng)
    pattern = SamplingPattern(np.r_[a, to_a], np.r_[b, to_b], n)
    sa, sb = rank_conditions(sd, pattern, r, s)
    if sa <= RANK_TOL or sb <= RANK_TOL:
        raise RankDeficiencyError(
            f"rank check failed after assignment (sigma_min {sa:.2e}, {sb:.2e})", stage="final")
    return pattern


def bipartite_natural_partition(g: Graph, sd: SpectralDecomposition | None = None,
                                r: int | None = None, s: int | None = None):
    """Two color classes of a bipartite graph and the largest admissible r = s.

    When ``r``/``s`` are given, the rank conditions are verified for them.
    """
    color = g.two_coloring()
    if color is None:
        raise NotBipartiteError("graph has an odd cycle; no natural bipartition")
    pattern = SamplingPattern(np.flatnonzero(color == 0), np.flatnonzero(color == 1), g.n)
    ng = normalize(g)
    rank = int(np.linalg.matrix_rank(np.asarray(ng.a_sym), tol=1e-10))
    max_rs = rank // 2
    if r is not None or s is not None:
        r = r or 1
        s = s or 1
        if sd is None:
            sd = eigendecompose(ng)
        sa, sb = rank_conditions(sd, pattern, r, s)
        if sa <= RANK_TOL or sb <= RANK_TOL:
            raise RankDeficiencyError(
                f"natural bipartition fails the rank conditions for r={r}, s={s} (max_rs={max_rs})",
                stage="bipartite")
    return pattern, max_rs


def sigma_min_diagnostic(k_diag, g_mat) -> tuple[float, float]:
    """Smallest singular value of I + KG and the LP-only error multiplier 2/sigma."""
    k = np.asarray(k_diag, dtype=float)
    g = np.asarray(g_mat, dtype=float)
    if g.shape != (k.shape[0], k.shape[0]):
        raise ValueError("shape mismatch between K and G")
    m = np.eye(k.shape[0]) + k[:, None] * g
    smin = float(np.linalg.svd(m, compute_uv=False).min())
    bound = np.inf if smin <= SINGULAR_TOL else 2.0 / smin
    return smin, bound
