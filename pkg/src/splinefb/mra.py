"""Multi-resolution pyramids over Kron-reduced graphs, with hard-threshold
denoising on top."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .design import DesignConfig, FilterDesign, build_filters, design, validate_response
from .filterbank import ChannelOutputs, Filterbank, analyze, assemble, reconstruct
from .graph import Graph, GraphError, is_connected, normalize
from .sampling import SamplingPattern, partition_search
from .spectral import eigendecompose

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-12


class LevelError(RuntimeError):
    def __init__(self, level, cause):
        super().__init__(f"level {level}: {cause}")
        self.level = level
        self.cause = cause


def laplacian(g: Graph) -> np.ndarray:
    return np.diag(g.degrees) - g.weights


def kron_reduce(g: Graph, keep) -> Graph:
    """Schur complement of the Laplacian onto ``keep``; off-diagonal weights
    below 1e-12 are dropped."""
    keep = np.unique(np.asarray(keep, dtype=int))
    if keep.size == 0:
        raise ValueError("keep set is empty")
    if keep.size == g.n:
        return g
    drop = np.setdiff1d(np.arange(g.n), keep)
    lap = laplacian(g)
    l_aa = lap[np.ix_(keep, keep)]
    l_ab = lap[np.ix_(keep, drop)]
    l_bb = lap[np.ix_(drop, drop)]
    try:
        lu = linalg.lu_factor(l_bb, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise GraphError(f"L(B,B) is singular: {exc}") from exc
    if np.any(np.abs(np.diag(lu[0])) < 1e-14 * np.abs(l_bb).max()):
        raise GraphError("L(B,B) is singular")
    red = l_aa - l_ab @ linalg.lu_solve(lu, l_ab.T)
    w = -red
    np.fill_diagonal(w, 0.0)
    w = 0.5 * (w + w.T)
    w[w < CLAMP_TOL] = 0.0
    if keep.size > 1 and not is_connected(w):
        raise GraphError("Kron-reduced graph is disconnected after clamping")
    coords = None if g.coords is None else g.coords[keep]
    return Graph(w, coords=coords)


@dataclass(eq=False)
class Level:
    graph: Graph
    vertices: np.ndarray  # original vertex ids of this level's graph
    design: FilterDesign
    bank: Filterbank
    pattern: SamplingPattern
    x: np.ndarray  # input signal of this level
    y_low: np.ndarray
    y_high: np.ndarray

    @property
    def kept_vertices(self) -> np.ndarray:
        return self.vertices[self.pattern.set_a]


@dataclass(eq=False)
class Pyramid:
    levels: list = field(default_factory=list)
    coarse_graph: Graph | None = None

    @property
    def depth(self) -> int:
        return len(self.levels)


def min_level_size(cfg: DesignConfig) -> int:
    return max(4, cfg.r + cfg.s + 2)


def decompose(g: Graph, x, depth: int, cfg: DesignConfig, zero_dc: bool = True,
              strategy: str = "polarity", seed=0) -> Pyramid:
    """Recursive two-channel decomposition of the lowpass branch.

    Stops early once the coarse graph is smaller than ``max(4, r + s + 2)``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    x = np.asarray(x, dtype=float)
    if x.shape[0] != g.n:
        raise ValueError("signal length does not match graph size")
    pyr = Pyramid()
    graph, signal, vertices = g, x, np.arange(g.n)
    for level in range(depth):
        if level > 0 and graph.n < min_level_size(cfg):
            log.info("stopping at level %d: %d vertices below floor", level, graph.n)
            break
        try:
            ng = normalize(graph)
            sd = eigendecompose(ng)
            fd = design(sd, cfg)
            report = validate_response(fd.gamma, fd.r_eff, fd.s_eff)
            if not report:
                raise ValueError(f"designed response violates the invertibility conditions: {report.violations[:3]}")
            pair = build_filters(ng, sd, fd)
            pattern = partition_search(sd, fd.r_eff, fd.s_eff, strategy, seed)
            bank = assemble(pair, pattern, zero_dc=zero_dc, deg=ng.deg)
        except (ValueError, RuntimeError) as exc:
            raise LevelError(level, exc) from exc
        ch = analyze(bank, signal)
        pyr.levels.append(Level(graph, vertices, fd, bank, pattern, signal, ch.y_low, ch.y_high))
        vertices = vertices[pattern.set_a]
        signal = ch.y_low
        try:
            graph = kron_reduce(graph, pattern.set_a)
        except GraphError as exc:
            raise LevelError(level, exc) from exc
    pyr.coarse_graph = graph
    return pyr


def reconstruct_pyramid(p: Pyramid, mode: str = "full", high=None) -> np.ndarray:
    """Invert the pyramid from the coarsest level up.

    ``mode="lp_only"`` zeroes every highpass channel; ``high`` optionally
    overrides the stored highpass coefficients per level.
    """
    if mode not in ("full", "lp_only"):
        raise ValueError(f"unknown mode {mode!r}")
    if not p.levels:
        raise ValueError("empty pyramid")
    signal = p.levels[-1].y_low
    for k in range(p.depth - 1, -1, -1):
        lev = p.levels[k]
        if mode == "lp_only":
            yh = np.zeros_like(lev.y_high)
        else:
            yh = lev.y_high if high is None else np.asarray(high[k], dtype=float)
        signal = reconstruct(lev.bank, ChannelOutputs(signal, yh))
    return signal


def hard_threshold(c, t: float) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.where(np.abs(c) <= t, 0.0, c)


def denoise(g: Graph, x_noisy, sigma: float, depth: int, cfg: DesignConfig,
            zero_dc: bool = True, pyramid: Pyramid | None = None) -> np.ndarray:
    """Zero highpass coefficients with magnitude at most 3 sigma at every
    level, keep all lowpass outputs, and reconstruct."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    p = pyramid if pyramid is not None else decompose(g, x_noisy, depth, cfg, zero_dc=zero_dc)
    t = 3.0 * sigma
    return reconstruct_pyramid(p, "full", high=[hard_threshold(lev.y_high, t) for lev in p.levels])


def relative_error(y, x_ref) -> float:
    y = np.asarray(y, dtype=float)
    x_ref = np.asarray(x_ref, dtype=float)
    if y.shape != x_ref.shape:
        raise ValueError("length mismatch")
    nrm = np.linalg.norm(x_ref)
    if nrm == 0:
        raise ValueError("reference signal has zero norm")
    return float(np.linalg.norm(y - x_ref) / nrm)


def level_errors(p: Pyramid, x) -> list[float]:
    """Relative error of each level's lowpass output against the original
    signal restricted to the vertices that level keeps."""
    x = np.asarray(x, dtype=float)
    return [relative_error(lev.y_low, x[lev.kept_vertices]) for lev in p.levels]


# -- synthetic signals -------------------------------------------------------


def piecewise_constant(n: int) -> np.ndarray:
    x = np.zeros(n)
    x[: n // 2] = 1.0
    return x


def linear_in_x(g: Graph) -> np.ndarray:
    if g.coords is None:
        raise ValueError("graph has no coordinates")
    return g.coords[:, 0].copy()


def low_frequency_mix(g: Graph, k: int = 3) -> np.ndarray:
    """Sum of the ``k`` lowest-frequency vectors D^{-1/2} u_i, rescaled to
    [0, 1].  These are the vectors a zero-DC highpass channel suppresses; on
    regular graphs they are the Fourier basis vectors themselves."""
    sd = eigendecompose(normalize(g))
    x = (sd.u[:, :k] / np.sqrt(g.degrees)[:, None]).sum(axis=1)
    x = x - x.min()
    top = x.max()
    return x / top if top > 0 else np.ones(g.n)


def synthetic_signal(g: Graph, kind: str | None = None) -> np.ndarray:
    """Default test signal: ``"ring"`` gives half ones, ``"smooth"`` the
    low-frequency mix; otherwise linear in the x-coordinate when
    coordinates exist, else the low-frequency mix."""
    if kind == "ring":
        return piecewise_constant(g.n)
    if kind == "smooth" or g.coords is None:
        return low_frequency_mix(g)
    return linear_in_x(g)
