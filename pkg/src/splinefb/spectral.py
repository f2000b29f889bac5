"""Graph Fourier basis of the normalized adjacency and the deduplicated
Vandermonde systems that filter design works on."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .graph import NormalizedGraph

DEDUP_TOL = 1e-8


class SpectralError(ValueError):
    pass


class InfeasibleHyperparameters(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Columns of ``u`` are Laplacian eigenvectors, ``lam`` ascending and
    ``xi = 1 - lam`` the matching adjacency eigenvalues (descending)."""

    u: np.ndarray
    lam: np.ndarray
    xi: np.ndarray

    @property
    def n(self) -> int:
        return self.u.shape[0]


def fix_signs(u: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip columns so the first entry with magnitude above ``tol`` is positive."""
    u = u.copy()
    for k in range(u.shape[1]):
        col = u[:, k]
        idx = np.flatnonzero(np.abs(col) > tol)
        if idx.size and col[idx[0]] < 0:
            u[:, k] = -col
    return u


def eigendecompose(ng: NormalizedGraph) -> SpectralDecomposition:
    a = np.asarray(ng.a_sym)
    try:
        xi, u = linalg.eigh(a)
    except linalg.LinAlgError as exc:
        raise SpectralError(
            f"eigensolver failed on {a.shape} matrix "
            f"(asymmetry {np.abs(a - a.T).max():.2e}, max |entry| {np.abs(a).max():.2e}): {exc}"
        ) from exc
    order = np.argsort(-xi, kind="stable")
    xi = xi[order]
    u = fix_signs(u[:, order])
    lam = 1.0 - xi
    # top eigenvalue is exactly 1 for a connected graph
    lam[0] = 0.0
    xi = 1.0 - lam
    for arr in (u, lam, xi):
        arr.setflags(write=False)
    return SpectralDecomposition(u, lam, xi)


def gft(sd: SpectralDecomposition, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != sd.n:
        raise ValueError(f"signal length {x.shape[0]} does not match graph size {sd.n}")
    return sd.u.T @ x


def igft(sd: SpectralDecomposition, xhat) -> np.ndarray:
    xhat = np.asarray(xhat, dtype=float)
    if xhat.shape[0] != sd.n:
        raise ValueError(f"spectrum length {xhat.shape[0]} does not match graph size {sd.n}")
    return sd.u @ xhat


@dataclass(frozen=True, eq=False)
class DedupedSpectrum:
    xi_unique: np.ndarray
    group_of: np.ndarray  # original index -> unique index

    @property
    def m(self) -> int:
        return self.xi_unique.shape[0]

    def expand(self, values) -> np.ndarray:
        """Map per-unique-value entries back to all original indices."""
        return np.asarray(values)[self.group_of]

    def count_leading(self, k: int) -> int:
        """Number of original indices falling in the first ``k`` unique groups."""
        return int(np.sum(self.group_of < k))

    def count_trailing(self, k: int) -> int:
        return int(np.sum(self.group_of >= self.m - k))


def dedup_values(xi, tol: float = DEDUP_TOL) -> DedupedSpectrum:
    """Merge a descending sequence into groups of values within ``tol`` of
    their neighbour; each group is represented by its mean."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    xi = np.asarray(xi, dtype=float)
    if np.any(np.diff(xi) > 0):
        raise ValueError("eigenvalues must be in descending order")
    group_of = np.zeros(xi.shape[0], dtype=int)
    g = 0
    for i in range(1, xi.shape[0]):
        if xi[i - 1] - xi[i] > tol:
            g += 1
        group_of[i] = g
    means = np.array([xi[group_of == k].mean() for k in range(g + 1)])
    return DedupedSpectrum(means, group_of)


def dedup_eigenvalues(sd: SpectralDecomposition, tol: float = DEDUP_TOL) -> DedupedSpectrum:
    return dedup_values(sd.xi, tol)


@dataclass(frozen=True, eq=False)
class VandermondeSystem:
    c: np.ndarray
    c0: np.ndarray
    r: int
    s: int

    @property
    def m(self) -> int:
        return self.c.shape[0]

    @property
    def J(self) -> int:
        return self.c.shape[1]

    @property
    def rows_r(self) -> np.ndarray:
        return np.arange(self.r)

    @property
    def rows_s(self) -> np.ndarray:
        return np.arange(self.m - self.s, self.m)

    @property
    def rows_m(self) -> np.ndarray:
        return np.arange(self.r, self.m - self.s)

    @property
    def c_r(self):
        return self.c[self.rows_r]

    @property
    def c_s(self):
        return self.c[self.rows_s]

    @property
    def c_m(self):
        return self.c[self.rows_m]


def vandermonde_matrix(x, J: int) -> np.ndarray:
    return np.vander(np.asarray(x, dtype=float), J, increasing=True)


def vandermonde(ds: DedupedSpectrum | np.ndarray, J: int, r: int, s: int) -> VandermondeSystem:
    xi = ds.xi_unique if isinstance(ds, DedupedSpectrum) else np.asarray(ds, dtype=float)
    m = xi.shape[0]
    if J < 2:
        raise InfeasibleHyperparameters(f"J must be >= 2, got {J}")
    if r < 1 or s < 1:
        raise InfeasibleHyperparameters(f"r and s must be >= 1, got r={r}, s={s}")
    if r + s > m:
        raise InfeasibleHyperparameters(
            f"r + s = {r + s} exceeds the number of distinct eigenvalues m = {m}")
    c = vandermonde_matrix(xi, J)
    c0 = np.zeros_like(c)
    c0[:, 1:] = c[:, :-1]
    return VandermondeSystem(c, c0, r, s)
