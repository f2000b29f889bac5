"""Polynomial analysis-filter design.

The analysis filters are ``H_L = (I + G)/2`` and ``H_H = (I - G)/2`` with
``G = sum_l w_l A^(l-1)``.  Weights come from a closed-form feasible point
or from minimax programs that pin the response to +1 on the ``r`` highest
adjacency eigenvalues and to -1 on the ``s`` lowest ones, keeping it strictly
inside (-1, 1) elsewhere.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import cvxpy as cp
import numpy as np

from .graph import NormalizedGraph
from .spectral import (
    DEDUP_TOL,
    DedupedSpectrum,
    SpectralDecomposition,
    VandermondeSystem,
    dedup_eigenvalues,
    vandermonde,
    vandermonde_matrix,
)

MODELS = ("closed_form", "ori_opt", "reg_opt", "liter_opt")
LITER_MIN_WEIGHT = 1e-9
FEAS_TOL = 1e-6


class DesignInfeasible(ValueError):
    """The design program has an empty feasible set."""

    def __init__(self, message, constraint_set=None):
        super().__init__(message)
        self.constraint_set = constraint_set


@dataclass
class DesignConfig:
    r: int = 1
    s: int = 1
    J: int = 3
    alpha: float = 0.5
    xi0: float | None = None  # None: median of the distinct eigenvalues
    epsilon: float = 1e-6
    model: str = "reg_opt"

    def __post_init__(self):
        if self.r < 1 or self.s < 1:
            raise ValueError(f"r and s must be >= 1, got r={self.r}, s={self.s}")
        if self.J < 1 or (self.J < 2 and self.model != "liter_opt"):
            raise ValueError(f"J must be >= 2, got {self.J}")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DesignConfig":
        known = cls.__dataclass_fields__
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(eq=False)
class FilterDesign:
    """Designed response.

    ``w`` holds the model's own weights; ``coeffs`` the coefficients of
    ``G`` in ascending powers of the normalized adjacency (they coincide
    except for the legacy form, whose powers start at 1).
    """

    w: np.ndarray
    coeffs: np.ndarray
    gamma: np.ndarray
    gamma_unique: np.ndarray
    objective: float
    model: str
    r_eff: int = 0
    s_eff: int = 0
    residuals: dict = field(default_factory=dict)

    @property
    def h_low(self) -> np.ndarray:
        return (1 + self.gamma) / 2

    @property
    def h_high(self) -> np.ndarray:
        return (1 - self.gamma) / 2

    def report(self) -> dict:
        r = max(self.r_eff, 1)
        s = max(self.s_eff, 1)
        return {
            "model": self.model,
            "w": [float(v) for v in self.w],
            "objective": float(self.objective),
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "gamma_violations": validate_response(self.gamma, r, s).violations
            if self.model != "liter_opt" else [],
        }


def ideal_lowpass(xi, xi0: float) -> np.ndarray:
    """1 where the adjacency eigenvalue is at least ``xi0``, else 0."""
    xi = np.asarray(xi.xi if isinstance(xi, SpectralDecomposition) else xi, dtype=float)
    lo, hi = xi.min(), xi.max()
    if not lo <= xi0 <= hi:
        raise ValueError(f"threshold {xi0} outside the spectrum range [{lo}, {hi}]")
    return (xi >= xi0).astype(float)


def closed_form_weights(xi_min: float, J: int) -> np.ndarray:
    """Affine feasible point for r = s = 1: maps 1 -> 1 and xi_min -> -1."""
    if J < 2:
        raise ValueError("J must be >= 2")
    if xi_min >= 1:
        raise ValueError(f"degenerate spectrum: smallest eigenvalue {xi_min} >= 1")
    w = np.zeros(J)
    w[0] = -(xi_min + 1) / (1 - xi_min)
    w[1] = 2 / (1 - xi_min)
    return w


def regularizer(vs: VandermondeSystem, w) -> float:
    """Discrete derivative energy ||C0 diag(0..J-1) w||_2 of the response."""
    return float(np.linalg.norm(vs.c0 @ (np.arange(vs.J) * np.asarray(w))))


def constraint_residuals(vs: VandermondeSystem, w, epsilon: float) -> dict:
    gamma = vs.c @ np.asarray(w)
    res = {
        "top": float(np.abs(gamma[vs.rows_r] - 1).max()),
        "bottom": float(np.abs(gamma[vs.rows_s] + 1).max()),
        "middle": 0.0,
    }
    if vs.rows_m.size:
        res["middle"] = float(max(0.0, np.abs(gamma[vs.rows_m]).max() - (1 - epsilon)))
    return res


def _equality_system(vs: VandermondeSystem):
    eq = np.vstack([vs.c_r, vs.c_s])
    rhs = np.r_[np.ones(vs.r), -np.ones(vs.s)]
    return eq, rhs


def _affine_parametrization(vs: VandermondeSystem):
    """Particular solution and null-space basis of the pinning equalities,
    so that w = w0 + N z satisfies them for every z."""
    eq, rhs = _equality_system(vs)
    u, sv, vt = np.linalg.svd(eq)
    rank = int(np.sum(sv > sv[0] * 1e-13))
    w0 = vt[:rank].T @ ((u[:, :rank].T @ rhs) / sv[:rank])
    if np.abs(eq @ w0 - rhs).max() > 1e-9:
        raise DesignInfeasible(
            f"infeasible design (r={vs.r}, s={vs.s}, J={vs.J}): equality constraints "
            "(top/bottom pinning) cannot be satisfied", constraint_set="equality")
    return w0, vt[rank:].T


def _solve_minimax(vs: VandermondeSystem, h_ideal, cfg: DesignConfig, alpha: float):
    h_ideal = np.asarray(h_ideal, dtype=float)
    if h_ideal.shape[0] != vs.m:
        raise ValueError("h_ideal must have one entry per distinct eigenvalue")
    w0, null = _affine_parametrization(vs)
    bound = 1 - cfg.epsilon
    mid = vs.c_m
    if null.shape[1] == 0:
        wv = w0
        status = "unique"
    else:
        z = cp.Variable(null.shape[1])
        w = w0 + null @ z
        fit = cp.norm(h_ideal - 0.5 * (1 + vs.c @ w), "inf")
        objective = fit
        if alpha > 0:
            objective = fit + alpha * cp.norm(vs.c0 @ cp.multiply(np.arange(vs.J, dtype=float), w), 2)
        cons = [cp.abs(mid @ w) <= bound] if vs.rows_m.size else []
        prob = cp.Problem(cp.Minimize(objective), cons)
        try:
            prob.solve(solver=cp.CLARABEL)
        except cp.error.SolverError:
            prob.solve(solver=cp.SCS, eps=1e-10, max_iters=200000)
        status = prob.status
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE) or z.value is None:
            raise DesignInfeasible(
                f"infeasible design (r={vs.r}, s={vs.s}, J={vs.J}): middle bound "
                f"|C_m w| <= 1 - epsilon cannot be satisfied together with the pinning",
                constraint_set="middle")
        wv = w0 + null @ np.asarray(z.value)
    res = constraint_residuals(vs, wv, cfg.epsilon)
    if max(res.values()) > FEAS_TOL:
        raise DesignInfeasible(
            f"infeasible design (r={vs.r}, s={vs.s}, J={vs.J}): no point satisfies "
            f"the middle bound to within {FEAS_TOL} (solver status {status}, residuals {res})",
            constraint_set="middle" if res["middle"] > FEAS_TOL else "equality",
        )
    fit_v = float(np.abs(h_ideal - 0.5 * (1 + vs.c @ wv)).max())
    return wv, fit_v, res


def _finish(w, coeffs, xi_unique, ds, objective, model, residuals, r, s):
    gamma_u = vandermonde_matrix(xi_unique, len(coeffs)) @ coeffs
    gamma = ds.expand(gamma_u) if ds is not None else gamma_u
    r_eff = ds.count_leading(r) if ds is not None else r
    s_eff = ds.count_trailing(s) if ds is not None else s
    return FilterDesign(np.asarray(w, dtype=float), np.asarray(coeffs, dtype=float), gamma, gamma_u,
                        float(objective), model, r_eff, s_eff, residuals)


def solve_ori_opt(vs: VandermondeSystem, h_ideal, cfg: DesignConfig, ds: DedupedSpectrum | None = None):
    """Minimax fit of the lowpass response to ``h_ideal`` under the pinning
    constraints."""
    w, fit, res = _solve_minimax(vs, h_ideal, cfg, alpha=0.0)
    return _finish(w, w, vs.c[:, 1], ds, fit, "ori_opt", res, vs.r, vs.s)


def solve_reg_opt(vs: VandermondeSystem, h_ideal, cfg: DesignConfig, ds: DedupedSpectrum | None = None):
    """As :func:`solve_ori_opt` plus ``alpha`` times the derivative energy."""
    w, fit, res = _solve_minimax(vs, h_ideal, cfg, alpha=cfg.alpha)
    obj = fit + cfg.alpha * regularizer(vs, w)
    fd = _finish(w, w, vs.c[:, 1], ds, obj, "reg_opt", res, vs.r, vs.s)
    fd.residuals["fit"] = fit
    fd.residuals["regularizer"] = regularizer(vs, w)
    return fd


def solve_liter_opt(xi_unique, h_ideal, J: int, ds: DedupedSpectrum | None = None):
    """Baseline: legacy form ``G = sum_{l=1..J} w_l A^l`` with weights on
    the simplex (``w >= 1e-9``), least-squares fit to ``h_ideal``."""
    xi_unique = np.asarray(xi_unique.c[:, 1] if isinstance(xi_unique, VandermondeSystem) else xi_unique,
                           dtype=float)
    h_ideal = np.asarray(h_ideal, dtype=float)
    if J < 1:
        raise ValueError("J must be >= 1")
    powers = vandermonde_matrix(xi_unique, J + 1)[:, 1:]
    if J == 1:
        wv = np.ones(1)
    else:
        w = cp.Variable(J)
        prob = cp.Problem(
            cp.Minimize(cp.norm(h_ideal - 0.5 * (1 + powers @ w), 2)),
            [cp.sum(w) == 1, w >= LITER_MIN_WEIGHT],
        )
        prob.solve(solver=cp.CLARABEL)
        wv = np.maximum(np.asarray(w.value), LITER_MIN_WEIGHT)
        wv = wv / wv.sum()
        wv = np.maximum(wv, LITER_MIN_WEIGHT)
    fit = float(np.linalg.norm(h_ideal - 0.5 * (1 + powers @ wv)))
    coeffs = np.r_[0.0, wv]
    res = {"sum": float(abs(wv.sum() - 1)), "min_weight": float(wv.min())}
    return _finish(wv, coeffs, xi_unique, ds, fit, "liter_opt", res, 1, 1)


def design(sd: SpectralDecomposition, cfg: DesignConfig, dedup_tol: float = DEDUP_TOL) -> FilterDesign:
    """Run the configured design model on the deduplicated spectrum."""
    ds = dedup_eigenvalues(sd, dedup_tol)
    xi0 = float(np.median(ds.xi_unique)) if cfg.xi0 is None else cfg.xi0
    h_ideal = ideal_lowpass(ds.xi_unique, xi0)
    if cfg.model == "liter_opt":
        return solve_liter_opt(ds.xi_unique, h_ideal, cfg.J, ds)
    vs = vandermonde(ds, cfg.J, cfg.r, cfg.s)
    if cfg.model == "closed_form":
        if cfg.r != 1 or cfg.s != 1:
            raise ValueError("closed-form weights exist only for r = s = 1")
        w = closed_form_weights(float(ds.xi_unique[-1]), cfg.J)
        fit = float(np.abs(h_ideal - 0.5 * (1 + vs.c @ w)).max())
        return _finish(w, w, ds.xi_unique, ds, fit, "closed_form",
                       constraint_residuals(vs, w, cfg.epsilon), 1, 1)
    if cfg.model == "ori_opt":
        return solve_ori_opt(vs, h_ideal, cfg, ds)
    return solve_reg_opt(vs, h_ideal, cfg, ds)


# -- spectral condition check ------------------------------------------------


@dataclass
class ResponseReport:
    passed: bool
    branch: str | None  # "inside", "outside" or None when no middle indices
    violations: list

    def __bool__(self):
        return self.passed


def validate_response(gamma, r: int, s: int, tol: float = FEAS_TOL) -> ResponseReport:
    """Check the pinning and middle-band conditions that guarantee
    annihilation and invertibility.

    ``gamma`` is indexed like the eigenvectors (highest adjacency eigenvalue
    first).  Middle values must be uniformly inside or uniformly outside the
    unit interval; a value on the boundary fails.
    """
    gamma = np.asarray(gamma, dtype=float)
    n = gamma.shape[0]
    violations = []
    if r < 1 or s < 1 or r + s > n:
        return ResponseReport(False, None, [{"reason": f"invalid r={r}, s={s} for n={n}"}])
    for i in range(r):
        if abs(gamma[i] - 1) > tol:
            violations.append({"index": i, "value": float(gamma[i]), "reason": "expected +1"})
    for i in range(n - s, n):
        if abs(gamma[i] + 1) > tol:
            violations.append({"index": i, "value": float(gamma[i]), "reason": "expected -1"})
    mid = np.abs(gamma[r:n - s])
    branch = None
    if mid.size:
        if np.all(mid < 1):
            branch = "inside"
        elif np.all(mid > 1):
            branch = "outside"
        else:
            inside = mid < 1
            majority_inside = inside.sum() * 2 >= mid.size
            for k, v in enumerate(mid):
                bad = (v >= 1) if majority_inside else (v <= 1)
                if bad:
                    violations.append({
                        "index": r + k, "value": float(gamma[r + k]),
                        "reason": "boundary |gamma| = 1" if v == 1 else "mixed middle band",
                    })
    return ResponseReport(not violations, branch, violations)


# -- vertex-domain filters ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class FilterPair:
    g: np.ndarray

    @property
    def h_low_mat(self) -> np.ndarray:
        return 0.5 * (np.eye(self.g.shape[0]) + self.g)

    @property
    def h_high_mat(self) -> np.ndarray:
        return 0.5 * (np.eye(self.g.shape[0]) - self.g)


def polynomial_in(a: np.ndarray, coeffs) -> np.ndarray:
    """Horner evaluation of sum_k coeffs[k] a^k."""
    n = a.shape[0]
    coeffs = np.asarray(coeffs, dtype=float)
    out = coeffs[-1] * np.eye(n)
    for c in coeffs[-2::-1]:
        out = out @ a
        out[np.diag_indices(n)] += c
    return out


def build_filters(ng: NormalizedGraph, sd: SpectralDecomposition, fd: FilterDesign,
                  tol: float = 1e-8) -> FilterPair:
    """Vertex-domain G by Horner's rule, cross-checked against U diag(gamma) U^T."""
    if fd.gamma.shape[0] != ng.n or sd.n != ng.n:
        raise ValueError(f"design for {fd.gamma.shape[0]} vertices applied to a graph with {ng.n}")
    g = polynomial_in(np.asarray(ng.a_sym), fd.coeffs)
    gamma = vandermonde_matrix(sd.xi, len(fd.coeffs)) @ fd.coeffs
    spectral = (sd.u * gamma) @ sd.u.T
    scale = max(1.0, np.abs(fd.coeffs).sum())
    err = np.abs(g - spectral).max()
    if err > tol * scale:
        raise ValueError(f"vertex and spectral evaluation of G disagree by {err:.2e}")
    g.setflags(write=False)
    return FilterPair(g)


def annihilation_residuals(pair: FilterPair, sd: SpectralDecomposition, r: int, s: int) -> dict:
    """Largest ||H_H u_i|| over the r lowest and ||H_L u_i|| over the s highest
    frequencies."""
    hh = pair.h_high_mat @ sd.u[:, :r]
    hl = pair.h_low_mat @ sd.u[:, sd.n - s:]
    return {
        "highpass_low_freq": float(np.linalg.norm(hh, axis=0).max()),
        "lowpass_high_freq": float(np.linalg.norm(hl, axis=0).max()),
    }
