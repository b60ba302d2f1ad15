"""Adaptive specification test for a linear regression model.

Tests H0: E[y_i] = v_i' beta for some beta, against a flexible alternative
spanned by a user-chosen (possibly very large) family of test functions
P_j(v_i). The raw family is residualized against the column space of V and
rescaled to unit empirical second moment, making the studentized max score

    T = max_j |sum_i z_ij eps_hat_i / sqrt(n)| / sqrt(E_n[z_ij^2 eps_hat_i^2])

invariant to the regression coefficients. The critical value is the
conditional (1-alpha)-quantile of the same statistic with Gaussian
multipliers on the residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .max_stats import BootstrapConfig, MaxStatVariant, MaxStatKind
from .max_stats import multiplier_bootstrap_quantile

DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class SpecTestInput:
    """Regressors V (n x d, d small), response y, raw test functions P_raw."""

    V: np.ndarray
    y: np.ndarray
    P_raw: np.ndarray

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.V, dtype=float))
        y = np.asarray(self.y, dtype=float)
        praw = np.asarray(self.P_raw, dtype=float)
        n, d = v.shape
        if d > n:
            raise ValueError("more regressors than observations")
        if y.shape != (n,):
            raise ValueError("y must have one entry per row of V")
        if praw.ndim != 2 or praw.shape[0] != n or praw.shape[1] < 1:
            raise ValueError("P_raw must be n x p with p >= 1")
        gram = v.T @ v / n
        eig_min = float(np.linalg.eigvalsh(gram)[0])
        if eig_min <= 1e-10:
            raise ValueError(f"E_n[v v'] nearly singular (min eigenvalue {eig_min:.2e})")
        object.__setattr__(self, "V", v)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "P_raw", praw)

    @property
    def n(self) -> int:
        return self.V.shape[0]


@dataclass(frozen=True)
class TestFunctionSet:
    """Orthogonalized, unit-second-moment test functions."""

    z: np.ndarray  # n x p_kept
    kept: list  # indices into the raw family
    dropped: list  # raw columns that collapsed into span(V)


def build_test_functions(input: SpecTestInput) -> TestFunctionSet:
    """Residualize each raw column against span(V), rescale to E_n[z^2] = 1.

    Columns whose residual norm falls below 1e-10 of their original norm
    lie in the regressor span and are dropped (reported in the result).
    """
    v, praw = input.V, input.P_raw
    n = input.n
    gram = v.T @ v / n
    cross = v.T @ praw / n
    coef = np.linalg.solve(gram, cross)
    resid = praw - v @ coef

    pre = np.sqrt((praw * praw).mean(axis=0))
    post = np.sqrt((resid * resid).mean(axis=0))
    keep = post > DEGENERATE_TOL * np.maximum(pre, DEGENERATE_TOL)
    kept = np.flatnonzero(keep)
    dropped = np.flatnonzero(~keep)
    if kept.size == 0:
        raise ValueError("every test function lies in the regressor span")
    z = resid[:, kept] / post[kept]
    return TestFunctionSet(z=z, kept=list(map(int, kept)), dropped=list(map(int, dropped)))


@dataclass(frozen=True)
class SpecTestResult:
    statistic: float
    critical_value: float
    reject: bool
    per_function_scores: np.ndarray = field(repr=False)
    kept_functions: list = field(default_factory=list)
    dropped_functions: list = field(default_factory=list)
    degenerate_functions: list = field(default_factory=list)

    @property
    def degenerate(self) -> bool:
        return math.isnan(self.statistic)


def run_spec_test(
    input: SpecTestInput, alpha: float, config: BootstrapConfig
) -> SpecTestResult:
    """OLS fit, studentized max score, and its bootstrap critical value.

    Coordinates whose studentizer E_n[z^2 eps_hat^2] vanishes are excluded
    and reported; if all vanish (e.g. an exact fit leaves zero residuals)
    the test reports itself degenerate and does not reject.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    v, y = input.V, input.y
    n = input.n
    basis = build_test_functions(input)
    z = basis.z

    beta = np.linalg.solve(v.T @ v / n, v.T @ y / n)
    resid = y - v @ beta

    weighted = z * resid[:, None]
    stud = np.sqrt((weighted * weighted).mean(axis=0))
    ok = stud > DEGENERATE_TOL
    degenerate = [basis.kept[j] for j in np.flatnonzero(~ok)]
    if not np.any(ok):
        return SpecTestResult(
            statistic=float("nan"),
            critical_value=float("nan"),
            reject=False,
            per_function_scores=np.full(z.shape[1], np.nan),
            kept_functions=basis.kept,
            dropped_functions=basis.dropped,
            degenerate_functions=degenerate,
        )

    raw = np.abs(weighted.sum(axis=0)) / math.sqrt(n)
    scores = np.where(ok, raw / np.where(ok, stud, 1.0), np.nan)
    statistic = float(np.nanmax(scores))

    variant = MaxStatVariant(MaxStatKind.STUDENTIZED, studentizer=stud[ok])
    cfg = BootstrapConfig(config.replications, config.seed, variant)
    est = multiplier_bootstrap_quantile(weighted[:, ok], 1.0 - alpha, cfg)
    return SpecTestResult(
        statistic=statistic,
        critical_value=est.value,
        reject=bool(statistic > est.value),
        per_function_scores=scores,
        kept_functions=basis.kept,
        dropped_functions=basis.dropped,
        degenerate_functions=degenerate,
    )


def legendre_functions(x, degree: int) -> np.ndarray:
    """Legendre polynomial evaluations of degrees 1..degree on [min, max] of x."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    x = np.asarray(x, dtype=float)
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        raise ValueError("covariate is constant")
    u = 2.0 * (x - lo) / (hi - lo) - 1.0
    cols = np.polynomial.legendre.legvander(u, degree)
    return cols[:, 1:]


def bspline_bumps(x, count: int) -> np.ndarray:
    """Triangular (degree-1 B-spline) bumps at equispaced knots on [min, max]."""
    if count < 1:
        raise ValueError("count must be >= 1")
    x = np.asarray(x, dtype=float)
    lo, hi = float(x.min()), float(x.max())
    if hi <= lo:
        raise ValueError("covariate is constant")
    centers = np.linspace(lo, hi, count + 2)[1:-1]
    width = (hi - lo) / (count + 1)
    out = np.maximum(0.0, 1.0 - np.abs(x[:, None] - centers[None, :]) / width)
    return out


def default_test_functions(V, count: int) -> np.ndarray:
    """A mixed family of ``count`` columns: Legendre polynomials and
    triangular bumps per varying covariate, then pairwise products of
    low-degree polynomials when there are two or more covariates."""
    if count < 1:
        raise ValueError("count must be >= 1")
    v = np.atleast_2d(np.asarray(V, dtype=float))
    d = v.shape[1]
    varying = [j for j in range(d) if v[:, j].max() > v[:, j].min()]
    if not varying:
        raise ValueError("no varying covariate to build test functions from")
    n_prod = min(36, count // 4) if len(varying) >= 2 else 0
    per = -(-(count - n_prod) // (2 * len(varying)))  # ceil division
    cols = []
    for j in varying:
        cols.append(legendre_functions(v[:, j], per))
        cols.append(bspline_bumps(v[:, j], per))
    if n_prod:
        fa = legendre_functions(v[:, varying[0]], 6)
        fb = legendre_functions(v[:, varying[1]], 6)
        prods = (fa[:, :, None] * fb[:, None, :]).reshape(v.shape[0], -1)
        cols.append(prods[:, :n_prod])
    basis = np.hstack(cols)
    return basis[:, :count]
