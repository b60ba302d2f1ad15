"""Monte Carlo harness: equicorrelated regression designs, P-P closeness
of the max statistic to its Gaussian analog, penalty comparisons for the
Dantzig selector, bootstrap coverage, and family-wise error rates.

Every experiment is a pure function of its config; outer replications
derive per-index seeds and reduce order-insensitively, so any thread
count reproduces the same numbers.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import dantzig
from .dantzig import (
    PenaltyKind,
    PenaltySpec,
    RegressionData,
    ResidualMode,
    canonical_penalty,
    fit_dantzig,
    prediction_seminorm,
)
from .lp import LpStatus
from .max_stats import (
    ABSOLUTE_MAX,
    SIGNED_MAX,
    BootstrapConfig,
    ks_distance,
    multiplier_bootstrap_quantile,
)
from .parallel import map_indices
from .rng import SeededRng, sample_normal, sample_student_t, sample_uniform
from .stepdown import means_problem, run_stepdown


class NoiseKind(enum.Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T5_NORMALIZED = "t5_normalized"
    STUDENT_T4 = "t4"


def _draw_noise(rng: SeededRng, kind: NoiseKind, count: int) -> np.ndarray:
    if kind is NoiseKind.GAUSSIAN:
        return sample_normal(rng, count)
    if kind is NoiseKind.STUDENT_T5_NORMALIZED:
        return sample_student_t(rng, 5, count, unit_variance=True)
    return sample_student_t(rng, 4, count, unit_variance=False)


@dataclass(frozen=True)
class McDesign:
    """Equicorrelated regression design with optional heteroscedasticity.

    First design column is an intercept; the remaining p-1 columns are an
    equicorrelated Gaussian draw normalized to unit empirical second
    moment. Noise is sigma0 * s(z_i) * e_i with
    s(z) = 2 exp(gamma z_2) / (1 + exp(gamma z_2)), so gamma = 0 is the
    homoscedastic case and the noise scale is bounded by 2 sigma0.
    """

    n: int
    p: int
    rho: float
    sigma0: float
    noise: NoiseKind
    gamma: float
    reps: int
    seed: int
    sparsity: int = 5
    alpha: float = 0.05
    penalty_reps: int = 500

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must be in [0, 1)")
        if self.n < 2 or self.p < 2:
            raise ValueError("need n >= 2 and p >= 2")
        if self.sparsity > self.p:
            raise ValueError("sparsity exceeds p")

    @property
    def sigma_bound(self) -> float:
        """Known upper bound on the noise scale."""
        return self.sigma0 * (2.0 if abs(self.gamma) > 0 else 1.0)


def simulate_design(rng: SeededRng, n: int, p: int, rho: float) -> np.ndarray:
    """Intercept column plus p-1 equicorrelated normalized columns."""
    gen = rng.generator()
    common = gen.standard_normal((n, 1))
    idio = gen.standard_normal((n, p - 1))
    w = math.sqrt(rho) * common + math.sqrt(1.0 - rho) * idio
    w /= np.sqrt((w * w).mean(axis=0))
    return np.hstack([np.ones((n, 1)), w])


def hetero_scale(z: np.ndarray, gamma: float) -> np.ndarray:
    """2 exp(gamma z_2) / (1 + exp(gamma z_2)) per observation."""
    t = gamma * z[:, 1]
    return 2.0 / (1.0 + np.exp(-t))


def simulate_regression(design: McDesign, rep: int):
    """One draw of (RegressionData, beta_true, noise_scales) for a design."""
    base = SeededRng(design.seed).child(rep)
    z = simulate_design(base.child(0), design.n, design.p, design.rho)
    scales = design.sigma0 * hetero_scale(z, design.gamma)
    eps = scales * _draw_noise(base.child(1), design.noise, design.n)
    gen = base.child(2).generator()
    support = gen.choice(design.p, size=design.sparsity, replace=False)
    beta = np.zeros(design.p)
    beta[support] = 1.0
    y = z @ beta + eps
    return RegressionData(z, y), beta, scales, base


# ---------------------------------------------------------------------------
# P-P closeness of the max statistic to its Gaussian analog


@dataclass(frozen=True)
class PpPlotData:
    """Paired empirical CDFs of two max-statistic samples on the pooled grid."""

    grid: np.ndarray
    cdf_stat: np.ndarray
    cdf_gaussian: np.ndarray
    ks: float


def run_ppplot(
    n: int,
    p: int,
    reps: int,
    seed: int,
    noise: NoiseKind = NoiseKind.STUDENT_T4,
    unit_variance: bool = False,
) -> PpPlotData:
    """Fix a U[0,1] design once; draw the regression-score max statistic
    under the chosen noise and its Gaussian analog with matched scale.

    The Gaussian sample multiplies the same design by N(0,1) draws scaled
    to the noise standard deviation (sqrt(2) for raw t(4), 1 when the
    noise is variance-normalized).
    """
    if reps < 100:
        raise ValueError("reps must be >= 100")
    base = SeededRng(seed)
    z = sample_uniform(base.child(0), n * p).reshape(n, p)
    root_n = math.sqrt(n)

    if noise is NoiseKind.GAUSSIAN:
        scale = 1.0
    elif noise is NoiseKind.STUDENT_T5_NORMALIZED:
        scale = 1.0
    else:
        scale = 1.0 if unit_variance else math.sqrt(2.0)

    eps = np.empty((reps, n))
    stat_rng = base.child(1)
    for r in range(reps):
        rng = stat_rng.stream(r)
        if noise is NoiseKind.STUDENT_T4 and unit_variance:
            eps[r] = sample_student_t(rng, 4, n, unit_variance=True)
        else:
            eps[r] = _draw_noise(rng, noise, n)
    stat_sample = np.abs(eps @ z / root_n).max(axis=1)

    gauss_rng = base.child(2)
    e = np.empty((reps, n))
    for r in range(reps):
        e[r] = sample_normal(gauss_rng.stream(r), n)
    gauss_sample = np.abs((scale * e) @ z / root_n).max(axis=1)

    pooled = np.sort(np.concatenate([stat_sample, gauss_sample]))
    cdf_a = np.searchsorted(np.sort(stat_sample), pooled, side="right") / reps
    cdf_b = np.searchsorted(np.sort(gauss_sample), pooled, side="right") / reps
    return PpPlotData(
        grid=pooled,
        cdf_stat=cdf_a,
        cdf_gaussian=cdf_b,
        ks=ks_distance(stat_sample, gauss_sample),
    )


# ---------------------------------------------------------------------------
# Dantzig selector penalty comparison


@dataclass(frozen=True)
class DantzigCell:
    """Per-penalty mean prediction errors for one design cell."""

    design: McDesign
    penalties: tuple
    mean_errors: dict
    errors: dict = field(repr=False)
    lp_failures: dict = field(default_factory=dict)


def _dantzig_rep(design: McDesign, penalties: tuple, rep: int) -> dict:
    data, beta, scales, base = simulate_regression(design, rep)
    out = {}
    for kind in penalties:
        if kind is PenaltyKind.CANONICAL:
            lam = canonical_penalty(design.sigma_bound, design.alpha, design.p)
        elif kind is PenaltyKind.GAR:
            # feasible only when the heteroscedasticity pattern is known:
            # simulate with the true per-observation noise scale
            cfg = BootstrapConfig(design.penalty_reps, base.child(3).seed, ABSOLUTE_MAX)
            est = multiplier_bootstrap_quantile(
                data.Z * scales[:, None], 1.0 - design.alpha, cfg
            )
            lam = est.value
        else:
            spec = PenaltySpec(
                kind=PenaltyKind.MULTIPLIER_BOOTSTRAP,
                alpha=design.alpha,
                sigma=design.sigma_bound,
                bootstrap=BootstrapConfig(design.penalty_reps, base.child(4).seed),
                residual_mode=ResidualMode.POST_SELECTION_OLS,
            )
            lam = dantzig.mb_penalty(data, spec).value
        fit = fit_dantzig(data, lam, penalty_kind=kind)
        if fit.lp_status is LpStatus.OPTIMAL:
            out[kind.value] = prediction_seminorm(data.Z, fit.beta_hat - beta)
        else:
            out[kind.value] = None
    return out


def run_dantzig_table(
    design: McDesign,
    penalties: Sequence[PenaltyKind] = (
        PenaltyKind.CANONICAL,
        PenaltyKind.GAR,
        PenaltyKind.MULTIPLIER_BOOTSTRAP,
    ),
    threads: int = 1,
) -> DantzigCell:
    """Mean prediction error per penalty rule over design.reps draws."""
    penalties = tuple(penalties)
    worker = functools.partial(_dantzig_rep, design, penalties)
    rows = map_indices(worker, design.reps, threads)
    errors = {}
    failures = {}
    means = {}
    for kind in penalties:
        vals = [row[kind.value] for row in rows]
        good = np.array([v for v in vals if v is not None])
        errors[kind.value] = good
        failures[kind.value] = sum(v is None for v in vals)
        means[kind.value] = float(good.mean()) if good.size else float("nan")
    return DantzigCell(
        design=design,
        penalties=penalties,
        mean_errors=means,
        errors=errors,
        lp_failures=failures,
    )


# ---------------------------------------------------------------------------
# Bootstrap coverage for max-of-means


class CoverageData(enum.Enum):
    BOUNDED_MIXTURE = "bounded_mixture"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class CoverageConfig:
    n: int
    p: int
    alpha: float
    outer_reps: int
    inner_reps: int
    seed: int
    data: CoverageData = CoverageData.BOUNDED_MIXTURE


def _coverage_rep(config: CoverageConfig, rep: int) -> bool:
    base = SeededRng(config.seed).child(rep)
    gen = base.child(0).generator()
    if config.data is CoverageData.GAUSSIAN:
        x = gen.standard_normal((config.n, config.p))
    else:
        # bounded, centered, unit-variance mixture: uniform amplitude with a
        # per-observation two-point scale
        u = gen.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=(config.n, config.p))
        s = np.where(gen.random(config.n) < 0.5, 0.6, 1.4)
        s /= math.sqrt(0.5 * (0.6**2 + 1.4**2))
        x = u * s[:, None]
    t0 = float(x.sum(axis=0).max() / math.sqrt(config.n))
    cfg = BootstrapConfig(config.inner_reps, base.child(1).seed, SIGNED_MAX)
    crit = multiplier_bootstrap_quantile(x, 1.0 - config.alpha, cfg).value
    return t0 <= crit


def run_coverage(config: CoverageConfig, threads: int = 1) -> float:
    """Monte Carlo Pr(T0 <= bootstrap (1-alpha)-quantile)."""
    worker = functools.partial(_coverage_rep, config)
    hits = map_indices(worker, config.outer_reps, threads)
    return float(np.mean(hits))


# ---------------------------------------------------------------------------
# Family-wise error rate of the stepdown procedure


@dataclass(frozen=True)
class FwerConfig:
    n: int
    p_true: int
    alpha: float
    rho: float
    outer_reps: int
    inner_reps: int
    seed: int
    p_false: int = 0
    effect: float = 0.0  # mean shift of false nulls, in units of 1/sqrt(n)


@dataclass(frozen=True)
class FwerResult:
    fwer: float
    false_null_power: float  # mean fraction of false nulls rejected
    config: FwerConfig


def _fwer_rep(config: FwerConfig, rep: int):
    base = SeededRng(config.seed).child(rep)
    gen = base.child(0).generator()
    p = config.p_true + config.p_false
    common = gen.standard_normal((config.n, 1))
    idio = gen.standard_normal((config.n, p))
    x = math.sqrt(config.rho) * common + math.sqrt(1.0 - config.rho) * idio
    mu = np.zeros(p)
    if config.p_false:
        mu[config.p_true:] = config.effect / math.sqrt(config.n)
    problem = means_problem(x + mu, np.zeros(p))
    cfg = BootstrapConfig(config.inner_reps, base.child(1).seed, SIGNED_MAX)
    result = run_stepdown(problem, config.alpha, cfg)
    false_rej = bool(result.rejected[: config.p_true].any())
    power = (
        float(result.rejected[config.p_true:].mean()) if config.p_false else float("nan")
    )
    return false_rej, power


def run_fwer(config: FwerConfig, threads: int = 1) -> FwerResult:
    """Share of runs rejecting any true null, plus power on false nulls."""
    worker = functools.partial(_fwer_rep, config)
    rows = map_indices(worker, config.outer_reps, threads)
    fwer = float(np.mean([r[0] for r in rows]))
    if config.p_false:
        power = float(np.mean([r[1] for r in rows]))
    else:
        power = float("nan")
    return FwerResult(fwer=fwer, false_null_power=power, config=config)
