"""Max-of-sums statistics and their bootstrap quantile engines.

The central objects: for an n x p data matrix with rows x_i,

* the max statistic  max_j n^{-1/2} sum_i x_ij  (signed, absolute, or
  studentized variants),
* its Gaussian-multiplier counterpart where each row is weighted by an
  independent N(0,1) draw,
* the Gaussian analog simulated either from a design matrix (exact
  factor representation) or from an explicit covariance matrix,
* Efron's resample-and-recenter bootstrap statistic,

plus the smooth-max (log-sum-exp) approximation, the exact two-sample
Kolmogorov-Smirnov distance, and a Levy-concentration diagnostic.

Bootstrap replications are keyed by (seed, replication index), so results
are identical for any batching or degree of parallelism.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .rng import SeededRng, _StreamBatch
from .stat_core import empirical_quantile, psd_factor

_BATCH = 4096  # replications drawn per block; keeps multiplier matrices small


class MaxStatKind(enum.Enum):
    SIGNED = "signed"
    ABSOLUTE = "absolute"
    STUDENTIZED = "studentized"


@dataclass(frozen=True)
class MaxStatVariant:
    """Which max statistic to take over the p coordinate sums.

    STUDENTIZED divides each coordinate's |sum| by a caller-supplied
    positive scale before taking the max; the scale is never recomputed
    here so callers control whether it uses residuals or known noise.
    """

    kind: MaxStatKind = MaxStatKind.SIGNED
    studentizer: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind is MaxStatKind.STUDENTIZED:
            if self.studentizer is None:
                raise ValueError("studentized variant requires a studentizer")
            s = np.asarray(self.studentizer, dtype=float)
            if s.ndim != 1 or not np.all(s > 0):
                raise ValueError("studentizer must be a 1-d vector of positive scales")
            object.__setattr__(self, "studentizer", s)
        elif self.studentizer is not None:
            raise ValueError("studentizer is only meaningful for the studentized variant")


SIGNED_MAX = MaxStatVariant(MaxStatKind.SIGNED)
ABSOLUTE_MAX = MaxStatVariant(MaxStatKind.ABSOLUTE)


@dataclass(frozen=True)
class BootstrapConfig:
    replications: int
    seed: int
    variant: MaxStatVariant = SIGNED_MAX

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


@dataclass(frozen=True)
class QuantileEstimate:
    """An estimated quantile plus the full sorted replicate vector."""

    level: float
    value: float
    replications: int
    replicate_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must be in (0, 1)")
        if len(self.replicate_values) != self.replications:
            raise ValueError("replicate vector length must equal replications")

    @classmethod
    def from_replicates(cls, replicates: np.ndarray, level: float) -> "QuantileEstimate":
        reps = np.sort(np.asarray(replicates, dtype=float))
        return cls(
            level=level,
            value=empirical_quantile(reps, level),
            replications=reps.size,
            replicate_values=reps,
        )

    def scaled(self, c: float) -> "QuantileEstimate":
        """Exact rescaling of every replicate (and hence the quantile)."""
        if c <= 0:
            raise ValueError("scale must be positive")
        return QuantileEstimate(
            level=self.level,
            value=self.value * c,
            replications=self.replications,
            replicate_values=self.replicate_values * c,
        )


def _validate_data(data) -> np.ndarray:
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ValueError("data must be a non-empty 2-d matrix (rows = observations)")
    if not np.all(np.isfinite(x)):
        raise ValueError("data entries must be finite")
    return x


def _reduce(sums: np.ndarray, variant: MaxStatVariant) -> np.ndarray:
    """Apply the variant's max reduction over the trailing axis."""
    if variant.kind is MaxStatKind.SIGNED:
        return sums.max(axis=-1)
    if variant.kind is MaxStatKind.ABSOLUTE:
        return np.abs(sums).max(axis=-1)
    s = variant.studentizer
    if s.shape[0] != sums.shape[-1]:
        raise ValueError("studentizer length must match coordinate count")
    return (np.abs(sums) / s).max(axis=-1)


def compute_max_stat(data, variant: MaxStatVariant = SIGNED_MAX) -> float:
    """max_j (variant) of n^{-1/2} sum_i x_ij."""
    x = _validate_data(data)
    # same weighted-sum path as compute_w0, so that unit multipliers
    # reproduce this statistic bit for bit
    sums = (np.ones(x.shape[0]) @ x) / math.sqrt(x.shape[0])
    return float(_reduce(sums, variant))


def compute_w0(data, multipliers, variant: MaxStatVariant = SIGNED_MAX) -> float:
    """Multiplier statistic: max_j (variant) of n^{-1/2} sum_i x_ij e_i."""
    x = _validate_data(data)
    e = np.asarray(multipliers, dtype=float)
    if e.shape != (x.shape[0],):
        raise ValueError("multipliers must have length n")
    sums = (e @ x) / math.sqrt(x.shape[0])
    return float(_reduce(sums, variant))


@dataclass(frozen=True)
class CovarianceGap:
    """Sup-norm gap between empirical and reference covariance matrices."""

    delta: float


def covariance_gap(data, sigma=None) -> CovarianceGap:
    x = _validate_data(data)
    emp = x.T @ x / x.shape[0]
    if sigma is None:
        return CovarianceGap(0.0)
    ref = np.asarray(sigma, dtype=float)
    if ref.shape != emp.shape:
        raise ValueError("sigma must be p x p")
    return CovarianceGap(float(np.max(np.abs(emp - ref))))


def _multiplier_replicates(x: np.ndarray, config: BootstrapConfig) -> np.ndarray:
    n = x.shape[0]
    root_n = math.sqrt(n)
    base = SeededRng(config.seed)
    out = np.empty(config.replications)
    for start in range(0, config.replications, _BATCH):
        stop = min(start + _BATCH, config.replications)
        block = _normal_block(base, start, stop, n)
        sums = (block @ x) / root_n
        out[start:stop] = _reduce(sums, config.variant)
    return out


def _normal_block(base: SeededRng, start: int, stop: int, n: int) -> np.ndarray:
    batch = _StreamBatch(base.seed)
    block = np.empty((stop - start, n))
    for r in range(start, stop):
        block[r - start] = batch.normal(r, n)
    return block


def multiplier_bootstrap_quantile(
    data, level: float, config: BootstrapConfig
) -> QuantileEstimate:
    """Conditional quantile of the multiplier statistic given the data.

    Replication r uses the multiplier stream (config.seed, r), so any
    parallel or batched evaluation yields the same sorted replicates.
    """
    x = _validate_data(data)
    reps = _multiplier_replicates(x, config)
    return QuantileEstimate.from_replicates(reps, level)


def simulate_gaussian_max(
    level: float,
    *,
    replications: int,
    seed: int,
    variant: MaxStatVariant = SIGNED_MAX,
    design=None,
    scale=None,
    cov=None,
) -> QuantileEstimate:
    """Quantile of the Gaussian-analog max statistic.

    Exactly one source must be given:

    * ``design`` (n x p matrix, optionally with per-observation ``scale``):
      simulates via the multiplier representation
      max_j (variant) of n^{-1/2} sum_i scale_i z_ij e_i, which is exact and
      avoids any p x p factorization;
    * ``cov`` (p x p matrix): draws max_j (variant) of (L g)_j with
      L L' = cov from a pivoted Cholesky factor and g standard normal.
    """
    if (design is None) == (cov is None):
        raise ValueError("give exactly one of design= or cov=")
    if design is not None:
        z = _validate_data(design)
        if scale is not None:
            s = np.asarray(scale, dtype=float)
            if s.ndim == 0:
                z = z * float(s)
            elif s.shape == (z.shape[0],):
                z = z * s[:, None]
            else:
                raise ValueError("scale must be a scalar or length-n vector")
        config = BootstrapConfig(replications=replications, seed=seed, variant=variant)
        reps = _multiplier_replicates(z, config)
        return QuantileEstimate.from_replicates(reps, level)

    if scale is not None:
        raise ValueError("scale applies only to the design source")
    factor = psd_factor(cov)
    lt = factor.lower.T  # (rank, p)
    out = np.empty(replications)
    base = SeededRng(seed)
    for start in range(0, replications, _BATCH):
        stop = min(start + _BATCH, replications)
        g = _normal_block(base, start, stop, factor.rank)
        out[start:stop] = _reduce(g @ lt, variant)
    return QuantileEstimate.from_replicates(out, level)


def empirical_bootstrap_stat(
    data, rng: SeededRng, variant: MaxStatVariant = SIGNED_MAX
) -> float:
    """One Efron bootstrap replicate of the max statistic.

    Draws n rows with replacement and recenters by the column means of the
    original data before taking the max statistic.
    """
    x = _validate_data(data)
    n = x.shape[0]
    idx = rng.generator().integers(0, n, size=n)
    sums = (x[idx].sum(axis=0) - x.sum(axis=0)) / math.sqrt(n)
    return float(_reduce(sums, variant))


def empirical_bootstrap_quantile(
    data, level: float, config: BootstrapConfig
) -> QuantileEstimate:
    """Conditional quantile of the Efron bootstrap statistic given the data."""
    x = _validate_data(data)
    n = x.shape[0]
    root_n = math.sqrt(n)
    col_sums = x.sum(axis=0)
    out = np.empty(config.replications)
    base = SeededRng(config.seed)
    for start in range(0, config.replications, _BATCH):
        stop = min(start + _BATCH, config.replications)
        idx = _index_block(base, start, stop, n)
        for r in range(stop - start):
            sums = (x[idx[r]].sum(axis=0) - col_sums) / root_n
            out[start + r] = _reduce(sums, config.variant)
    return QuantileEstimate.from_replicates(out, level)


def _index_block(base: SeededRng, start: int, stop: int, n: int) -> np.ndarray:
    batch = _StreamBatch(base.seed)
    block = np.empty((stop - start, n), dtype=np.int64)
    for r in range(start, stop):
        block[r - start] = batch.integers(r, n, n)
    return block


def smooth_max(z, beta: float) -> float:
    """beta^{-1} log sum_j exp(beta z_j), computed stably.

    Sandwiches the max: 0 <= smooth_max(z, beta) - max(z) <= log(p)/beta.
    """
    a = np.asarray(z, dtype=float)
    if a.size == 0:
        raise ValueError("smooth_max of an empty vector")
    if beta <= 0:
        raise ValueError("beta must be positive")
    m = float(a.max())
    return m + math.log(float(np.exp(beta * (a - m)).sum())) / beta


def ks_distance(samples_a, samples_b) -> float:
    """Exact two-sample Kolmogorov-Smirnov statistic.

    Sup over the pooled sorted values of |F_a(t) - F_b(t)| with
    right-continuous empirical CDFs, which attains the true sup.
    """
    a = np.sort(np.asarray(samples_a, dtype=float))
    b = np.sort(np.asarray(samples_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_distance needs non-empty samples")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / a.size
    cdf_b = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def levy_concentration(samples, width: float) -> float:
    """sup_z #{|s - z| <= width} / N over a sliding window of half-width."""
    a = np.sort(np.asarray(samples, dtype=float))
    if a.size == 0:
        raise ValueError("levy_concentration of an empty sample")
    if width <= 0:
        raise ValueError("width must be positive")
    # an optimal window can anchor its left edge at a sample point
    hi = np.searchsorted(a, a + 2.0 * width, side="right")
    counts = hi - np.arange(a.size)
    return float(counts.max()) / a.size
