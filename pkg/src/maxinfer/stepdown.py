"""Stepdown multiple hypothesis testing with multiplier-bootstrap
critical values, controlling the family-wise error rate.

Hypotheses H_j: beta_j <= beta0_j are tested with t_j = sqrt(n)(bhat_j -
beta0_j). Each step rejects every surviving hypothesis whose statistic
exceeds the bootstrap (1-alpha)-quantile of the max over the surviving
set, then recomputes over the survivors until no new rejection occurs.

One matrix of multiplier draws is generated per run and reused across all
steps, which makes the subset monotonicity of critical values exact (not
just up to Monte Carlo error) and the whole procedure a deterministic
function of (problem, alpha, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .max_stats import BootstrapConfig, MaxStatKind
from .rng import SeededRng
from .stat_core import empirical_quantile
from .max_stats import _normal_block  # shared per-replication multiplier streams


@dataclass(frozen=True)
class MhtProblem:
    """Estimates, null values, and per-observation influence estimates.

    influence rows are the estimated influence contributions x_hat_i, so
    that sqrt(n)(bhat - beta) is approximately n^{-1/2} sum_i x_hat_i.
    """

    beta_hat: np.ndarray
    beta_null: np.ndarray
    influence: np.ndarray
    two_sided: bool = False

    def __post_init__(self):
        bh = np.asarray(self.beta_hat, dtype=float)
        b0 = np.asarray(self.beta_null, dtype=float)
        infl = np.asarray(self.influence, dtype=float)
        if infl.ndim != 2 or infl.shape[0] < 1:
            raise ValueError("influence must be an n x p matrix")
        p = infl.shape[1]
        if bh.shape != (p,) or b0.shape != (p,):
            raise ValueError("beta vectors must match influence columns")
        if not (np.all(np.isfinite(bh)) and np.all(np.isfinite(b0)) and np.all(np.isfinite(infl))):
            raise ValueError("entries must be finite")
        object.__setattr__(self, "beta_hat", bh)
        object.__setattr__(self, "beta_null", b0)
        object.__setattr__(self, "influence", infl)

    @property
    def n(self) -> int:
        return self.influence.shape[0]

    @property
    def p(self) -> int:
        return self.influence.shape[1]


def means_problem(samples, beta_null, two_sided: bool = False) -> MhtProblem:
    """Sample-means convenience constructor: bhat_j = E_n[z_ij] and the
    influence estimates are the demeaned observations."""
    z = np.asarray(samples, dtype=float)
    if z.ndim != 2:
        raise ValueError("samples must be an n x p matrix")
    means = z.mean(axis=0)
    return MhtProblem(
        beta_hat=means,
        beta_null=np.asarray(beta_null, dtype=float),
        influence=z - means,
        two_sided=two_sided,
    )


@dataclass(frozen=True)
class StepdownResult:
    rejected: np.ndarray  # bool, per hypothesis
    rejection_step: list  # Optional[int] per hypothesis, 1-based
    critical_values: list  # per executed step, nonincreasing
    steps: int

    def n_rejected(self) -> int:
        return int(self.rejected.sum())


def _replicate_matrix(influence: np.ndarray, replications: int, seed: int, absolute: bool) -> np.ndarray:
    """(replications, p) matrix of n^{-1/2} sum_i x_hat_ij e_i draws."""
    n = influence.shape[0]
    e = _normal_block(SeededRng(seed), 0, replications, n)
    m = (e @ influence) / math.sqrt(n)
    return np.abs(m) if absolute else m


def stepdown_critical_value(
    influence,
    active_set: Sequence[int],
    alpha: float,
    config: BootstrapConfig,
) -> float:
    """Bootstrap (1-alpha)-quantile of max_{j in active} n^{-1/2} sum x_hat_ij e_i.

    Within one procedure run the same multiplier streams are used for every
    active set; this standalone entry point reproduces that by keying
    replication r to stream (config.seed, r).
    """
    active = np.asarray(active_set, dtype=int)
    if active.size == 0:
        raise ValueError("active set must be non-empty")
    infl = np.asarray(influence, dtype=float)
    if config.variant.kind is MaxStatKind.STUDENTIZED:
        raise ValueError("studentized variant is not supported here")
    absolute = config.variant.kind is MaxStatKind.ABSOLUTE
    m = _replicate_matrix(infl, config.replications, config.seed, absolute)
    return empirical_quantile(m[:, active].max(axis=1), 1.0 - alpha)


def run_stepdown(problem: MhtProblem, alpha: float, config: BootstrapConfig) -> StepdownResult:
    """Iterate rejections until a step rejects nothing new."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    t = math.sqrt(problem.n) * (problem.beta_hat - problem.beta_null)
    if problem.two_sided:
        t = np.abs(t)
    m = _replicate_matrix(
        problem.influence, config.replications, config.seed, problem.two_sided
    )

    p = problem.p
    rejected = np.zeros(p, dtype=bool)
    rejection_step: list[Optional[int]] = [None] * p
    critical_values: list[float] = []
    step = 0
    while True:
        step += 1
        active = np.flatnonzero(~rejected)
        crit = empirical_quantile(m[:, active].max(axis=1), 1.0 - alpha)
        critical_values.append(crit)
        new = active[t[active] > crit]
        for j in new:
            rejection_step[j] = step
        if new.size == 0 or new.size == active.size:
            rejected[new] = True
            break
        rejected[new] = True
    return StepdownResult(
        rejected=rejected,
        rejection_step=rejection_step,
        critical_values=critical_values,
        steps=step,
    )
