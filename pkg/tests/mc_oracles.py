"""Shared Monte Carlo oracles for the test suite.

Independent of the library's computational paths: quantile standard
errors come from order-statistic spacing, and the two-sample KS null
critical value from the classical asymptotic formula.
"""

import math

import numpy as np


def quantile_mc_se(replicates, level: float) -> float:
    """Standard error of an empirical quantile at `level`.

    Uses the binomial order-statistic confidence interval mapped through
    the sorted replicates: the 95% CI half-width divided by 1.96.
    """
    s = np.sort(np.asarray(replicates, dtype=float))
    n = s.size
    half = 1.96 * math.sqrt(n * level * (1.0 - level))
    mid = level * n
    lo = int(np.clip(math.floor(mid - half), 0, n - 1))
    hi = int(np.clip(math.ceil(mid + half), 0, n - 1))
    se = (s[hi] - s[lo]) / (2.0 * 1.96)
    return max(se, 1e-300)


def ks_two_sample_critical(n1: int, n2: int, alpha: float = 0.05) -> float:
    """Asymptotic two-sample KS critical value at level alpha."""
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n1 + n2) / (n1 * n2))


def proportion_se(p_hat: float, n: int) -> float:
    return math.sqrt(max(p_hat * (1.0 - p_hat), 1e-12) / n)
