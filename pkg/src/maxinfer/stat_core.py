"""Scalar distribution functions, empirical quantiles, and a pivoted
Cholesky factorization — the numeric substrate shared by every module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class NotPsdError(ValueError):
    """Raised when a matrix fails the positive-semidefinite pivot test."""


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


# Wichura's AS241 (PPND16) rational approximation of the standard normal
# quantile; absolute error well below 1e-9 over (0, 1).
_A = (
    3.3871328727963666080,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
)
_B = (
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
)
_C = (
    1.42343711074968357734,
    4.63033784615654529590,
    5.76949722146069140550,
    3.64784832476320460504,
    1.27045825245236838258,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
)
_D = (
    1.0,
    2.05319162663775882187,
    1.67638483018380384940,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
)
_E = (
    6.65790464350110377720,
    5.46378491116411436990,
    1.78482653991729133580,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
)
_F = (
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
    2.04426310338993978564e-15,
)


def _poly(coeffs, r: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * r + c
    return acc


def normal_quantile(prob: float) -> float:
    """Inverse standard normal CDF.

    Raises ValueError outside the open interval (0, 1).
    """
    if not 0.0 < prob < 1.0:
        raise ValueError(f"prob must be in (0, 1), got {prob}")
    q = prob - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        return q * _poly(_A, r) / _poly(_B, r)
    r = prob if q < 0 else 1.0 - prob
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        val = _poly(_C, r) / _poly(_D, r)
    else:
        r -= 5.0
        val = _poly(_E, r) / _poly(_F, r)
    return -val if q < 0 else val


def empirical_quantile(samples, level: float) -> float:
    """Left-continuous generalized inverse of the empirical CDF.

    Returns the smallest sample value t with #{s <= t}/N >= level, i.e. the
    ceil(level*N)-th order statistic. No interpolation: this matches the
    inf-based quantile definition used by the bootstrap engines, so quantile
    comparison identities hold exactly.
    """
    a = np.asarray(samples, dtype=float)
    if a.size == 0:
        raise ValueError("empirical_quantile of an empty sample")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    return float(np.sort(a, kind="stable")[_quantile_index(a.size, level)])


def _quantile_index(n: int, level: float) -> int:
    # smallest k with k/n >= level, evaluated with the same float
    # comparisons a brute-force scan of the empirical CDF would use
    k = math.ceil(level * n)
    k = min(max(k, 1), n)
    while k > 1 and (k - 1) / n >= level:
        k -= 1
    while k < n and k / n < level:
        k += 1
    return k - 1


@dataclass(frozen=True)
class PsdFactor:
    """Rank-revealing Cholesky factor: matrix ~= lower @ lower.T."""

    dimension: int
    lower: np.ndarray  # (dimension, rank)
    rank: int

    def reconstruct(self) -> np.ndarray:
        return self.lower @ self.lower.T


def psd_factor(matrix, rel_tol: float = 1e-8) -> PsdFactor:
    """Pivoted Cholesky factorization with rank truncation.

    Pivots smaller than -rel_tol * max(diag) raise NotPsdError; pivots in
    [-rel_tol * max(diag), +threshold] end the factorization with reduced
    rank, which is the expected outcome for p > n empirical covariances.
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    p = a.shape[0]
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)

    d = np.diagonal(a).copy()
    max_diag = max(float(d.max(initial=0.0)), 0.0)
    cut = rel_tol * max_diag if max_diag > 0.0 else rel_tol

    lower = np.zeros((p, p))
    perm = np.arange(p)
    rank = 0
    for k in range(p):
        rem = d[perm[k:]]
        m = int(np.argmax(rem)) + k
        pivot = d[perm[m]]
        if pivot < -cut:
            raise NotPsdError(f"negative pivot {pivot:.3e} below -{cut:.3e}")
        if pivot <= cut:
            break
        perm[k], perm[m] = perm[m], perm[k]
        i = perm[k]
        rest = perm[k + 1:]
        lkk = math.sqrt(pivot)
        lower[i, k] = lkk
        if rest.size:
            col = (a[rest, i] - lower[rest, :k] @ lower[i, :k]) / lkk
            lower[rest, k] = col
            d[rest] -= col * col
        rank += 1

    return PsdFactor(dimension=p, lower=lower[:, :rank].copy(), rank=rank)
