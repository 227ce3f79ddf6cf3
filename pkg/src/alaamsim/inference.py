"""Error-rate and interval statistics used to summarise simulation studies."""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm

from .errors import InputError

SIGNIFICANCE_MULTIPLIER = 2.0


class Interval(tuple):
    """A ``(lo, hi)`` pair that also carries a ``degenerate`` flag."""

    def __new__(cls, lo, hi, degenerate=False):
        obj = super().__new__(cls, (float(lo), float(hi)))
        obj.degenerate = degenerate
        return obj

    @property
    def lo(self):
        return self[0]

    @property
    def hi(self):
        return self[1]

    def __repr__(self):
        flag = ", degenerate" if self.degenerate else ""
        return f"Interval({self[0]!r}, {self[1]!r}{flag})"


def rmse(estimates, truth: float) -> float:
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise InputError("rmse of an empty list")
    return float(np.sqrt(np.mean((est - truth) ** 2)))


def is_significant(estimate: float, se: float) -> bool:
    """``|estimate| > 2 se``; the boundary counts as not significant."""
    return abs(estimate) > SIGNIFICANCE_MULTIPLIER * se


def type2_indicator(estimate: float, se: float, truth_sign: int) -> bool:
    """True when a non-zero effect is missed: wrong sign or interval covers zero."""
    if not se > 0:
        raise InputError("standard error must be positive")
    if truth_sign == 0:
        raise InputError("type II error needs a non-zero true effect")
    return bool(np.sign(estimate) != np.sign(truth_sign) or not is_significant(estimate, se))


def type1_indicator(estimate: float, se: float) -> bool:
    """True when a zero effect is declared significant."""
    if not se > 0:
        raise InputError("standard error must be positive")
    return is_significant(estimate, se)


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> Interval:
    """Wilson score interval for a binomial proportion."""
    if n < 1:
        raise InputError("Wilson interval needs n >= 1")
    if not 0 <= k <= n:
        raise InputError(f"successes {k} outside [0, {n}]")
    z = norm.ppf(0.5 + confidence / 2.0)
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z / denom * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return Interval(lo, hi)


def bca_interval(values, confidence: float = 0.95, replicates: int = 20000,
                 rng_seed=0) -> Interval:
    """Bias-corrected and accelerated bootstrap interval for the mean.

    Resamples of the input size are drawn with replacement. The bias
    correction uses the mid-rank of the observed mean among the bootstrap
    means; the acceleration comes from the jackknife. Endpoints are
    bootstrap means (inverted-CDF quantiles). Constant input gives the
    zero-width interval ``(c, c)`` with ``degenerate=True``.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise InputError("bca_interval of an empty list")
    if not np.all(np.isfinite(x)):
        raise InputError("bca_interval needs finite values")
    if np.all(x == x[0]):
        return Interval(x[0], x[0], degenerate=True)
    n = x.size
    rng = np.random.default_rng(rng_seed)
    boot = bootstrap_means(x, replicates, rng)
    observed = x.mean()

    below = np.count_nonzero(boot < observed) + 0.5 * np.count_nonzero(boot == observed)
    frac = min(max(below / replicates, 0.5 / replicates), 1.0 - 0.5 / replicates)
    z0 = norm.ppf(frac)

    jack = (x.sum() - x) / (n - 1)
    dev = jack.mean() - jack
    denom = 6.0 * np.sum(dev ** 2) ** 1.5
    accel = float(np.sum(dev ** 3) / denom) if denom > 0 else 0.0

    alpha = 1.0 - confidence
    zq = norm.ppf([alpha / 2.0, 1.0 - alpha / 2.0])
    adj = norm.cdf(z0 + (z0 + zq) / (1.0 - accel * (z0 + zq)))
    lo, hi = np.quantile(boot, adj, method="inverted_cdf")
    return Interval(lo, hi)


def bootstrap_means(x: np.ndarray, replicates: int, rng, chunk: int = 1 << 22) -> np.ndarray:
    n = x.size
    out = np.empty(replicates)
    per = max(1, chunk // n)
    for start in range(0, replicates, per):
        stop = min(replicates, start + per)
        idx = rng.integers(0, n, size=(stop - start, n))
        out[start:stop] = x[idx].mean(axis=1)
    return out
