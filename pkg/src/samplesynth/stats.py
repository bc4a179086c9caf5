"""Summary statistics and hypothesis tests used as synthesis penalties.

Self-contained numerics: the regularized incomplete gamma function backs the
chi-square distribution, and the asymptotic Kolmogorov series backs the KS
p-values. Tests elsewhere compare these against independent quadrature and
permutation oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SynthError


class StatsError(SynthError):
    pass


class DegenerateSample(StatsError):
    """Zero-variance sample: higher moments are undefined."""


class DegenerateTheta(StatsError):
    """A test parameter on the boundary of its domain."""


class SampleTooSmall(StatsError):
    pass


def _as_array(samples) -> np.ndarray:
    values = getattr(samples, "values", samples)
    return np.asarray(values, dtype=np.float64)


# ---------------------------------------------------------------------------
# moments


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float

    def as_tuple(self):
        return (self.mean, self.variance, self.skewness, self.excess_kurtosis)


def summary_moments(samples) -> SummaryStats:
    """Population moments (denominator n): mean, variance, skewness m3/m2^1.5,
    excess kurtosis m4/m2^2 - 3. Raises :class:`DegenerateSample` when the
    variance vanishes (within a few ulps of the mean's magnitude)."""
    x = _as_array(samples)
    if x.size < 2:
        raise SampleTooSmall("need at least 2 samples for moments")
    with np.errstate(over="ignore", invalid="ignore"):
        mean = float(x.mean())
        if not math.isfinite(mean):
            raise DegenerateSample("mean overflows")
        d = x - mean
        m2 = float(np.mean(d * d))
    if not math.isfinite(m2):
        raise DegenerateSample("variance overflows")
    # compare standard deviations: a few ulps of the mean's magnitude counts
    # as zero variance, and the comparison cannot overflow
    if math.sqrt(m2) <= 4.0 * np.finfo(np.float64).eps * max(1.0, abs(mean)):
        raise DegenerateSample("zero-variance sample")
    # standardized powers: |z| <= sqrt(n), so cubes and fourth powers stay finite
    z = d / math.sqrt(m2)
    return SummaryStats(
        mean=mean,
        variance=m2,
        skewness=float(np.mean(z**3)),
        excess_kurtosis=float(np.mean(z**4)) - 3.0,
    )


def moment_penalty(stats: SummaryStats, targets, sigma: float) -> float:
    """Sum of Normal(target, sigma^2) log densities evaluated at the four statistics."""
    if sigma <= 0.0:
        raise StatsError("sigma must be positive")
    lp = 0.0
    norm = -0.5 * math.log(2.0 * math.pi * sigma * sigma)
    for s, t in zip(stats.as_tuple(), targets):
        z = (s - t) / sigma
        lp += norm - 0.5 * z * z
    return lp


# ---------------------------------------------------------------------------
# incomplete gamma / chi-square

_EPS = 1e-16
_MAX_ITER = 600


def _gamma_series_p(s: float, x: float) -> float:
    """Regularized lower incomplete gamma by series; valid for x < s + 1."""
    term = 1.0 / s
    total = term
    a = s
    for _ in range(_MAX_ITER):
        a += 1.0
        term *= x / a
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + s * math.log(x) - math.lgamma(s))


def _gamma_cf_q(s: float, x: float) -> float:
    """Regularized upper incomplete gamma by continued fraction (Lentz); x >= s + 1."""
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + s * math.log(x) - math.lgamma(s)) * h


def gamma_inc_lower(s: float, x: float) -> float:
    """Regularized lower incomplete gamma P(s, x)."""
    if s <= 0.0:
        raise StatsError("shape must be positive")
    if x <= 0.0:
        return 0.0
    if x < s + 1.0:
        return min(1.0, max(0.0, _gamma_series_p(s, x)))
    return min(1.0, max(0.0, 1.0 - _gamma_cf_q(s, x)))


def gamma_inc_upper(s: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(s, x) = 1 - P(s, x), precise in the tail."""
    if s <= 0.0:
        raise StatsError("shape must be positive")
    if x <= 0.0:
        return 1.0
    if x < s + 1.0:
        return min(1.0, max(0.0, 1.0 - _gamma_series_p(s, x)))
    return min(1.0, max(0.0, _gamma_cf_q(s, x)))


def chi2_cdf(x: float, k: int) -> float:
    """Chi-square CDF with k degrees of freedom: P(k/2, x/2)."""
    if x < 0.0:
        raise StatsError("chi-square statistic must be nonnegative")
    if k < 1:
        raise StatsError("degrees of freedom must be positive")
    return gamma_inc_lower(k / 2.0, x / 2.0)


def chi2_sf(x: float, k: int) -> float:
    """Upper tail of the chi-square distribution; stays accurate where the CDF saturates."""
    if x < 0.0:
        raise StatsError("chi-square statistic must be nonnegative")
    return gamma_inc_upper(k / 2.0, x / 2.0)


# ---------------------------------------------------------------------------
# G-tests


def g_test_p_value(samples, theta: float) -> float:
    """Likelihood-ratio goodness-of-fit p-value for 0/1 samples against a
    coin with success probability ``theta``.

    Returns 0.0 outright when the sample contains anything but 0.0 or 1.0.
    Zero-count cells contribute nothing to the statistic.
    """
    if not 0.0 < theta < 1.0:
        raise DegenerateTheta(f"theta must be strictly inside (0, 1), got {theta}")
    x = _as_array(samples)
    ones = int(np.count_nonzero(x == 1.0))
    zeros = int(np.count_nonzero(x == 0.0))
    n = x.size
    if ones + zeros != n or n == 0:
        return 0.0
    g = 0.0
    if ones:
        g += ones * math.log(ones / (theta * n))
    if zeros:
        g += zeros * math.log(zeros / ((1.0 - theta) * n))
    g *= 2.0
    return chi2_sf(max(g, 0.0), 1)


def g_test_pooled(samples, pmf, tail_mass) -> float:
    """Multi-cell G-test for nonnegative-integer-valued samples.

    ``pmf(k)`` gives the null cell probability, ``tail_mass(k)`` the mass of
    ``[k, inf)``. Adjacent cells are pooled left to right until each group's
    expected count is at least 1; the upper tail folds into the last group.
    Degrees of freedom = groups - 1. Returns 0.0 on non-integer support.
    """
    x = _as_array(samples)
    n = x.size
    if n == 0 or np.any(x < 0) or np.any(x != np.floor(x)):
        return 0.0
    kmax = int(x.max())
    observed = np.bincount(x.astype(np.int64), minlength=kmax + 1).astype(np.float64)
    expected = np.array([pmf(k) * n for k in range(kmax + 1)] + [tail_mass(kmax + 1) * n])
    observed = np.append(observed, 0.0)
    groups = []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= 1.0:
            groups.append((acc_o, acc_e))
            acc_o = acc_e = 0.0
    if acc_e > 0.0 or acc_o > 0.0:
        if groups:
            last_o, last_e = groups[-1]
            groups[-1] = (last_o + acc_o, last_e + acc_e)
        else:
            groups.append((acc_o, acc_e))
    if len(groups) < 2:
        return 1.0
    g = 0.0
    for o, e in groups:
        if o > 0.0:
            if e <= 0.0:
                return 0.0
            g += o * math.log(o / e)
    g *= 2.0
    return chi2_sf(max(g, 0.0), len(groups) - 1)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov


def kolmogorov_sf(lam: float) -> float:
    """Asymptotic two-sided KS survival function Q_KS(lambda); series truncated
    when terms drop below 1e-10."""
    if lam < 0.1:
        return 1.0  # true tail mass below 1e-67; avoids series cancellation
    total = 0.0
    sign = 1.0
    for j in range(1, 200):
        term = math.exp(-2.0 * j * j * lam * lam)
        total += sign * term
        if term < 1e-10:
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


def _ks_p(d: float, n_eff: float) -> float:
    sq = math.sqrt(n_eff)
    return kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS: supremum distance between empirical CDFs (right-continuous
    steps, so ties are handled by counting <= at every pooled point) and its
    asymptotic p-value."""
    xa = np.sort(_as_array(a))
    xb = np.sort(_as_array(b))
    na, nb = xa.size, xb.size
    if na < 5 or nb < 5:
        raise SampleTooSmall("two-sample KS needs at least 5 points per sample")
    pooled = np.concatenate([xa, xb])
    cdf_a = np.searchsorted(xa, pooled, side="right") / na
    cdf_b = np.searchsorted(xb, pooled, side="right") / nb
    d = float(np.abs(cdf_a - cdf_b).max())
    n_eff = na * nb / (na + nb)
    return d, _ks_p(d, n_eff)


def ks_one_sample(samples, cdf) -> tuple[float, float]:
    """One-sample KS against an analytic CDF."""
    x = np.sort(_as_array(samples))
    n = x.size
    if n < 5:
        raise SampleTooSmall("one-sample KS needs at least 5 points")
    f = np.array([cdf(v) for v in x], dtype=np.float64)
    i = np.arange(1, n + 1)
    d = float(max(np.abs(i / n - f).max(), np.abs(f - (i - 1) / n).max()))
    return d, _ks_p(d, float(n))
