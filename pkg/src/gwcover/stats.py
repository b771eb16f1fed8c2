"""Reference laws, goodness-of-fit helpers and cover-time normalization."""

from dataclasses import dataclass
import math

import numpy as np
from scipy import stats as _sps

from .errors import EmptySample, ValidationError

EULER_GAMMA = 0.5772156649015329

REGIME_TOL = 1e-12


def regime(lam, m):
    if abs(lam - m) <= REGIME_TOL:
        return "lambda=m"
    return "lambda>m" if lam > m else "lambda<m"


@dataclass(frozen=True)
class NormalizedSample:
    """Canonical statistic ``x`` plus the regime-specific form ``x_regime``."""

    x: float
    regime: str
    x_regime: float
    raw: object = None


def canonical_statistic(T, stats):
    """T / (2 s_n sigma_n^2) - n log m - log W, W replaced by the plug-in."""
    if not stats.w_hat > 0:
        raise ValidationError("plug-in W must be positive")
    n = stats.n
    return T / (2 * stats.s_n * float(stats.sigma_sq[-1])) - n * math.log(stats.m) - math.log(stats.w_hat)


def regime_statistic(T, stats):
    """The three regime forms of the cover-time limit.

    lambda > m uses s_n for the infinite series, lambda < m uses the plug-in W
    in place of the geometric approximation of s_n, and lambda = m keeps s_n.
    """
    lam, m, n, w = stats.lam, stats.m, stats.n, stats.w_hat
    if not w > 0:
        raise ValidationError("plug-in W must be positive")
    shift = n * math.log(m) + math.log(w)
    r = regime(lam, m)
    if r == "lambda>m":
        scale = (lam - 1) / (2 * lam ** (n + 1) * stats.s_n)
    elif r == "lambda=m":
        scale = (m - 1) / (2 * m ** (n + 1) * stats.s_n)
    else:
        scale = (m / lam - 1) * (lam - 1) / (2 * w * m ** (n + 1))
    return T * scale - shift


def normalize_cover_time(T, stats, raw=None):
    if not T > 0:
        raise ValidationError(f"cover time must be > 0, got {T}")
    return NormalizedSample(
        x=canonical_statistic(T, stats),
        regime=regime(stats.lam, stats.m),
        x_regime=regime_statistic(T, stats),
        raw=raw,
    )


def gumbel_cdf(x):
    return np.exp(-np.exp(-np.asarray(x, dtype=float)))


def gumbel_sf(x):
    return -np.expm1(-np.exp(-np.asarray(x, dtype=float)))


def gumbel_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-x - np.exp(-x))


def _nonempty(samples):
    a = np.asarray(samples, dtype=float).ravel()
    if a.size == 0:
        raise EmptySample("empty sample")
    return a


def ks_statistic(samples, cdf):
    """One-sample Kolmogorov-Smirnov D and asymptotic p-value."""
    a = _nonempty(samples)
    res = _sps.kstest(a, cdf, method="asymp")
    return float(res.statistic), float(res.pvalue)


def ks_two_sample(x, y):
    """Two-sample KS D and asymptotic p-value (exact handling of ties/atoms)."""
    res = _sps.ks_2samp(_nonempty(x), _nonempty(y), method="asymp")
    return float(res.statistic), float(res.pvalue)


def empirical_cdf(samples):
    a = np.sort(_nonempty(samples))

    def F(x):
        return np.searchsorted(a, x, side="right") / a.size

    return F


def poisson_pmf(k, rate):
    if rate < 0:
        raise ValidationError(f"Poisson rate must be >= 0, got {rate}")
    if k < 0:
        return 0.0
    if rate == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(k * math.log(rate) - rate - math.lgamma(k + 1))


def tv_distance_pmf(pmf, rate, kmax=10):
    """TV distance between a pmf table over 0..kmax (tail lumped) and Poisson(rate)."""
    p = np.zeros(kmax + 2)
    q = np.zeros(kmax + 2)
    pmf = np.asarray(pmf, dtype=float)
    head = min(pmf.size, kmax + 1)
    p[:head] = pmf[:head]
    p[-1] = pmf[head:].sum()
    q[:-1] = [poisson_pmf(k, rate) for k in range(kmax + 1)]
    q[-1] = max(0.0, 1.0 - q[:-1].sum())
    return 0.5 * float(np.abs(p - q).sum())


def tv_distance(counts, rate, kmax=10):
    """TV distance between the empirical law of integer ``counts`` and Poisson(rate)."""
    c = np.asarray(counts).ravel()
    if c.size == 0:
        raise EmptySample("empty count sample")
    pmf = np.bincount(c.astype(np.int64)) / c.size
    return tv_distance_pmf(pmf, rate, kmax)


def mean_se(x):
    x = _nonempty(x)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.inf


def var_se(x):
    """Sample variance and its standard error (fourth-moment formula)."""
    x = _nonempty(x)
    n = x.size
    d = x - x.mean()
    s2 = float(d @ d / (n - 1))
    m4 = float(np.mean(d**4))
    return s2, math.sqrt(max(m4 - s2**2 * (n - 3) / (n - 1), 0.0) / n)


def proportion_se(p, n):
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def within(value, target, se, k):
    return abs(value - target) <= k * se
