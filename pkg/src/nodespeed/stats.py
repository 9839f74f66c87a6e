"""Distribution summaries, simple OLS with a t-test, rank correlation, tail overlap.

Everything here is pure Python. The Student-t tail needed for regression
p-values goes through :func:`betainc_regularized`, a continued-fraction
evaluation of the regularized incomplete beta function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from .config import AnalysisConfig
from .errors import InputError


def _check_finite(values: Sequence[float]) -> None:
    if not all(math.isfinite(v) for v in values):
        raise InputError("non-finite value in sample")


def mean(values: Sequence[float]) -> float:
    if not values:
        raise InputError("mean of empty sample")
    return math.fsum(values) / len(values)


def sample_stdev(values: Sequence[float]) -> float:
    """Standard deviation with the n-1 denominator."""
    n = len(values)
    if n < 2:
        raise InputError("stdev needs at least 2 values")
    m = mean(values)
    return math.sqrt(math.fsum((v - m) ** 2 for v in values) / (n - 1))


def skewness(values: Sequence[float]) -> float:
    """Adjusted Fisher-Pearson sample skewness ``G1``."""
    n = len(values)
    if n < 3:
        raise InputError("skewness needs at least 3 values")
    m = mean(values)
    m2 = math.fsum((v - m) ** 2 for v in values) / n
    m3 = math.fsum((v - m) ** 3 for v in values) / n
    denom = m2**1.5
    # denom can underflow to 0 for tiny but nonzero spreads
    if denom == 0:
        raise InputError("zero variance")
    g1 = m3 / denom
    return math.sqrt(n * (n - 1)) / (n - 2) * g1


def percentile(sorted_values: Sequence[float], q: float) -> float:
    """Linear-interpolation percentile of an already sorted sample, ``q`` in [0, 100]."""
    if not sorted_values:
        raise InputError("percentile of empty sample")
    h = (len(sorted_values) - 1) * q / 100.0
    lo = math.floor(h)
    hi = min(lo + 1, len(sorted_values) - 1)
    return sorted_values[lo] + (h - lo) * (sorted_values[hi] - sorted_values[lo])


@dataclass(frozen=True)
class Summary:
    n: int
    mean: float
    stdev: float
    skewness: float
    minimum: float
    maximum: float
    percentiles: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "stdev": self.stdev,
            "skewness": self.skewness,
            "min": self.minimum,
            "max": self.maximum,
            "percentiles": {str(k): v for k, v in self.percentiles.items()},
        }


def summarize(values: Sequence[float]) -> Summary:
    """Raises :class:`InputError` for fewer than 3 values or zero variance."""
    values = list(values)
    if len(values) < 3:
        raise InputError("summary needs at least 3 values")
    _check_finite(values)
    ordered = sorted(values)
    return Summary(
        n=len(values),
        mean=mean(ordered),
        stdev=sample_stdev(ordered),
        skewness=skewness(ordered),
        minimum=ordered[0],
        maximum=ordered[-1],
        percentiles={q: percentile(ordered, q) for q in range(1, 100)},
    )


# ---------------------------------------------------------------------------
# Incomplete beta and Student t
# ---------------------------------------------------------------------------

_EPS = 1e-16
_TINY = 1e-300


def _betacf(a: float, b: float, x: float, max_iter: int = 10_000) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)`` for ``a, b > 0`` and ``0 <= x <= 1``."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """``P(|T| >= |t|)`` for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0
    if t == 0:
        return 1.0
    return betainc_regularized(df / 2.0, 0.5, df / (df + t * t))


# ---------------------------------------------------------------------------
# Regression and correlation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairedSample:
    x: tuple[float, ...]
    y: tuple[float, ...]
    users: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.x) != len(self.y):
            raise InputError("x and y differ in length")
        if self.users and len(self.users) != len(self.x):
            raise InputError("users and values differ in length")
        _check_finite(self.x)
        _check_finite(self.y)

    @classmethod
    def from_maps(cls, xs: Mapping[str, float], ys: Mapping[str, Optional[float]]) -> "PairedSample":
        """Join two per-user maps on user id, skipping users with a missing ``y``."""
        users = sorted(u for u in xs.keys() & ys.keys() if ys[u] is not None)
        return cls(tuple(xs[u] for u in users), tuple(ys[u] for u in users), tuple(users))

    def __len__(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class Regression:
    n: int
    slope: float
    intercept: float
    r: float
    r_squared: float
    t_statistic: float
    p_value: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "slope": self.slope,
            "intercept": self.intercept,
            "r": self.r,
            "r_squared": self.r_squared,
            # a perfect fit has an infinite t; JSON has no literal for it
            "t_statistic": self.t_statistic if math.isfinite(self.t_statistic) else None,
            "p_value": self.p_value,
        }


def ols_regression(sample: PairedSample) -> Regression:
    """Least-squares line ``y = slope * x + intercept`` with a zero-slope t-test.

    A constant ``y`` gives a zero slope with ``r = 0`` and ``p = 1``.
    """
    n = len(sample)
    if n < 3:
        raise InputError("regression needs at least 3 pairs")
    x, y = sample.x, sample.y
    mx, my = mean(x), mean(y)
    sxx = math.fsum((a - mx) ** 2 for a in x)
    if sxx == 0:
        raise InputError("degenerate regressor")
    syy = math.fsum((b - my) ** 2 for b in y)
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    slope = sxy / sxx
    intercept = my - slope * mx
    df = n - 2
    if syy == 0:
        return Regression(n, slope, intercept, 0.0, 0.0, 0.0, 1.0)
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    sse = max(0.0, math.fsum((b - (slope * a + intercept)) ** 2 for a, b in zip(x, y)))
    if sse == 0:
        t = math.copysign(math.inf, slope)
    else:
        t = slope / math.sqrt(sse / df / sxx)
    return Regression(n, slope, intercept, r, r * r, t, t_two_sided_p(t, df))


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    mx, my = mean(x), mean(y)
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = math.fsum((a - mx) ** 2 for a in x)
    syy = math.fsum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        raise InputError("zero variance")
    return sxy / math.sqrt(sxx * syy)


def rank(values: Sequence[float]) -> list[float]:
    """1-based ranks with ties given their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) != len(y):
        raise InputError("x and y differ in length")
    return pearson(rank(x), rank(y))


# ---------------------------------------------------------------------------
# Tail overlap and histograms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailOverlap:
    n_users: int
    n_high_mono: int
    n_high_mono_and_slow: int
    fraction: float
    empty_tail: bool

    def to_dict(self) -> dict:
        return {
            "n_users": self.n_users,
            "n_high_mono": self.n_high_mono,
            "n_high_mono_and_slow": self.n_high_mono_and_slow,
            "fraction": self.fraction,
            "empty_tail": self.empty_tail,
        }


def tail_overlap(
    speeds: Mapping[str, float],
    monotonicities: Mapping[str, float],
    config: AnalysisConfig = AnalysisConfig(),
) -> TailOverlap:
    """Share of highly monotone users that are also slow.

    High monotonicity means strictly above ``config.monotonicity_threshold``;
    slow means final speed strictly below ``config.slow_speed_threshold``. An
    empty high-monotonicity tail reports ``fraction = 0`` with ``empty_tail``.
    """
    users = speeds.keys() & monotonicities.keys()
    if not users:
        raise InputError("no users shared between speed and topic statistics")
    high = [u for u in users if monotonicities[u] > config.monotonicity_threshold]
    slow = sum(1 for u in high if speeds[u] < config.slow_speed_threshold)
    return TailOverlap(
        n_users=len(users),
        n_high_mono=len(high),
        n_high_mono_and_slow=slow,
        fraction=slow / len(high) if high else 0.0,
        empty_tail=not high,
    )


def histogram(values: Sequence[float], bins: int = 20) -> list[tuple[float, float, int]]:
    """Equal-width bins over ``[min, max]``; the last bin is closed on the right."""
    if not values:
        raise InputError("histogram of empty sample")
    if bins < 1:
        raise InputError("bins must be >= 1")
    lo, hi = min(values), max(values)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    width = (hi - lo) / bins
    edges = [lo + i * width for i in range(bins)] + [hi]
    counts = [0] * bins
    for v in values:
        i = min(int((v - lo) / width), bins - 1)
        counts[i] += 1
    return [(edges[i], edges[i + 1], counts[i]) for i in range(bins)]
