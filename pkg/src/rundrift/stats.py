"""Chi-square machinery for run distributions.

The chi-square CDF is the regularized lower incomplete gamma function
P(df/2, x/2), evaluated by its power series below ``a + 1`` and by a Lentz
continued fraction for the upper tail otherwise.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


class TestInapplicable(ValueError):
    """The test has fewer than two usable categories."""

    __test__ = False


class DegenerateCategory(ValueError):
    """A goodness-of-fit category has non-positive expected count."""


@dataclass
class Histogram:
    counts: Counter = field(default_factory=Counter)

    def __post_init__(self):
        if not isinstance(self.counts, Counter):
            self.counts = Counter(self.counts)
        if any(v < 0 for v in self.counts.values()):
            raise ValueError("histogram counts must be non-negative")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def __len__(self):
        return sum(1 for v in self.counts.values() if v > 0)

    def scaled(self, k: int) -> "Histogram":
        return Histogram(Counter({c: v * k for c, v in self.counts.items()}))


@dataclass
class ContingencyTable:
    categories: list[str]
    ref_counts: list[int]
    det_counts: list[int]

    @classmethod
    def from_counts(cls, ref: Mapping[str, int], det: Mapping[str, int]) -> "ContingencyTable":
        cats = sorted(set(ref) | set(det))
        return cls(cats, [ref.get(c, 0) for c in cats], [det.get(c, 0) for c in cats])


@dataclass
class AlignedHistograms:
    categories: list[str]
    h_before: list[int]
    h_in: list[int]
    h_after: list[int]
    pooled: list[str] = field(default_factory=list)

    @property
    def df(self) -> int:
        return len(self.categories) - 1

    @property
    def degenerate(self) -> bool:
        return self.df < 1


RARE = "<rare>"


def _log_prefactor(a: float, x: float) -> float:
    return a * math.log(x) - x - math.lgamma(a)


def _gamma_series(a: float, x: float) -> float:
    """Lower regularized gamma P(a, x) by power series (x < a + 1)."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(_log_prefactor(a, x))


def _gamma_cf(a: float, x: float) -> float:
    """Upper regularized gamma Q(a, x) by continued fraction (x >= a + 1)."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(_log_prefactor(a, x)) * h


def chi2_cdf(x: float, df: int) -> float:
    if df < 1:
        raise ValueError("df must be >= 1")
    a, hx = df / 2.0, x / 2.0
    if hx <= 0:
        return 0.0
    if hx < a + 1.0:
        return min(1.0, _gamma_series(a, hx))
    return max(0.0, 1.0 - _gamma_cf(a, hx))


def chi2_sf(x: float, df: int) -> float:
    """Upper tail 1 - CDF, computed directly to keep small p-values exact."""
    if df < 1:
        raise ValueError("df must be >= 1")
    a, hx = df / 2.0, x / 2.0
    if hx <= 0:
        return 1.0
    if hx < a + 1.0:
        return max(0.0, 1.0 - _gamma_series(a, hx))
    return min(1.0, _gamma_cf(a, hx))


def chi2_critical(alpha: float, df: int, tol: float = 1e-13) -> float:
    """Point x where the upper tail equals ``alpha``, by bisection.

    ``tol`` is relative to x, which keeps precision for small critical values
    where the density is steep.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    lo, hi = 0.0, max(1.0, float(df))
    while chi2_sf(hi, df) > alpha:
        lo, hi = hi, hi * 2.0
    for _ in range(2000):
        if hi - lo <= tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if chi2_sf(mid, df) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def chi2_statistic(table: ContingencyTable) -> tuple[float, int]:
    """Pearson statistic of a 2 x k table and its degrees of freedom.

    Categories empty in both columns are dropped first.
    """
    rows = [(r, d) for r, d in zip(table.ref_counts, table.det_counts) if r + d > 0]
    if any(r < 0 or d < 0 for r, d in rows):
        raise ValueError("contingency counts must be non-negative")
    n_ref = sum(r for r, _ in rows)
    n_det = sum(d for _, d in rows)
    if len(rows) < 2 or n_ref == 0 or n_det == 0:
        raise TestInapplicable("need two non-empty columns and at least two categories")
    n = n_ref + n_det
    stat = 0.0
    for r, d in rows:
        tot = r + d
        e_r = tot * n_ref / n
        e_d = tot * n_det / n
        stat += (r - e_r) ** 2 / e_r + (d - e_d) ** 2 / e_d
    return stat, len(rows) - 1


def chi2_independence(table: ContingencyTable) -> float:
    """p-value of the chi-square test of independence (no Yates correction)."""
    stat, df = chi2_statistic(table)
    if stat <= 0.0:
        return 1.0
    return chi2_sf(stat, df)


def counts_p_value(ref: Mapping[str, int], det: Mapping[str, int]) -> float | None:
    """Independence p-value straight from two count maps; None if inapplicable."""
    n_ref = sum(ref.values())
    n_det = sum(det.values())
    n = n_ref + n_det
    if n_ref == 0 or n_det == 0:
        return None
    stat = 0.0
    k = 0
    for c in ref.keys() | det.keys():
        r = ref.get(c, 0)
        d = det.get(c, 0)
        tot = r + d
        if tot == 0:
            continue
        k += 1
        e_r = tot * n_ref / n
        e_d = tot * n_det / n
        stat += (r - e_r) ** 2 / e_r + (d - e_d) ** 2 / e_d
    if k < 2:
        return None
    if stat <= 1e-12 * n:
        return 1.0
    return chi2_sf(stat, k - 1)


def gof_statistic(observed: Sequence[float], expected: Sequence[float]) -> float:
    if len(observed) != len(expected):
        raise ValueError("observed and expected differ in length")
    total = 0.0
    for i, (o, e) in enumerate(zip(observed, expected)):
        if e <= 0:
            raise DegenerateCategory(f"category {i} has expected count {e}")
        total += (o - e) ** 2 / e
    return total


def align(h_before: Histogram, h_in: Histogram, h_after: Histogram,
          pool_below: float = 1.0) -> AlignedHistograms:
    """Put three histograms on one category axis, pooling rare categories.

    A category is rare when its expected count in ``h_in`` under the
    equal-weight mixture of the two outer histograms (each rescaled to
    ``h_in``'s total) falls below ``pool_below``. Rare categories are summed
    into one bucket that sorts last. Pass ``pool_below=0`` to disable pooling.
    """
    if h_in.total <= 0:
        raise ValueError("interval histogram is empty")
    cats = sorted(set(h_before.counts) | set(h_in.counts) | set(h_after.counts))
    nb, na, ni = h_before.total, h_after.total, h_in.total

    def expected(c):
        e = 0.0
        parts = 0
        if nb:
            e += h_before.counts.get(c, 0) / nb
            parts += 1
        if na:
            e += h_after.counts.get(c, 0) / na
            parts += 1
        return ni * e / parts if parts else 0.0

    kept, rare = [], []
    for c in cats:
        (rare if expected(c) < pool_below else kept).append(c)
    if len(rare) == 1 and pool_below > 0:
        # a lone rare category gains nothing from pooling
        kept.append(rare.pop())
        kept.sort()

    def vec(h):
        v = [h.counts.get(c, 0) for c in kept]
        if rare:
            v.append(sum(h.counts.get(c, 0) for c in rare))
        return v

    categories = kept + ([RARE] if rare else [])
    return AlignedHistograms(categories, vec(h_before), vec(h_in), vec(h_after), pooled=rare)
