"""Gradual drift detection by mixture testing between consecutive sudden drifts.

For two consecutive sudden drifts, the run histogram of the interval between
them is compared with every positive mixture ``x * before + y * after`` of
the histograms on either side. A gradual drift is declared when some mixture
passes the chi-square goodness-of-fit test.
"""
from __future__ import annotations

import logging
from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .concurrency import alpha_oracle
from .runs import RunCache
from .stats import AlignedHistograms, Histogram, align, chi2_critical
from .sudden import SuddenDrift

log = logging.getLogger(__name__)

EPS = 1e-6
GRID = 64


@dataclass(frozen=True)
class GradualCandidate:
    drift_a: SuddenDrift
    drift_b: SuddenDrift
    h_before: Histogram
    h_in: Histogram
    h_after: Histogram

    def __post_init__(self):
        if not self.drift_a.position < self.drift_b.position:
            raise ValueError("drift_a must precede drift_b")
        if self.h_in.total <= 0:
            raise ValueError("empty transition interval")


@dataclass(frozen=True)
class GradualDrift:
    start: int
    end: int
    x0: float
    y0: float
    gof_value: float
    critical: float
    confirmed_at: int
    df: int = 0

    @property
    def weight_before(self) -> float:
        return self.x0 / (self.x0 + self.y0)

    @property
    def weight_after(self) -> float:
        return self.y0 / (self.x0 + self.y0)

    @property
    def delay(self) -> int:
        """Traces between the estimated end point and its confirmation."""
        return self.confirmed_at - self.end

    def to_json(self) -> dict:
        return {"type": "gradual", "start": self.start, "end": self.end,
                "weight_before": self.weight_before, "weight_after": self.weight_after,
                "x0": self.x0, "y0": self.y0, "gof": self.gof_value, "critical": self.critical,
                "df": self.df, "confirmed_at": self.confirmed_at, "delay": self.delay}

    @classmethod
    def from_json(cls, obj: dict) -> "GradualDrift":
        x0 = float(obj.get("x0", obj.get("weight_before", 0.5)))
        y0 = float(obj.get("y0", obj.get("weight_after", 0.5)))
        end = int(obj["end"])
        confirmed = int(obj.get("confirmed_at", end + int(obj.get("delay", 0))))
        return cls(int(obj["start"]), end, x0, y0, float(obj.get("gof", 0.0)),
                   float(obj.get("critical", 0.0)), confirmed, int(obj.get("df", 0)))


def mixture_objective(before, inside, after):
    """Vectorised f(x, y) = sum (in - (x b + y a))^2 / (x b + y a).

    Categories with zero expectation contribute nothing when unobserved and
    make f infinite otherwise.
    """
    b = np.asarray(before, dtype=float)
    h = np.asarray(inside, dtype=float)
    a = np.asarray(after, dtype=float)
    live = (b > 0) | (a > 0)
    if np.any(h[~live] > 0):
        return lambda x, y: np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, np.inf)
    b, h, a = b[live], h[live], a[live]
    h2 = h * h
    n_in = h.sum()

    def f(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        e = x[..., None] * b + y[..., None] * a
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(e > 0, h2 / e, np.where(h2 > 0, np.inf, 0.0))
        # (h - e)^2 / e summed = sum h^2/e - 2 n_in + sum e
        return terms.sum(axis=-1) - 2.0 * n_in + e.sum(axis=-1)

    return f


def search_bounds(before, inside, after) -> tuple[float, float]:
    totals = [t for t in (float(np.sum(before)), float(np.sum(after))) if t > 0]
    x_max = 2.0 * float(np.sum(inside)) / max(1.0, min(totals) if totals else 1.0)
    return EPS, max(x_max, 10 * EPS)


def _derivatives(b, h2, a):
    """Gradient and Hessian of the mixture objective at (x, y)."""
    def at(x, y):
        e = x * b + y * a
        r = h2 / (e * e)
        g = np.array([np.sum(b * (1.0 - r)), np.sum(a * (1.0 - r))])
        q = 2.0 * h2 / (e * e * e)
        hxy = np.sum(q * a * b)
        hess = np.array([[np.sum(q * b * b), hxy], [hxy, np.sum(q * a * a)]])
        return g, hess
    return at


def minimize_mixture(before, inside, after, iterations: int = 200,
                     tol: float = 1e-12) -> tuple[float, float, float]:
    """Minimise the mixture objective over ``[EPS, x_max]^2``.

    A log-spaced grid provides the starting point; damped Newton steps with
    the analytic Hessian, projected onto the box, then polish it. The
    objective is convex, so this reaches the global minimum even along the
    narrow valleys that appear when the two outer histograms are nearly
    proportional. Returns ``(x0, y0, f(x0, y0))``.
    """
    f = mixture_objective(before, inside, after)
    lo, hi = search_bounds(before, inside, after)
    axis = np.geomspace(lo, hi, GRID)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    vals = f(gx, gy)
    k = int(np.argmin(vals))
    x, y = float(gx.flat[k]), float(gy.flat[k])
    best = float(vals.flat[k])
    if not np.isfinite(best):
        return x, y, best

    b = np.asarray(before, dtype=float)
    h = np.asarray(inside, dtype=float)
    a = np.asarray(after, dtype=float)
    live = (b > 0) | (a > 0)
    deriv = _derivatives(b[live], h[live] ** 2, a[live])
    for _ in range(iterations):
        g, hess = deriv(x, y)
        # variables pinned to a bound by an outward gradient stay fixed
        free = np.array([not ((v <= lo and gv > 0) or (v >= hi and gv < 0))
                         for v, gv in ((x, g[0]), (y, g[1]))])
        if not free.any():
            break
        step = np.zeros(2)
        gf = g[free]
        try:
            sub = -np.linalg.solve(hess[np.ix_(free, free)], gf)
            if not np.all(np.isfinite(sub)) or sub @ gf >= 0:
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            sub = -gf
        step[free] = sub
        t = 1.0
        improved = False
        while t > 1e-12:
            nx = min(hi, max(lo, x + t * step[0]))
            ny = min(hi, max(lo, y + t * step[1]))
            fv = float(f(nx, ny))
            if fv < best:
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        gain = best - fv
        x, y, best = nx, ny, fv
        if gain <= tol * (1.0 + abs(best)):
            break
    return x, y, best


def solve_mixture(before: Sequence[float], inside: Sequence[float], after: Sequence[float],
                  critical: float) -> tuple[float, float] | None:
    x, y, fv = minimize_mixture(before, inside, after)
    return (x, y) if fv < critical else None


def test_gradual(c: GradualCandidate, alpha: float = 0.05) -> GradualDrift | None:
    aligned = align(c.h_before, c.h_in, c.h_after)
    if aligned.degenerate:
        log.debug("degenerate candidate %d-%d: df < 1", c.drift_a.position, c.drift_b.position)
        return None
    return _test_aligned(aligned, c.drift_a, c.drift_b, alpha)


test_gradual.__test__ = False


def _test_aligned(al: AlignedHistograms, a: SuddenDrift, b: SuddenDrift, alpha: float):
    critical = chi2_critical(alpha, al.df)
    x, y, fv = minimize_mixture(al.h_before, al.h_in, al.h_after)
    if not fv < critical:
        return None
    return GradualDrift(a.position, b.position, x, y, fv, critical, b.confirmed_at, al.df)


class _Interval:
    """Traces of one inter-drift interval; keeps at most ``cap`` at each end."""

    def __init__(self, cap: int):
        self.cap = cap
        self.head: list = []
        self.tail: deque = deque(maxlen=cap)
        self.n = 0

    def append(self, item):
        if len(self.head) < self.cap:
            self.head.append(item)
        self.tail.append(item)
        self.n += 1

    def split_at(self, index: int) -> "_Interval":
        """Move items with stream index >= ``index`` into a new interval."""
        moved = []
        while self.tail and self.tail[-1][0] >= index:
            moved.append(self.tail.pop())
            self.n -= 1
        while self.head and self.head[-1][0] >= index:
            self.head.pop()
        if self.n > len(self.tail) and len(self.head) < self.cap:
            log.debug("interval head truncated by split at %d", index)
        nxt = _Interval(self.cap)
        for item in reversed(moved):
            nxt.append(item)
        return nxt

    def _all(self):
        if self.n <= len(self.tail):
            return list(self.tail)
        if self.n <= self.cap + len(self.tail):
            overlap = self.cap + len(self.tail) - self.n
            return self.head + list(self.tail)[overlap:]
        return self.head + list(self.tail)

    def as_before(self):
        return [lbl for _, lbl in self.tail]

    def as_after(self):
        return [lbl for _, lbl in (self.head if self.n > len(self.tail) else self.tail)]

    def as_inside(self):
        items = self._all()
        if len(items) > self.cap:
            half = self.cap // 2
            items = items[:half] + items[-(self.cap - half):]
        return [lbl for _, lbl in items]


def interval_histogram(traces: Iterable[Sequence[str]], cache: RunCache | None = None) -> Histogram:
    """Run histogram of a population under its own alpha concurrency relation."""
    traces = [tuple(t) for t in traces]
    rel = alpha_oracle(traces)
    cache = cache or RunCache()
    return Histogram(Counter(cache.key(t, rel) for t in traces))


class GradualStage:
    """Online consumer of sudden drifts pairing them into gradual intervals.

    Holds at most two pending drifts and three intervals. Pairs are resolved
    greedily in stream order: a drift that ends a confirmed gradual drift
    cannot start another one.
    """

    def __init__(self, alpha: float = 0.05, cap: int = 2000):
        self.alpha = alpha
        self.cap = cap
        self._cache = RunCache()
        self._current = _Interval(cap)
        self._closed: deque = deque(maxlen=2)
        self._drifts: deque = deque(maxlen=2)
        self._consumed: set[int] = set()
        self.gradual: list[GradualDrift] = []
        self.sudden: list[SuddenDrift] = []

    def feed(self, index: int, labels: Sequence[str]) -> None:
        self._current.append((index, tuple(labels)))

    def on_drift(self, drift: SuddenDrift) -> GradualDrift | None:
        nxt = self._current.split_at(drift.position)
        closed = self._current
        self._current = nxt
        result = None
        if len(self._drifts) == 2:
            result = self._resolve(closed)
        self._closed.append(closed)
        self._drifts.append(drift)
        return result

    def finish(self) -> GradualDrift | None:
        result = None
        if len(self._drifts) == 2:
            result = self._resolve(self._current)
        for d in self._drifts:
            self._release(d)
        self._drifts.clear()
        return result

    def _release(self, d: SuddenDrift):
        if d.position not in self._consumed and d not in self.sudden:
            self.sudden.append(d)

    def _resolve(self, after: _Interval) -> GradualDrift | None:
        a, b = self._drifts
        before, inside = self._closed
        found = None
        if a.position not in self._consumed:
            cand = GradualCandidate(
                a, b,
                interval_histogram(before.as_before(), self._cache),
                interval_histogram(inside.as_inside(), self._cache),
                interval_histogram(after.as_after(), self._cache))
            found = test_gradual(cand, self.alpha)
            if found is not None:
                self._consumed.update((a.position, b.position))
                self.gradual.append(found)
        self._release(a)
        return found


def process_queue(drifts: Sequence[SuddenDrift], traces: Iterable[Sequence[str]],
                  alpha: float = 0.05, cap: int = 2000):
    """Classify consecutive drift pairs of a finished stream.

    ``traces`` is the full stream the drifts were detected on. Returns
    ``(gradual_drifts, standalone_sudden_drifts)``.
    """
    stage = GradualStage(alpha, cap)
    pending = deque(sorted(drifts, key=lambda d: d.position))
    for i, labels in enumerate(traces):
        while pending and pending[0].position <= i:
            stage.on_drift(pending.popleft())
        stage.feed(i, labels.labels if hasattr(labels, "labels") else labels)
    while pending:
        stage.on_drift(pending.popleft())
    stage.finish()
    return stage.gradual, stage.sudden
