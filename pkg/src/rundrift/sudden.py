"""Streaming sudden drift detection over sliding windows of runs.

Two adjacent windows of ``w`` traces each (reference, then detection) slide
over the trace stream. Each window keeps its own directly-precedes counts,
so runs are induced by the concurrency relation of the window they sit in.
Every step runs a chi-square test of independence on the windows' run
frequencies; a drift is reported once the p-value has stayed below the
threshold for ``phi`` consecutive tests.
"""
from __future__ import annotations

import csv
import logging
import math
from collections import Counter, deque
from dataclasses import dataclass
from typing import IO, Callable, Iterable, Iterator

from .concurrency import ConcurrencyState
from .runs import RunCache
from .stats import counts_p_value

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Inconsistent detector configuration."""


@dataclass
class DetectorConfig:
    """Sudden detector settings.

    ``min_window=None`` derives the floor from the first composite window
    (see :func:`min_window_for_test`). ``max_buffer`` defaults to
    ``20 * init_window`` and ``max_window`` to half the buffer.
    """

    init_window: int = 100
    max_buffer: int | None = None
    chi_threshold: float = 0.05
    phi_divisor: int = 3
    min_window: int | None = None
    max_window: int | None = None
    adaptive: bool = True

    def __post_init__(self):
        if self.max_buffer is None:
            self.max_buffer = 20 * self.init_window
        if self.max_window is None:
            self.max_window = self.max_buffer // 2
        self.validate()

    def validate(self):
        if self.init_window < 1 or self.phi_divisor < 1:
            raise ConfigError("init_window and phi_divisor must be positive")
        if not 0.0 < self.chi_threshold < 1.0:
            raise ConfigError("chi_threshold must lie in (0, 1)")
        lo = self.min_window if self.min_window is not None else 1
        if lo < 1 or not lo <= self.init_window <= self.max_window:
            raise ConfigError("need 1 <= min_window <= init_window <= max_window")
        if 2 * self.max_window > self.max_buffer:
            raise ConfigError("max_buffer must hold two windows of max_window")


@dataclass(frozen=True)
class SuddenDrift:
    """A confirmed sudden drift.

    ``position`` is the stream index of the trace whose test first dropped
    below the threshold; ``juxtaposition`` is the first index of the
    detection window at that test.
    """

    position: int
    confirmed_at: int
    window_at_detection: int
    juxtaposition: int

    @property
    def delay(self) -> int:
        return self.confirmed_at - self.position

    def to_json(self) -> dict:
        return {"type": "sudden", "position": self.position, "confirmed_at": self.confirmed_at,
                "delay": self.delay, "window": self.window_at_detection,
                "juxtaposition": self.juxtaposition}

    @classmethod
    def from_json(cls, obj: dict) -> "SuddenDrift":
        return cls(int(obj["position"]), int(obj["confirmed_at"]), int(obj.get("window", 0)),
                   int(obj.get("juxtaposition", obj["position"])))


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def adapt_window(prev_distinct: int, new_distinct: int, w: int, cfg: DetectorConfig) -> int:
    """Scale ``w`` by the evolution ratio of distinct runs, then clamp."""
    if prev_distinct < 1:
        raise ValueError("prev_distinct must be >= 1")
    lo = cfg.min_window if cfg.min_window is not None else 1
    return min(cfg.max_window, max(lo, round_half_up(w * new_distinct / prev_distinct)))


def min_window_for_test(runs: Iterable[str] | Counter, max_w: int = 1_000_000) -> int:
    """Smallest w at which at most 5% of the 2 x k table cells expect fewer than five.

    Expected cell frequencies are ``w * share`` for each run's share of the
    given distribution, in both windows.
    """
    counts = runs if isinstance(runs, Counter) else Counter(runs)
    total = sum(counts.values())
    if total == 0:
        return 5
    shares = sorted(v / total for v in counts.values() if v > 0)
    cells = 2 * len(shares)
    allowed = math.floor(0.05 * cells + 1e-9)
    # the `allowed` smallest cells may be sparse; the next one must reach five
    k = allowed // 2
    needed = shares[min(k, len(shares) - 1)]
    w = max(1, math.ceil(5.0 / needed - 1e-9))
    while w > 1 and (w - 1) * needed >= 5.0 - 1e-9:
        w -= 1
    return min(w, max_w)


class _Window:
    """A contiguous stream range with its counts, run keys and run histogram."""

    def __init__(self, make_state: Callable[[], ConcurrencyState]):
        self._make_state = make_state
        self.start = 0
        self.end = 0
        self.entries: deque = deque()  # [labels, key]
        self.state = make_state()
        self.hist: Counter = Counter()
        self.keyed_version = None

    def __len__(self):
        return self.end - self.start

    def move(self, start: int, end: int, fetch: Callable[[int], tuple], cache: RunCache):
        if start >= self.end or end <= self.start:
            self.entries.clear()
            self.state = self._make_state()
            self.hist.clear()
            self.keyed_version = None
            self.start = self.end = start
        fresh = []
        while self.start < start:
            labels, key = self.entries.popleft()
            self.state.remove_trace(labels)
            self._drop(key)
            self.start += 1
        while self.end > end:
            labels, key = self.entries.pop()
            self.state.remove_trace(labels)
            self._drop(key)
            self.end -= 1
        while self.start > start:
            self.start -= 1
            entry = [fetch(self.start), None]
            self.state.add_trace(entry[0])
            self.entries.appendleft(entry)
            fresh.append(entry)
        while self.end < end:
            entry = [fetch(self.end), None]
            self.state.add_trace(entry[0])
            self.entries.append(entry)
            fresh.append(entry)
            self.end += 1

        rel = self.state.concurrent_pairs() if self.keyed_version != self.state.version or fresh else None
        if self.keyed_version != self.state.version:
            self.hist.clear()
            for entry in self.entries:
                entry[1] = cache.key(entry[0], rel)
                self.hist[entry[1]] += 1
            self.keyed_version = self.state.version
        else:
            for entry in fresh:
                entry[1] = cache.key(entry[0], rel)
                self.hist[entry[1]] += 1

    def _drop(self, key):
        if key is None:
            return
        n = self.hist[key] - 1
        if n:
            self.hist[key] = n
        else:
            del self.hist[key]


class SuddenDetector:
    """Single-owner streaming state machine; call :meth:`observe` in stream order."""

    def __init__(self, config: DetectorConfig | None = None,
                 state_factory: Callable[[], ConcurrencyState] = ConcurrencyState):
        self.config = config or DetectorConfig()
        self.config.validate()
        self.w = self.config.init_window
        self.min_window = self.config.min_window
        self.buffer: deque = deque(maxlen=self.config.max_buffer)
        self.n_seen = 0
        self.ref = _Window(state_factory)
        self.det = _Window(state_factory)
        self._cache = RunCache()
        self._prev_distinct: int | None = None
        self.d_trace: int | None = None
        self.d_juxt: int | None = None
        self.d_w = -1
        self.d_len = 0
        self.phi = 1
        self.p_series: list[tuple[int, float, int]] = []
        self.drifts: list[SuddenDrift] = []
        self.merged = 0

    def _fetch(self, idx: int) -> tuple:
        return self.buffer[idx - (self.n_seen - len(self.buffer))]

    def observe(self, trace) -> SuddenDrift | None:
        labels = tuple(trace.labels if hasattr(trace, "labels") else trace)
        i = self.n_seen
        self.buffer.append(labels)
        self.n_seen += 1
        w = self.w
        if len(self.buffer) < 2 * w:
            return None

        end = i + 1
        self.ref.move(end - 2 * w, end - w, self._fetch, self._cache)
        self.det.move(end - w, end, self._fetch, self._cache)

        composite = self.ref.hist.keys() | self.det.hist.keys()
        distinct = len(composite)
        if self.min_window is None:
            floor = min_window_for_test(self.ref.hist + self.det.hist)
            self.min_window = max(1, min(self.config.init_window, floor))
        if self.config.adaptive and self._prev_distinct is not None:
            self.w = self._adapt(self._prev_distinct, distinct, w)
        self._prev_distinct = distinct

        p = counts_p_value(self.ref.hist, self.det.hist)
        if p is None:
            log.debug("test inapplicable at trace %d; treated as p=1", i)
            p = 1.0
        self.p_series.append((i, p, w))
        return self._filter(i, p, w)

    def _adapt(self, prev: int, new: int, w: int) -> int:
        cfg = self.config
        return min(cfg.max_window, max(self.min_window, round_half_up(w * new / prev)))

    def _filter(self, i: int, p: float, w: int) -> SuddenDrift | None:
        if p >= self.config.chi_threshold:
            self._clear()
            return None
        self.d_len += 1
        if self.d_trace is None:
            self.d_trace = i
            self.d_juxt = i + 1 - w
            self.d_w = w
            self.phi = max(1, math.ceil(w / self.config.phi_divisor))
        if self.d_len != self.phi:
            return None
        # d_len keeps counting past phi, so a sustained drop is reported once
        drift = SuddenDrift(self.d_trace, i, self.d_w, self.d_juxt)
        if self.drifts and drift.position - self.drifts[-1].position < drift.window_at_detection:
            self.merged += 1
            return None
        self.drifts.append(drift)
        return drift

    def _clear(self):
        self.d_trace = self.d_juxt = None
        self.d_w = -1
        self.d_len = 0
        self.phi = 1

    def run(self, traces: Iterable) -> Iterator[tuple[int, SuddenDrift | None]]:
        for t in traces:
            yield self.n_seen, self.observe(t)

    def write_p_series(self, out: IO[str]) -> None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["stream_index", "p_value", "window_size"])
        for idx, p, w in self.p_series:
            writer.writerow([idx, repr(p), w])


def detect_sudden(traces: Iterable, config: DetectorConfig | None = None) -> list[SuddenDrift]:
    det = SuddenDetector(config)
    for t in traces:
        det.observe(t)
    return det.drifts
