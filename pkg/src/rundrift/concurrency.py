"""Windowed alpha concurrency oracle.

Directly-precedes counts are kept with multiplicities so that a trace leaving
a sliding window can be subtracted exactly. Two distinct labels are
concurrent when each directly precedes the other somewhere in the window.
"""
from __future__ import annotations

from collections import Counter
from typing import Callable, Iterable, Sequence

Pair = frozenset
ConcurrencyOracle = Callable[[Iterable[Sequence[str]]], frozenset]


class ConcurrencyState:
    """Directly-precedes counts over the traces currently in a window.

    The concurrent pair set is maintained incrementally; ``version`` is bumped
    whenever it changes so callers can tell when their runs are stale.
    """

    def __init__(self):
        self.dp_counts: Counter = Counter()
        self._pairs: set[frozenset] = set()
        self.version = 0

    def copy(self) -> "ConcurrencyState":
        other = ConcurrencyState()
        other.dp_counts = Counter(self.dp_counts)
        other._pairs = set(self._pairs)
        other.version = self.version
        return other

    def add_trace(self, labels: Sequence[str]) -> "ConcurrencyState":
        counts = self.dp_counts
        for a, b in zip(labels, labels[1:]):
            n = counts[(a, b)]
            counts[(a, b)] = n + 1
            if n == 0 and a != b and counts.get((b, a), 0) > 0:
                self._pairs.add(frozenset((a, b)))
                self.version += 1
        return self

    def remove_trace(self, labels: Sequence[str]) -> "ConcurrencyState":
        counts = self.dp_counts
        pairs = list(zip(labels, labels[1:]))
        need = Counter(pairs)
        for p, k in need.items():
            if counts.get(p, 0) < k:
                raise AssertionError(f"directly-precedes count for {p} would drop below zero")
        for a, b in pairs:
            n = counts[(a, b)] - 1
            if n:
                counts[(a, b)] = n
            else:
                del counts[(a, b)]
                if a != b and counts.get((b, a), 0) > 0:
                    self._pairs.discard(frozenset((a, b)))
                    self.version += 1
        return self

    def concurrent_pairs(self) -> frozenset:
        return frozenset(self._pairs)

    def __eq__(self, other):
        if not isinstance(other, ConcurrencyState):
            return NotImplemented
        return +self.dp_counts == +other.dp_counts

    def __repr__(self):
        return f"ConcurrencyState({dict(self.dp_counts)!r})"


def add_trace(state: ConcurrencyState, trace) -> ConcurrencyState:
    return state.add_trace(_labels(trace))


def remove_trace(state: ConcurrencyState, trace) -> ConcurrencyState:
    return state.remove_trace(_labels(trace))


def concurrent_pairs(state: ConcurrencyState) -> frozenset:
    return state.concurrent_pairs()


def alpha_oracle(traces: Iterable[Sequence[str]]) -> frozenset:
    """Concurrency relation of a whole population of label sequences."""
    state = ConcurrencyState()
    for t in traces:
        state.add_trace(_labels(t))
    return state.concurrent_pairs()


def _labels(trace) -> Sequence[str]:
    return trace.labels if hasattr(trace, "labels") else trace
