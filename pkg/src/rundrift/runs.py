"""Trace to partially ordered run conversion and run histograms.

A run is the trace's causality order after dropping orderings between
concurrent labels, kept as its transitive reduction over occurrence-indexed
nodes (``a#1``, ``a#2`` for repeated labels). Two runs are equal iff their
canonical keys are equal.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .stats import Histogram


@dataclass(frozen=True)
class Run:
    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    @property
    def canonical_key(self) -> str:
        return canonical_key(self.nodes, self.edges)


def canonical_key(nodes: Iterable[str], edges: Iterable[tuple[str, str]]) -> str:
    node_part = ";".join(sorted(nodes))
    edge_part = ";".join(sorted(f"{s}>{d}" for s, d in edges))
    return f"{node_part}|{edge_part}"


def _node_names(labels: Sequence[str]) -> list[str]:
    seen: Counter = Counter()
    names = []
    for a in labels:
        seen[a] += 1
        names.append(f"{a}#{seen[a]}")
    return names


def causality(labels: Sequence[str], concurrent) -> list[int]:
    """Bitmask per position of the later positions it causally precedes.

    Every earlier/later pair of the trace is ordered unless the two labels
    are concurrent; the surviving pairs are then closed transitively.
    """
    n = len(labels)
    reach = [0] * n
    for i in range(n - 1, -1, -1):
        a = labels[i]
        direct = 0
        for j in range(i + 1, n):
            b = labels[j]
            if a == b or frozenset((a, b)) not in concurrent:
                direct |= 1 << j
        acc = direct
        d = direct
        while d:
            low = d & -d
            acc |= reach[low.bit_length() - 1]
            d ^= low
        reach[i] = acc
    return reach


def reduction(reach: list[int]) -> list[int]:
    """Transitive reduction of a closed relation given as bitmasks."""
    out = []
    for r in reach:
        covered = 0
        d = r
        while d:
            low = d & -d
            covered |= reach[low.bit_length() - 1]
            d ^= low
        out.append(r & ~covered)
    return out


def run_edges(labels: Sequence[str], concurrent) -> list[tuple[int, int]]:
    red = reduction(causality(labels, concurrent))
    edges = []
    for i, m in enumerate(red):
        while m:
            low = m & -m
            edges.append((i, low.bit_length() - 1))
            m ^= low
    return edges


def trace_to_run(trace, concurrent=frozenset()) -> Run:
    labels = trace.labels if hasattr(trace, "labels") else tuple(trace)
    names = _node_names(labels)
    edges = frozenset((names[i], names[j]) for i, j in run_edges(labels, concurrent))
    return Run(tuple(sorted(names)), edges)


def run_key(labels: Sequence[str], concurrent=frozenset()) -> str:
    """Canonical key of the run of ``labels``; skips building a Run object."""
    names = _node_names(labels)
    return canonical_key(names, ((names[i], names[j]) for i, j in run_edges(labels, concurrent)))


def run_histogram(runs: Iterable[Run | str]) -> Histogram:
    return Histogram(Counter(r if isinstance(r, str) else r.canonical_key for r in runs))


class RunCache:
    """Memo of run keys per (concurrency relation, label sequence)."""

    def __init__(self, max_entries: int = 200_000):
        self.max_entries = max_entries
        self._memo: dict = {}

    def key(self, labels: tuple[str, ...], concurrent: frozenset) -> str:
        k = (concurrent, labels)
        hit = self._memo.get(k)
        if hit is None:
            if len(self._memo) >= self.max_entries:
                self._memo.clear()
            hit = self._memo[k] = run_key(labels, concurrent)
        return hit
