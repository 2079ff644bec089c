"""Scoring of detected drifts against gold standards."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .gradual import GradualDrift
from .sudden import SuddenDrift


@dataclass
class EvalResult:
    tp: int
    fp: int
    fn: int
    mean_delay: float
    per_drift: list = field(default_factory=list)

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f_score(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def to_json(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "precision": self.precision,
                "recall": self.recall, "f_score": self.f_score, "mean_delay": self.mean_delay,
                "per_drift": [{"gold": g, "detected": d, "delay": dl} for g, d, dl in self.per_drift]}

    def summary(self) -> str:
        return (f"TP={self.tp} FP={self.fp} FN={self.fn} precision={self.precision:.3f} "
                f"recall={self.recall:.3f} F={self.f_score:.3f} mean_delay={self.mean_delay:.1f}")


def _mean(xs):
    return sum(xs) / len(xs) if xs else 0.0


def score_sudden(detected: Sequence[SuddenDrift], gold: Sequence[int]) -> EvalResult:
    """Match each gold drift to the earliest detection inside ``[g, next gold)``."""
    dets = sorted(detected, key=lambda d: d.position)
    gold = sorted(gold)
    used = [False] * len(dets)
    per, delays = [], []
    for k, g in enumerate(gold):
        nxt = gold[k + 1] if k + 1 < len(gold) else float("inf")
        hit = None
        for j, d in enumerate(dets):
            if not used[j] and g <= d.position < nxt:
                hit = j
                break
        if hit is None:
            per.append((g, None, None))
            continue
        used[hit] = True
        delay = dets[hit].confirmed_at - g
        delays.append(delay)
        per.append((g, dets[hit].position, delay))
    tp = len(delays)
    return EvalResult(tp, len(dets) - tp, len(gold) - tp, _mean(delays), per)


def score_gradual(detected: Sequence[GradualDrift], gold: Sequence[tuple[int, int]]) -> EvalResult:
    """A detected interval is a hit when it contains an unmatched gold interval's centre."""
    dets = sorted(detected, key=lambda d: (d.start, d.end))
    gold = sorted(tuple(g) for g in gold)
    matched = [False] * len(gold)
    per, delays = [], []
    fp = 0
    for d in dets:
        hit = None
        for k, (s, e) in enumerate(gold):
            if not matched[k] and d.start <= (s + e) // 2 <= d.end:
                hit = k
                break
        if hit is None:
            fp += 1
            continue
        matched[hit] = True
        delay = d.confirmed_at - gold[hit][1]
        delays.append(delay)
        per.append((list(gold[hit]), [d.start, d.end], delay))
    for k, g in enumerate(gold):
        if not matched[k]:
            per.append((list(g), None, None))
    per.sort(key=lambda row: row[0])
    tp = len(delays)
    return EvalResult(tp, fp, len(gold) - tp, _mean(delays), per)
