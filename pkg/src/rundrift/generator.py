"""Synthetic event logs with known drift points.

Models are block trees of SEQ, AND, XOR, LOOP and ACT nodes. Edits rewrite
a model at a node path (a tuple of child indices; a LOOP's body is child 0)
and return a new model, which is how the change patterns of the benchmarks
are produced. Segments sampled from different models are then concatenated
(sudden drifts) or blended with a linear schedule (gradual drifts).
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Mapping, Sequence, Union

from .log import Event, EventLog, Trace


class ModelError(ValueError):
    """Invalid model, edit or drift specification."""


@dataclass(frozen=True)
class Act:
    label: str


@dataclass(frozen=True)
class Seq:
    children: tuple = ()


@dataclass(frozen=True)
class And:
    children: tuple = ()


@dataclass(frozen=True)
class Xor:
    children: tuple = ()
    probs: tuple = ()

    def __post_init__(self):
        if len(self.children) != len(self.probs) or not self.children:
            raise ModelError("XOR needs one probability per child")
        if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-9:
            raise ModelError(f"XOR probabilities must be >= 0 and sum to 1, got {self.probs}")


@dataclass(frozen=True)
class Loop:
    body: object
    repeat: float

    def __post_init__(self):
        if not 0.0 <= self.repeat < 1.0:
            raise ModelError("LOOP repeat probability must lie in [0, 1)")

    @property
    def children(self):
        return (self.body,)


Node = Union[Act, Seq, And, Xor, Loop]


@dataclass(frozen=True)
class ProcessModel:
    root: Node

    def to_json(self) -> dict:
        return node_to_json(self.root)

    @classmethod
    def from_json(cls, obj) -> "ProcessModel":
        return cls(node_from_json(obj))

    def labels(self) -> set[str]:
        out = set()

        def walk(n):
            if isinstance(n, Act):
                out.add(n.label)
            else:
                for c in n.children:
                    walk(c)
        walk(self.root)
        return out


def node_to_json(n: Node) -> dict:
    if isinstance(n, Act):
        return {"kind": "ACT", "label": n.label}
    if isinstance(n, Loop):
        return {"kind": "LOOP", "body": node_to_json(n.body), "repeat": n.repeat}
    if isinstance(n, Xor):
        return {"kind": "XOR", "children": [node_to_json(c) for c in n.children],
                "probs": list(n.probs)}
    kind = "SEQ" if isinstance(n, Seq) else "AND"
    return {"kind": kind, "children": [node_to_json(c) for c in n.children]}


def node_from_json(obj) -> Node:
    if isinstance(obj, str):
        return Act(obj)
    try:
        kind = obj["kind"].upper()
        if kind == "ACT":
            return Act(str(obj["label"]))
        if kind == "LOOP":
            return Loop(node_from_json(obj["body"]), float(obj.get("repeat", 0.5)))
        children = tuple(node_from_json(c) for c in obj.get("children", ()))
        if kind == "SEQ":
            return Seq(children)
        if kind == "AND":
            return And(children)
        if kind == "XOR":
            probs = obj.get("probs")
            probs = tuple(float(p) for p in probs) if probs is not None else \
                tuple(1.0 / len(children) for _ in children)
            return Xor(children, probs)
    except (KeyError, TypeError, AttributeError) as exc:
        raise ModelError(f"bad model node {obj!r}: {exc}") from None
    raise ModelError(f"unknown node kind {obj.get('kind')!r}")


def _sample(n: Node, rng: random.Random, out: list):
    if isinstance(n, Act):
        out.append(n.label)
    elif isinstance(n, Seq):
        for c in n.children:
            _sample(c, rng, out)
    elif isinstance(n, Xor):
        _sample(rng.choices(n.children, weights=n.probs)[0], rng, out)
    elif isinstance(n, Loop):
        _sample(n.body, rng, out)
        while rng.random() < n.repeat:
            _sample(n.body, rng, out)
    else:
        parts = []
        for c in n.children:
            sub: list = []
            _sample(c, rng, sub)
            if sub:
                parts.append(sub)
        # uniform over all merges: draw the next source proportionally to what it has left
        pos = [0] * len(parts)
        left = [len(p) for p in parts]
        remaining = sum(left)
        while remaining:
            r = rng.randrange(remaining)
            k = 0
            while r >= left[k]:
                r -= left[k]
                k += 1
            out.append(parts[k][pos[k]])
            pos[k] += 1
            left[k] -= 1
            remaining -= 1


def sample_labels(model: ProcessModel, rng: random.Random) -> list[str]:
    out: list = []
    _sample(model.root, rng, out)
    return out


def sample_trace(model: ProcessModel, rng: random.Random, case_id: str = "",
                 clock: list | None = None) -> Trace:
    """Draw one trace. ``clock`` is a one-element list used as a ms counter.

    Models that can produce the empty word are resampled until non-empty.
    """
    for _ in range(1000):
        labels = sample_labels(model, rng)
        if labels:
            break
    else:
        raise ModelError("model keeps producing empty traces")
    if clock is None:
        return Trace(case_id, tuple(Event(a) for a in labels))
    events = []
    for a in labels:
        clock[0] += 1
        events.append(Event(a, clock[0]))
    return Trace(case_id, tuple(events))


# -- edits -----------------------------------------------------------------

def get_node(root: Node, path: Sequence[int]) -> Node:
    n = root
    for k in path:
        try:
            n = n.children[k]
        except (AttributeError, IndexError, TypeError):
            raise ModelError(f"invalid node path {list(path)}") from None
    return n


def _with_children(n: Node, children: tuple, probs: tuple | None = None) -> Node:
    if isinstance(n, Loop):
        return replace(n, body=children[0])
    if isinstance(n, Xor):
        return Xor(children, probs if probs is not None else n.probs)
    if isinstance(n, Act):
        raise ModelError("activities have no children")
    return replace(n, children=children)


def set_node(root: Node, path: Sequence[int], new: Node) -> Node:
    if not path:
        return new
    parent = get_node(root, path[:-1])
    kids = list(parent.children)
    kids[path[-1]] = new
    return set_node(root, path[:-1], _with_children(parent, tuple(kids)))


def _fragment(obj) -> Node:
    if isinstance(obj, (Act, Seq, And, Xor, Loop)):
        return obj
    return node_from_json(obj)


def _insert(root, path, fragment, position=0):
    target = get_node(root, path)
    if not isinstance(target, (Seq, And)):
        raise ModelError("insertion target must be a SEQ or AND block")
    kids = list(target.children)
    kids.insert(position, fragment)
    return set_node(root, path, _with_children(target, tuple(kids)))


def _remove(root, path):
    if not path:
        raise ModelError("cannot remove the root")
    parent = get_node(root, path[:-1])
    get_node(root, path)
    k = path[-1]
    if isinstance(parent, Loop):
        raise ModelError("cannot remove a loop body")
    kids = parent.children[:k] + parent.children[k + 1:]
    if isinstance(parent, Xor):
        probs = parent.probs[:k] + parent.probs[k + 1:]
        s = sum(probs)
        if not kids or s <= 0:
            raise ModelError("cannot remove the only live XOR branch")
        return set_node(root, path[:-1], Xor(kids, tuple(p / s for p in probs)))
    return set_node(root, path[:-1], _with_children(parent, kids))


def apply_edit(model: ProcessModel, edit: Mapping) -> ProcessModel:
    """Apply one edit, given as a mapping with ``op``, ``path`` and op arguments.

    Supported ops: insert_fragment, remove_fragment, parallelize,
    sequentialize, make_loopable, make_skippable, swap_fragments,
    duplicate_fragment, substitute_fragment, change_branch_probability.
    A list of edits is applied in order.
    """
    if isinstance(edit, (list, tuple)):
        for e in edit:
            model = apply_edit(model, e)
        return model
    op = edit.get("op")
    path = tuple(edit.get("path", ()))
    root = model.root
    if op == "insert_fragment":
        root = _insert(root, path, _fragment(edit["fragment"]), int(edit.get("position", 0)))
    elif op == "remove_fragment":
        root = _remove(root, path)
    elif op == "parallelize":
        n = get_node(root, path)
        if not isinstance(n, Seq):
            raise ModelError("parallelize expects a SEQ block")
        root = set_node(root, path, And(n.children))
    elif op == "sequentialize":
        n = get_node(root, path)
        if not isinstance(n, And):
            raise ModelError("sequentialize expects an AND block")
        root = set_node(root, path, Seq(n.children))
    elif op == "make_loopable":
        root = set_node(root, path, Loop(get_node(root, path), float(edit.get("repeat", 0.3))))
    elif op == "make_skippable":
        p = float(edit.get("skip", 0.5))
        root = set_node(root, path, Xor((get_node(root, path), Seq()), (1.0 - p, p)))
    elif op == "swap_fragments":
        other = tuple(edit["other"])
        a, b = get_node(root, path), get_node(root, other)
        root = set_node(set_node(root, path, b), other, a)
    elif op == "duplicate_fragment":
        frag = get_node(root, path)
        root = _insert(root, tuple(edit.get("target", path[:-1])), frag, int(edit.get("position", 0)))
    elif op == "substitute_fragment":
        get_node(root, path)
        root = set_node(root, path, _fragment(edit["fragment"]))
    elif op == "change_branch_probability":
        n = get_node(root, path)
        if not isinstance(n, Xor):
            raise ModelError("change_branch_probability expects an XOR block")
        root = set_node(root, path, Xor(n.children, tuple(float(p) for p in edit["probs"])))
    else:
        raise ModelError(f"unknown edit op {op!r}")
    return ProcessModel(root)


# -- composition -----------------------------------------------------------

@dataclass
class GoldStandard:
    sudden_positions: list[int] = field(default_factory=list)
    gradual_intervals: list[tuple[int, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"sudden": list(self.sudden_positions),
                "gradual": [list(iv) for iv in self.gradual_intervals]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "GoldStandard":
        try:
            sudden = [int(x) for x in obj.get("sudden", [])]
            gradual = [(int(a), int(b)) for a, b in obj.get("gradual", [])]
        except (TypeError, ValueError, AttributeError) as exc:
            raise ModelError(f"bad gold standard: {exc}") from None
        return cls(sudden, gradual)


@dataclass
class DriftSpec:
    kind: str
    segments: list[tuple[ProcessModel, int]]
    slope: float = 0.002

    def __post_init__(self):
        if self.kind not in ("sudden", "gradual"):
            raise ModelError(f"unknown drift kind {self.kind!r}")
        if not self.segments:
            raise ModelError("at least one segment is required")
        if any(n <= 0 for _, n in self.segments):
            raise ModelError("segment trace counts must be positive")
        if not 0.0 < self.slope <= 1.0:
            raise ModelError("slope must lie in (0, 1]")


def _make_log(models_per_trace: Sequence[ProcessModel], rng: random.Random) -> EventLog:
    clock = [0]
    traces = [sample_trace(m, rng, f"case{i}", clock) for i, m in enumerate(models_per_trace)]
    return EventLog(traces)


def compose_sudden(spec: DriftSpec, seed: int = 0) -> tuple[EventLog, GoldStandard]:
    rng = random.Random(seed)
    plan: list = []
    gold = GoldStandard()
    for k, (model, n) in enumerate(spec.segments):
        if k:
            gold.sudden_positions.append(len(plan))
        plan.extend([model] * n)
    return _make_log(plan, rng), gold


def transition_length(slope: float) -> int:
    return math.ceil(1.0 / slope - 1e-9)


def _gradual_plan(a, b, pre, post, slope, rng, offset=0):
    plan = [a] * pre
    length = transition_length(slope)
    for i in range(length):
        p_a = max(0.0, 1.0 - slope * i)
        plan.append(a if rng.random() < p_a else b)
    plan.extend([b] * post)
    return plan, (offset + pre, offset + pre + length)


def compose_gradual(model_a: ProcessModel, model_b: ProcessModel, pre_count: int, post_count: int,
                    slope: float = 0.002, seed: int = 0) -> tuple[EventLog, GoldStandard]:
    """``pre_count`` traces of A, a linear A-to-B transition, ``post_count`` of B.

    During the transition trace ``i`` comes from A with probability
    ``max(0, 1 - slope * i)``; the transition lasts ``ceil(1 / slope)`` traces.
    """
    if slope <= 0:
        raise ModelError("slope must be positive")
    rng = random.Random(seed)
    plan, interval = _gradual_plan(model_a, model_b, pre_count, post_count, slope, rng)
    return _make_log(plan, rng), GoldStandard(gradual_intervals=[interval])


def compose_gradual_chain(spec: DriftSpec, seed: int = 0) -> tuple[EventLog, GoldStandard]:
    """Consecutive segments joined by linear transitions (segment counts exclude them)."""
    rng = random.Random(seed)
    plan: list = []
    gold = GoldStandard()
    length = transition_length(spec.slope)
    for k, (model, n) in enumerate(spec.segments):
        if k:
            prev = spec.segments[k - 1][0]
            start = len(plan)
            for i in range(length):
                plan.append(prev if rng.random() < max(0.0, 1.0 - spec.slope * i) else model)
            gold.gradual_intervals.append((start, start + length))
        plan.extend([model] * n)
    return _make_log(plan, rng), gold


def compose(spec: DriftSpec, seed: int = 0) -> tuple[EventLog, GoldStandard]:
    if spec.kind == "sudden":
        return compose_sudden(spec, seed)
    return compose_gradual_chain(spec, seed)


# -- bundled base model and benchmark patterns -------------------------------

def base_model() -> ProcessModel:
    """Loan-application style model: 15 activities, a loop, an AND and XOR blocks."""
    text = resources.files("rundrift").joinpath("data/base_model.json").read_text("utf-8")
    return ProcessModel.from_json(json.loads(text))


def _act(label):
    return {"kind": "ACT", "label": label}


# Edits on the bundled base model, keyed by change-pattern code.
PATTERN_EDITS: dict[str, list[dict]] = {
    "re": [{"op": "insert_fragment", "path": [], "position": 4, "fragment": _act("check_fraud_records")}],
    "pl": [{"op": "parallelize", "path": [5, 0, 0]}],
    "lp": [{"op": "make_loopable", "path": [4], "repeat": 0.4}],
    "cb": [{"op": "make_skippable", "path": [3, 0]}],
    "sw": [{"op": "swap_fragments", "path": [5, 0, 0, 0], "other": [5, 0, 0, 1]}],
    "fr": [{"op": "change_branch_probability", "path": [5], "probs": [0.3, 0.7]}],
    "cp": [{"op": "duplicate_fragment", "path": [4], "target": [5, 0], "position": 2}],
    "rp": [{"op": "substitute_fragment", "path": [4], "fragment": _act("automated_eligibility_scoring")}],
    "cf": [{"op": "substitute_fragment", "path": [5, 0, 0],
            "fragment": {"kind": "XOR", "children": [_act("prepare_acceptance_pack"),
                                                     _act("check_if_home_insurance_quote_requested")],
                         "probs": [0.5, 0.5]}}],
}


def altered_model(pattern: str | Sequence[str], model: ProcessModel | None = None) -> ProcessModel:
    """Base model (or ``model``) with one pattern, or several nested in order."""
    model = model or base_model()
    codes = [pattern] if isinstance(pattern, str) else list(pattern)
    for code in codes:
        try:
            model = apply_edit(model, PATTERN_EDITS[code])
        except KeyError:
            raise ModelError(f"unknown change pattern {code!r}") from None
    return model


def alternating_spec(model_a: ProcessModel, model_b: ProcessModel, segments: int = 10,
                     length: int = 500) -> DriftSpec:
    return DriftSpec("sudden", [((model_a, model_b)[k % 2], length) for k in range(segments)])


def spec_from_json(obj: Mapping) -> DriftSpec:
    """Build a DriftSpec from its JSON form.

    Each segment is ``{"count": n, "model": <node or "base">, "patterns": [...],
    "edits": [...]}``; patterns and edits are applied to the model in order.
    """
    try:
        kind = obj.get("kind", "sudden")
        segments = []
        for seg in obj["segments"]:
            m = seg.get("model", "base")
            model = base_model() if m == "base" else ProcessModel.from_json(m)
            if seg.get("patterns"):
                model = altered_model(seg["patterns"], model)
            if seg.get("edits"):
                model = apply_edit(model, seg["edits"])
            segments.append((model, int(seg["count"])))
        return DriftSpec(kind, segments, float(obj.get("slope", 0.002)))
    except (KeyError, TypeError, AttributeError) as exc:
        raise ModelError(f"invalid drift spec: {exc}") from None
