import json
import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from rundrift.generator import (PATTERN_EDITS, Act, And, GoldStandard, Loop,
                                ModelError, ProcessModel, Seq, Xor, altered_model,
                                alternating_spec, apply_edit, base_model, compose,
                                compose_gradual, compose_sudden, get_node, sample_labels,
                                sample_trace, spec_from_json)


def shuffles(u, v):
    if not u:
        return {v}
    if not v:
        return {u}
    return {(u[0],) + w for w in shuffles(u[1:], v)} | {(v[0],) + w for w in shuffles(u, v[1:])}


def language(node, bound):
    """Every word of length <= bound that ``node`` can produce (brute force)."""
    if isinstance(node, Act):
        return {(node.label,)}
    if isinstance(node, Xor):
        return set().union(*(language(c, bound) for c, p in zip(node.children, node.probs) if p > 0))
    if isinstance(node, Seq):
        words = {()}
        for c in node.children:
            lc = language(c, bound)
            words = {u + v for u in words for v in lc if len(u) + len(v) <= bound}
        return words
    if isinstance(node, And):
        words = {()}
        for c in node.children:
            lc = language(c, bound)
            words = {w for u in words for v in lc if len(u) + len(v) <= bound for w in shuffles(u, v)}
        return words
    body = language(node.body, bound)
    words = set(body)
    frontier = set(body)
    while frontier:
        frontier = {u + v for u in frontier for v in body if 0 < len(v) and len(u) + len(v) <= bound} - words
        words |= frontier
    return words


acts = st.sampled_from("abcde").map(Act)
models = st.recursive(
    acts,
    lambda kids: st.one_of(
        st.lists(kids, min_size=1, max_size=3).map(lambda cs: Seq(tuple(cs))),
        st.lists(kids, min_size=1, max_size=2).map(lambda cs: And(tuple(cs))),
        st.lists(kids, min_size=2, max_size=2).map(lambda cs: Xor(tuple(cs), (0.5, 0.5))),
        kids.map(lambda b: Loop(b, 0.3)),
    ),
    max_leaves=5,
)


@given(models, st.integers(0, 10_000))
def test_samples_belong_to_the_language(root, seed):
    rng = random.Random(seed)
    words = sample_labels(ProcessModel(root), rng)
    if len(words) <= 8:
        assert tuple(words) in language(root, 8)


@given(models)
def test_json_round_trip(root):
    m = ProcessModel(root)
    assert ProcessModel.from_json(json.loads(json.dumps(m.to_json()))) == m


def test_base_model_samples_are_accepted():
    m = base_model()
    rng = random.Random(0)
    lang = language(m.root, 16)
    n_checked = 0
    for _ in range(300):
        w = tuple(sample_labels(m, rng))
        if len(w) <= 16:
            assert w in lang
            n_checked += 1
    assert n_checked > 200


def test_and_merge_is_uniform():
    m = ProcessModel(And((Act("a"), Seq((Act("b"), Act("c"))))))
    rng = random.Random(7)
    counts = Counter(tuple(sample_labels(m, rng)) for _ in range(6000))
    assert set(counts) == {("a", "b", "c"), ("b", "a", "c"), ("b", "c", "a")}
    for v in counts.values():
        assert abs(v / 6000 - 1 / 3) < 0.03


def test_xor_frequencies():
    m = ProcessModel(Xor((Act("a"), Act("b")), (0.8, 0.2)))
    rng = random.Random(3)
    n_a = sum(sample_labels(m, rng) == ["a"] for _ in range(5000))
    assert abs(n_a / 5000 - 0.8) < 0.03


def test_empty_traces_are_resampled():
    m = ProcessModel(Xor((Act("a"), Seq()), (0.5, 0.5)))
    rng = random.Random(1)
    assert all(sample_trace(m, rng).labels == ("a",) for _ in range(50))
    with pytest.raises(ModelError):
        sample_trace(ProcessModel(Seq()), rng)


def test_sample_trace_clock_is_increasing():
    clock = [0]
    t = sample_trace(base_model(), random.Random(0), "c", clock)
    stamps = [e.timestamp for e in t.events]
    assert stamps == sorted(stamps) and clock[0] == stamps[-1]


@pytest.mark.parametrize("xor_probs", [(0.5, 0.6), (-0.1, 1.1), ()])
def test_bad_xor(xor_probs):
    with pytest.raises(ModelError):
        Xor((Act("a"), Act("b")), xor_probs)


def test_bad_loop_and_node():
    with pytest.raises(ModelError):
        Loop(Act("a"), 1.0)
    with pytest.raises(ModelError):
        ProcessModel.from_json({"kind": "FORK"})


def test_edits():
    m = ProcessModel(Seq((Act("a"), Act("b"), Act("c"))))
    assert get_node(apply_edit(m, {"op": "parallelize", "path": []}).root, []) == And(m.root.children)
    ins = apply_edit(m, {"op": "insert_fragment", "path": [], "position": 1, "fragment": "x"})
    assert [n.label for n in ins.root.children] == ["a", "x", "b", "c"]
    rem = apply_edit(m, {"op": "remove_fragment", "path": [1]})
    assert [n.label for n in rem.root.children] == ["a", "c"]
    sw = apply_edit(m, {"op": "swap_fragments", "path": [0], "other": [2]})
    assert [n.label for n in sw.root.children] == ["c", "b", "a"]
    lp = apply_edit(m, {"op": "make_loopable", "path": [1]})
    assert lp.root.children[1] == Loop(Act("b"), 0.3)
    sk = apply_edit(m, {"op": "make_skippable", "path": [1]})
    assert sk.root.children[1] == Xor((Act("b"), Seq()), (0.5, 0.5))
    seq = apply_edit(apply_edit(m, {"op": "parallelize", "path": []}),
                     {"op": "sequentialize", "path": []})
    assert seq == m
    with pytest.raises(ModelError):
        apply_edit(m, {"op": "parallelize", "path": [7]})
    with pytest.raises(ModelError):
        apply_edit(m, {"op": "teleport", "path": []})
    # edits never mutate their input
    assert m == ProcessModel(Seq((Act("a"), Act("b"), Act("c"))))


def test_xor_branch_removal_renormalises():
    m = ProcessModel(Xor((Act("a"), Act("b"), Act("c")), (0.5, 0.25, 0.25)))
    out = apply_edit(m, {"op": "remove_fragment", "path": [0]})
    assert out.root.probs == (0.5, 0.5)


@pytest.mark.parametrize("code", sorted(PATTERN_EDITS))
def test_patterns_change_behaviour(code):
    base, alt = base_model(), altered_model(code)
    assert alt != base
    rng = random.Random(0)
    lb = Counter(tuple(sample_labels(base, rng)) for _ in range(2000))
    la = Counter(tuple(sample_labels(alt, rng)) for _ in range(2000))
    assert lb != la


def test_unknown_pattern():
    with pytest.raises(ModelError):
        altered_model("zz")


def test_compose_sudden_gold_positions():
    spec = alternating_spec(base_model(), altered_model("re"), segments=10, length=500)
    log, gold = compose_sudden(spec, seed=1)
    assert len(log) == 5000
    assert gold.sudden_positions == [500 * k for k in range(1, 10)]
    assert all("check_fraud_records" not in t.labels for t in log.traces[:500])


def test_compose_is_deterministic():
    spec = alternating_spec(base_model(), altered_model("sw"), segments=3, length=50)
    a, _ = compose(spec, seed=9)
    b, _ = compose(spec, seed=9)
    assert a == b


def test_compose_gradual_schedule():
    a = ProcessModel(Act("a"))
    b = ProcessModel(Act("b"))
    log, gold = compose_gradual(a, b, 1000, 1000, slope=0.002, seed=0)
    assert gold.gradual_intervals == [(1000, 1500)]
    labels = [t.labels[0] for t in log.traces]
    assert set(labels[:1000]) == {"a"} and set(labels[1500:]) == {"b"}
    # linear fade: about half of the transition comes from each side
    frac_b = labels[1000:1500].count("b") / 500
    assert 0.4 < frac_b < 0.6
    assert labels[1000:1100].count("b") < labels[1400:1500].count("b")


def test_gradual_chain_spec():
    spec = spec_from_json({"kind": "gradual", "slope": 0.01, "segments": [
        {"count": 100}, {"count": 100, "patterns": ["re"]}, {"count": 100}]})
    log, gold = compose(spec, seed=2)
    assert len(log) == 500
    assert gold.gradual_intervals == [(100, 200), (300, 400)]


@pytest.mark.parametrize("obj", [{"segments": []}, {"segments": [{"count": 0}]},
                                 {"kind": "weird", "segments": [{"count": 5}]},
                                 {"segments": [{"count": 5, "patterns": ["nope"]}]},
                                 {"nothing": 1}])
def test_invalid_specs(obj):
    with pytest.raises(ModelError):
        spec_from_json(obj)


def test_gold_standard_json():
    g = GoldStandard([500, 1000], [(1, 2)])
    assert GoldStandard.from_json(json.loads(json.dumps(g.to_json()))) == g
    with pytest.raises(ModelError):
        GoldStandard.from_json({"sudden": ["x"]})
