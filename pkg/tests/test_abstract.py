import random
import warnings
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biascert.abstract import (
    AbstractDataset,
    certify,
    cost_abstract,
    gini_abstract,
    gini_range,
    node_predicates,
    pr_abstract,
    pr_abstract_vector,
    select_by_lub,
    size_abstract,
    split_abstract,
    value_pool,
)
from biascert.bias import BiasModel, normalize, parse_bias_dsl
from biascert.concrete import best_split, cost, gini, infer, pr, train
from biascert.dataset import Predicate, enumerate_predicates
from biascert.interval import Interval
from biascert.oracle import enumerate_bias_set, oracle_robust
from biascert.random_instances import InstanceConfig, random_instance

from conftest import BLACK_7, numeric_dataset

F = Fraction
TARGETED = "flip(l=1, where race=Black and label=0)"


def _abs(data, text, schema):
    return AbstractDataset(data, normalize(parse_bias_dsl(text, schema)))


def test_running_example_branch_intervals(running, schema):
    result = certify(running, parse_bias_dsl(TARGETED, schema), BLACK_7, 1, trace=True)
    assert result.robust and result.label == 1
    assert result.verdict(schema) == "Robust(✓)"
    score3 = Predicate.at_most(1, 3)
    (leaf,) = [t for t in result.traces if t.path == ((score3, False),)]
    assert leaf.intervals == (Interval(0, F(1, 5)), Interval(F(4, 5), 1))
    root = _abs(running, TARGETED, schema)
    assert pr_abstract(root.child(score3, False), 1) == Interval(F(4, 5), 1)


def test_pr_formulas_on_running_example(running, schema):
    assert pr_abstract(_abs(running, "", schema), 1) == Interval.point(F(4, 9))
    assert pr_abstract(_abs(running, "miss(m=1)", schema), 1) == Interval(F(4, 10), F(5, 10))
    assert pr_abstract(_abs(running, "fake(f=1)", schema), 1) == Interval(F(3, 8), F(4, 8))
    assert pr_abstract(_abs(running, "flip(l=1)", schema), 1) == Interval(F(3, 9), F(5, 9))


def test_pr_widens_when_node_can_empty():
    a = AbstractDataset(numeric_dataset([0], [1]), normalize(parse_bias_dsl("fake(f=2)", numeric_dataset([0], [1]).schema)))
    assert size_abstract(a) == Interval(0, 1)
    assert pr_abstract_vector(a) == (Interval(0, 1), Interval(0, 1))


def test_size(running, schema):
    assert size_abstract(_abs(running, "miss(m=1)", schema)) == Interval(9, 10)
    assert size_abstract(_abs(running, "flip(l=3)", schema)) == Interval(9, 9)
    assert size_abstract(_abs(running, "fake(f=2, where race=Black)", schema)) == Interval(7, 9)


def test_gini_abstract(running, schema):
    assert gini_range([Interval(0, 1), Interval(0, 1)]) == Interval(0, F(1, 2))
    assert gini_abstract(_abs(running, "", schema)) == Interval.point(gini(running))
    right = _abs(running, TARGETED, schema).child(Predicate.at_most(1, 3), False)
    assert F(8, 25) in gini_abstract(right)
    assert gini_abstract(right) == Interval(0, F(8, 25))


def test_cost_abstract(running, schema):
    score3 = Predicate.at_most(1, 3)
    assert cost_abstract(_abs(running, "", schema), score3) == Interval.point(F(8, 5))
    iv = cost_abstract(_abs(running, "flip(l=1)", schema), score3)
    values = [cost(m, score3) for m in enumerate_bias_set(running, parse_bias_dsl("flip(l=1)", schema))]
    assert len(values) == 10
    assert Interval(min(values), max(values)) in iv


def test_lub_rule():
    p1, p2, p3 = (Predicate.at_most(0, v) for v in (1, 2, 3))
    costs = {p1: Interval(1, F(3, 2)), p2: Interval(F(7, 5), 2), p3: Interval(F(8, 5), F(9, 5))}
    assert select_by_lub(costs, [p1, p2, p3]) == [p1, p2]


def test_split_with_zero_budget_is_concrete_best(running, schema):
    preds = enumerate_predicates(running)
    assert split_abstract(_abs(running, "", schema), preds) == [best_split(running, preds)]
    with pytest.raises(ValueError):
        split_abstract(_abs(running, "", schema), [])


def test_flip_everything_reaches_both_labels():
    data = numeric_dataset([0, 1, 2, 3], [0, 0, 1, 1])
    result = certify(data, parse_bias_dsl("flip(l=4)", data.schema), (3,), 1)
    assert result.labels == {0, 1}
    assert result.verdict() == "Unknown({0, 1})"


def test_crafted_nonrobust_six_rows():
    data = numeric_dataset(range(6), [0, 0, 0, 1, 0, 0])
    model = parse_bias_dsl("flip(l=1)", data.schema)
    assert not certify(data, model, (5,), 1).robust
    assert certify(data, model, (5,), 1).labels == {0, 1}
    assert not oracle_robust(data, model, (5,), 1).robust


def test_certify_preconditions(running, schema):
    with pytest.raises(ValueError):
        certify(running.with_rows(()), BiasModel(()), BLACK_7)
    with pytest.raises(ValueError):
        certify(running, BiasModel(()), BLACK_7, depth=0)


def test_result_record(running, schema):
    result = certify(running, parse_bias_dsl(TARGETED, schema), BLACK_7, 1)
    record = result.to_json(schema, BLACK_7, TARGETED, timing=False)
    assert record == {
        "x": {"race": "Black", "score": "7"},
        "verdict": "robust",
        "labels": ["✓"],
        "depth": 1,
        "bias_model": TARGETED,
        "root_split_count": 5,
    }
    assert "wall_ms" in result.to_json(schema, BLACK_7, TARGETED)


def test_miss_uses_predicates_beyond_the_node():
    # at a node holding a single feature vector only added rows can create a split
    data = numeric_dataset([0, 0, 3], [0, 0, 1])
    a = AbstractDataset(data, normalize(parse_bias_dsl("miss(m=1)", data.schema)))
    child = a.child(Predicate.at_most(0, 0), True)
    assert enumerate_predicates(child.data) == []
    cands, ref = node_predicates(child, value_pool(data))
    assert cands == ref == [Predicate.at_most(0, 0)]


# --- properties -----------------------------------------------------------------

probs = st.lists(st.integers(0, 6), min_size=2, max_size=4).filter(lambda v: sum(v) > 0)


@given(probs, st.lists(st.integers(0, 3), min_size=8, max_size=8), st.randoms(use_true_random=False))
def test_gini_range_contains_vectors_in_box(weights, widths, rnd):
    total = sum(weights)
    p = [F(w, total) for w in weights]
    box = [Interval(max(0, v - F(widths[2 * i], 6)), min(1, v + F(widths[2 * i + 1], 6))) for i, v in enumerate(p)]
    rng = gini_range(box)
    naive = sum((iv * (1 - iv) for iv in box), Interval.point(0))
    assert rng.lo >= naive.lo and rng.hi <= max(naive.hi, 0)
    assert 1 - sum(v * v for v in p) in rng
    for _ in range(20):
        # random point of box intersected with the simplex
        q = [iv.lo + F(rnd.randint(0, 12), 12) * (iv.hi - iv.lo) for iv in box]
        s = sum(q)
        if s == 0:
            continue
        q = [v / s for v in q]
        if all(v in iv for v, iv in zip(q, box)):
            assert 1 - sum(v * v for v in q) in rng


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2)), min_size=1, max_size=8),
       st.integers(0, 3), st.integers(0, 3), st.integers(1, 3))
def test_zero_budget_reduces_to_concrete(raw, a, b, depth):
    from biascert.dataset import Dataset, Feature, FeatureSchema

    schema = FeatureSchema((Feature("a"), Feature("b")), "label", 3)
    data = Dataset(schema, tuple(((p, q), y) for p, q, y in raw))
    root = AbstractDataset(data, normalize(BiasModel(())))
    assert pr_abstract_vector(root) == tuple(Interval.point(v) for v in pr(data))
    assert gini_abstract(root) == Interval.point(gini(data))
    for p in enumerate_predicates(data):
        assert cost_abstract(root, p) == Interval.point(cost(data, p))
    result = certify(data, BiasModel(()), (a, b), depth)
    assert result.robust and result.label == infer(train(data, depth), (a, b))


small = InstanceConfig(max_rows=6, max_features=2, max_values=3)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6))
def test_members_fall_inside_root_abstractions(seed):
    inst = random_instance(random.Random(seed), small)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        root = AbstractDataset(inst.data, normalize(inst.model))
    cands, ref = node_predicates(root, value_pool(inst.data, inst.universe))
    chosen = set(split_abstract(root, cands, ref)) if cands else set()
    vec, size = pr_abstract_vector(root), size_abstract(root)
    for m in enumerate_bias_set(inst.data, inst.model, inst.universe):
        assert len(m) in size
        if not len(m):
            continue
        assert all(v in iv for v, iv in zip(pr(m), vec))
        own = enumerate_predicates(m)
        if own:
            assert best_split(m, own) in chosen


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_certified_points_agree_with_oracle(seed):
    inst = random_instance(random.Random(seed), small)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = certify(inst.data, inst.model, inst.x, inst.depth, inst.universe)
    if result.robust:
        verdict = oracle_robust(inst.data, inst.model, inst.x, inst.depth, inst.universe)
        assert verdict.robust and verdict.label == result.label
