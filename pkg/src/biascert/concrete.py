"""The deterministic CART-style learner whose robustness is being certified.

Gini impurity, weighted split cost, lowest-cost split with a fixed tie-break,
and fixed-depth training.  Nodes are split until the configured depth is
reached; the only early leaf is a node whose data admits no split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .dataset import Dataset, DatasetError, FeatureVector, Predicate, enumerate_predicates, label_counts, partition


def pr(data: Dataset) -> tuple[Fraction, ...]:
    if len(data) == 0:
        raise DatasetError("pr is undefined on an empty dataset")
    total = len(data)
    return tuple(Fraction(c, total) for c in label_counts(data))


def gini(data: Dataset) -> Fraction:
    return sum((p * (1 - p) for p in pr(data)), Fraction(0))


def _weighted_gini(counts: Sequence[int]) -> Fraction:
    # |S| * gini(S) == |S| - sum(c^2) / |S|
    size = sum(counts)
    if size == 0:
        return Fraction(0)
    return size - Fraction(sum(c * c for c in counts), size)


def cost(data: Dataset, pred: Predicate) -> Fraction:
    n = data.n_labels
    yes, no = [0] * n, [0] * n
    for x, y in data.rows:
        (yes if pred(x) else no)[y] += 1
    return _weighted_gini(yes) + _weighted_gini(no)


def best_split(data: Dataset, predicates: Sequence[Predicate]) -> Predicate:
    """Lowest-cost predicate; the earliest one in ``predicates`` wins ties."""
    if not predicates:
        raise ValueError("best_split needs at least one predicate")
    best, best_cost = predicates[0], cost(data, predicates[0])
    for p in predicates[1:]:
        c = cost(data, p)
        if c < best_cost:
            best, best_cost = p, c
    return best


def argmax_label(counts: Sequence) -> int:
    best = 0
    for i, c in enumerate(counts):
        if c > counts[best]:
            best = i
    return best


@dataclass(frozen=True)
class Leaf:
    counts: tuple[int, ...]

    @property
    def distribution(self) -> tuple[Fraction, ...]:
        total = sum(self.counts)
        return tuple(Fraction(c, total) for c in self.counts)

    @property
    def predicted(self) -> int:
        return argmax_label(self.counts)


@dataclass(frozen=True)
class Internal:
    predicate: Predicate
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Leaf, Internal]


def train(data: Dataset, depth: int) -> TreeNode:
    if len(data) == 0:
        raise DatasetError("cannot train on an empty dataset")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if depth == 0:
        return Leaf(label_counts(data))
    candidates = enumerate_predicates(data)
    if not candidates:
        return Leaf(label_counts(data))
    phi = best_split(data, candidates)
    yes, no = partition(data, phi)
    return Internal(phi, train(yes, depth - 1), train(no, depth - 1))


def infer(tree: TreeNode, x: FeatureVector) -> int:
    node = tree
    while isinstance(node, Internal):
        node = node.left if node.predicate(x) else node.right
    return node.predicted


def predict(data: Dataset, x: FeatureVector, depth: int) -> int:
    """``infer(train(data, depth), x)`` without building the branches ``x`` skips."""
    if len(data) == 0:
        raise DatasetError("cannot train on an empty dataset")
    for _ in range(depth):
        candidates = enumerate_predicates(data)
        if not candidates:
            break
        phi = best_split(data, candidates)
        data = data.with_rows(r for r in data.rows if phi(r[0]) == phi(x))
    return argmax_label(label_counts(data))


def tree_to_json(tree: TreeNode, schema) -> dict:
    if isinstance(tree, Leaf):
        return {"counts": list(tree.counts), "predicted": schema.label_name(tree.predicted)}
    return {
        "predicate": tree.predicate.to_json(schema),
        "left": tree_to_json(tree.left, schema),
        "right": tree_to_json(tree.right, schema),
    }


def dump_tree(tree: TreeNode, schema) -> str:
    return json.dumps(tree_to_json(tree, schema), indent=2, sort_keys=True)
