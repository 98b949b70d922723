"""Abstract decision-tree learning over a whole bias set at once.

An :class:`AbstractDataset` pairs the concrete rows on a tree path with the
bias model still applicable there; it stands for every dataset that model
can produce.  Each learner operation has an interval-valued counterpart whose
result contains the concrete result for every member of the set, so a
singleton label set at the end proves that every member predicts the same
label.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Collection, Mapping, Sequence

from .bias import (
    BiasModel,
    NormalizedBiasModel,
    effective_budgets,
    filter_bias,
    normalize,
    removable_rows,
)
from .dataset import (
    Dataset,
    FeatureVector,
    Predicate,
    Value,
    enumerate_predicates,
    label_counts,
    partition,
    predicates_from_values,
)
from .interval import Interval, interval_sum, tie_broken_argmax_set

UNIT = Interval(0, 1)


@dataclass(frozen=True)
class AbstractDataset:
    data: Dataset
    model: NormalizedBiasModel

    def child(self, pred: Predicate, side: bool) -> AbstractDataset:
        yes, no = partition(self.data, pred)
        return AbstractDataset(yes if side else no, filter_bias(self.model, pred, side))


def size_abstract(a: AbstractDataset) -> Interval:
    n = len(a.data)
    return Interval(max(0, n - removable_rows(a.model, a.data)), n + a.model.m)


def pr_abstract_vector(a: AbstractDataset) -> tuple[Interval, ...]:
    """Interval of each label's proportion over all non-empty members."""
    n_labels = a.data.n_labels
    if size_abstract(a).lo == 0:
        return (UNIT,) * n_labels
    total = len(a.data)
    counts = label_counts(a.data)
    eb = effective_budgets(a.model, a.data)
    out = []
    for i, c in enumerate(counts):
        # fewest i's: add only other labels, flip i's away, remove i's
        den = total + eb.add_other[i] - eb.fake_same[i]
        lo = Fraction(0) if den <= 0 else max(Fraction(0), Fraction(c - eb.flip_from[i] - eb.fake_same[i], den))
        # most i's: add only i's, flip others to i, remove others
        den = total + eb.add_same[i] - eb.fake_other[i]
        hi = Fraction(1) if den <= 0 else min(Fraction(1), Fraction(c + eb.add_same[i] + eb.flip_to[i], den))
        out.append(Interval(lo, max(lo, hi)))
    return tuple(out)


def pr_abstract(a: AbstractDataset, label: int) -> Interval:
    return pr_abstract_vector(a)[label]


def _min_square_sum(box: Sequence[Interval]) -> Fraction:
    # water-filling: p_i = clamp(lam, lo_i, hi_i) with sum p_i = 1
    points = sorted({iv.lo for iv in box} | {iv.hi for iv in box})

    def mass(lam: Fraction) -> Fraction:
        return sum((min(max(lam, iv.lo), iv.hi) for iv in box), Fraction(0))

    lam = points[-1]
    for left, right in zip(points, points[1:]):
        if mass(right) >= 1:
            free = sum(1 for iv in box if iv.lo <= left and iv.hi >= right)
            lam = left if free == 0 else left + (1 - mass(left)) / free
            break
    return sum((min(max(lam, iv.lo), iv.hi) ** 2 for iv in box), Fraction(0))


def _max_square_sum(box: Sequence[Interval]) -> Fraction:
    # a convex maximum sits on a vertex: all coordinates but one at a bound
    best = None
    n = len(box)
    for k in range(n):
        others = [j for j in range(n) if j != k]
        for mask in range(1 << len(others)):
            p = [box[j].hi if mask >> b & 1 else box[j].lo for b, j in enumerate(others)]
            rest = 1 - sum(p, Fraction(0))
            if rest in box[k]:
                total = rest * rest + sum((v * v for v in p), Fraction(0))
                best = total if best is None else max(best, total)
    return best if best is not None else Fraction(1)


_EXACT_GINI_LABELS = 10


def gini_range(box: Sequence[Interval]) -> Interval:
    """Range of ``1 - sum p_i^2`` over probability vectors inside ``box``.

    Restricting to vectors that sum to one is what makes this tighter than
    evaluating ``sum p_i (1 - p_i)`` term by term; past a handful of labels
    the term-by-term bound is used instead.
    """
    n = len(box)
    cap = 1 - Fraction(1, n)
    feasible = sum(iv.lo for iv in box) <= 1 <= sum(iv.hi for iv in box)
    if not feasible or n > _EXACT_GINI_LABELS:
        raw = interval_sum(p * (1 - p) for p in box)
        return Interval(min(max(raw.lo, Fraction(0)), cap), min(raw.hi, cap))
    return Interval(1 - _max_square_sum(box), min(1 - _min_square_sum(box), cap))


def gini_abstract(a: AbstractDataset) -> Interval:
    return gini_range(pr_abstract_vector(a))


def cost_abstract(a: AbstractDataset, pred: Predicate) -> Interval:
    total = Interval.point(0)
    for side in (True, False):
        child = a.child(pred, side)
        total = total + size_abstract(child) * gini_abstract(child)
    return total.clamp_lo(0)


def split_abstract(
    a: AbstractDataset,
    predicates: Sequence[Predicate],
    reference: Sequence[Predicate] | None = None,
) -> list[Predicate]:
    """Predicates whose cost can reach the least upper bound of all costs.

    ``lub`` is the smallest cost upper bound over ``reference`` (defaults to
    ``predicates``); every predicate in ``predicates`` whose lower bound is at
    most ``lub`` is kept.
    """
    if not predicates:
        raise ValueError("split_abstract needs at least one predicate")
    ref = list(reference) if reference else list(predicates)
    costs = {p: cost_abstract(a, p) for p in dict.fromkeys([*predicates, *ref])}
    always_valid = {p for p in ref if all(size_abstract(a.child(p, s)).lo > 0 for s in (True, False))}
    return select_by_lub(costs, predicates, ref, always_valid)


def select_by_lub(
    costs: Mapping,
    predicates: Sequence,
    reference: Sequence | None = None,
    always_valid: Collection = (),
) -> list:
    """Keep every predicate whose cost lower bound is at most the least upper bound.

    Ties at ``lub`` follow the learner's tie-break: a predicate whose lower
    bound equals ``lub`` is dropped when an earlier predicate from
    ``always_valid`` (a split in every member) has upper bound ``lub``.
    """
    reference = reference or predicates
    lub = min(costs[p].hi for p in reference)
    tied = [p for p in reference if p in always_valid and costs[p].hi == lub]
    first = min(tied) if tied else None
    return [p for p in predicates if costs[p].lo < lub or (costs[p].lo == lub and (first is None or not first < p))]


def possibly_leaf(a: AbstractDataset) -> bool:
    """Whether some member might have no valid split at this node.

    That happens when every row can share one feature vector, i.e. all rows
    outside the most common vector can be removed.
    """
    if len(a.data) == 0:
        return True
    top = Counter(x for x, _ in a.data.rows).most_common(1)[0][1]
    return len(a.data) - top <= removable_rows(a.model, a.data)


def node_predicates(
    a: AbstractDataset, pool: Sequence[Sequence[Value]] | None
) -> tuple[list[Predicate], list[Predicate]]:
    """Candidate splits at a node and the reference set used for ``lub``.

    Without ``miss`` every member's rows come from the node's rows, so the
    node's deduplicated predicates cover every split a member can choose.
    With ``miss``, added rows may separate predicates that coincide on the
    node, or give a one-sided predicate a second side, so all predicates over
    the value ``pool`` are candidates.
    """
    reference = enumerate_predicates(a.data) if len(a.data) else []
    if a.model.m == 0 or pool is None:
        return reference, reference
    values = [sorted(set(p) | {x[j] for x, _ in a.data.rows}) for j, p in enumerate(pool)]
    candidates = predicates_from_values(a.data.schema, values)
    return candidates, (reference or candidates)


@dataclass(frozen=True)
class LeafTrace:
    path: tuple[tuple[Predicate, bool], ...]
    intervals: tuple[Interval, ...]
    labels: frozenset[int]


def _leaf(a: AbstractDataset, path, traces: list | None) -> frozenset[int]:
    vec = pr_abstract_vector(a)
    labels = tie_broken_argmax_set(vec)
    if traces is not None:
        traces.append(LeafTrace(tuple(path), vec, labels))
    return labels


def _infer_node(a, x, depth, pool, path, traces) -> frozenset[int]:
    candidates, reference = node_predicates(a, pool)
    if depth == 0 or not candidates:
        return _leaf(a, path, traces)
    labels: frozenset[int] = frozenset()
    if possibly_leaf(a):
        labels |= _leaf(a, path, traces)
    phis = split_abstract(a, candidates, reference)
    return labels | infer_abstract(a, phis, x, depth, pool, path, traces)


def infer_abstract(
    a: AbstractDataset,
    phis: Sequence[Predicate],
    x: FeatureVector,
    depth: int,
    pool: Sequence[Sequence[Value]] | None = None,
    _path: tuple = (),
    _traces: list | None = None,
) -> frozenset[int]:
    """Labels reachable for ``x`` when the node splits on any of ``phis``.

    Each child keeps the full remaining budgets.  At depth 1 the child's label
    set is the interval argmax of its proportions; deeper, the child is split
    again.
    """
    labels: frozenset[int] = frozenset()
    for phi in phis:
        side = phi(x)
        child = a.child(phi, side)
        labels |= _infer_node(child, x, depth - 1, pool, _path + ((phi, side),), _traces)
    return labels


@dataclass(frozen=True)
class CertificationResult:
    labels: frozenset[int]
    depth: int
    root_split_count: int
    elapsed_ms: float
    traces: tuple[LeafTrace, ...] = field(default=(), compare=False)

    @property
    def robust(self) -> bool:
        return len(self.labels) == 1

    @property
    def label(self) -> int | None:
        return next(iter(self.labels)) if self.robust else None

    def verdict(self, schema=None) -> str:
        name = (lambda i: schema.label_name(i)) if schema is not None else str
        if self.robust:
            return f"Robust({name(self.label)})"
        return "Unknown({" + ", ".join(name(i) for i in sorted(self.labels)) + "})"

    def to_json(self, schema, x: FeatureVector, bias_text: str, timing: bool = True) -> dict:
        record = {
            "x": {f.name: str(v) for f, v in zip(schema.features, x)},
            "verdict": "robust" if self.robust else "unknown",
            "labels": [schema.label_name(i) for i in sorted(self.labels)],
            "depth": self.depth,
            "bias_model": bias_text,
            "root_split_count": self.root_split_count,
        }
        if timing:
            record["wall_ms"] = round(self.elapsed_ms, 3)
        return record


def value_pool(data: Dataset, universe=None) -> tuple[tuple[Value, ...], ...]:
    """Per-feature values that rows added by ``miss`` may take."""
    observed = data.observed_values()
    if universe is None:
        return observed
    return tuple(tuple(sorted(set(o) | set(u))) for o, u in zip(observed, universe.values))


def certify(
    data: Dataset,
    bias: BiasModel | NormalizedBiasModel,
    x: FeatureVector,
    depth: int = 1,
    universe=None,
    trace: bool = False,
) -> CertificationResult:
    """Decide whether every dataset in the bias set predicts one label for ``x``.

    ``universe`` (an :class:`~biascert.oracle.Universe`) widens the value
    pool used for splits that rows added by ``miss`` could create; by default
    the observed values of ``data`` are used.
    """
    if len(data) == 0:
        raise ValueError("certify needs a non-empty dataset")
    if depth < 1:
        raise ValueError("depth must be at least 1")
    start = time.perf_counter()
    model = bias if isinstance(bias, NormalizedBiasModel) else normalize(bias)
    root = AbstractDataset(data, model)
    pool = value_pool(data, universe)
    traces: list | None = [] if trace else None

    candidates, reference = node_predicates(root, pool)
    labels: frozenset[int] = frozenset()
    split_count = 0
    if not candidates:
        labels = _leaf(root, (), traces)
    else:
        if possibly_leaf(root):
            labels |= _leaf(root, (), traces)
        phis = split_abstract(root, candidates, reference)
        split_count = len(phis)
        labels |= infer_abstract(root, phis, x, depth, pool, (), traces)
    elapsed = (time.perf_counter() - start) * 1000
    return CertificationResult(labels, depth, split_count, elapsed, tuple(traces or ()))
