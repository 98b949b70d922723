"""Exhaustive ground truth for small instances.

Bias sets are enumerated member by member over a finite universe of feature
values, and the concrete learner is retrained on each member.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .bias import FAKE, FLIP, MISS, BiasModel, NormalizedBiasModel, components_of
from .concrete import predict
from .dataset import NUMERIC, Dataset, FeatureVector, Value, label_counts

DEFAULT_CAP = 2_000_000


class CapExceeded(RuntimeError):
    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"bias set too large to enumerate: projected size {size} exceeds cap {cap}")


class UniverseRequired(ValueError):
    pass


@dataclass(frozen=True)
class Universe:
    """Finite candidate values per feature; added rows are drawn from here."""

    values: tuple[tuple[Value, ...], ...]

    def __post_init__(self) -> None:
        vals = tuple(tuple(sorted(set(v))) for v in self.values)
        if any(not v for v in vals):
            raise ValueError("every feature needs at least one universe value")
        object.__setattr__(self, "values", vals)

    @classmethod
    def observed(cls, data: Dataset) -> Universe:
        return cls(data.observed_values())

    @classmethod
    def from_schema(cls, data: Dataset) -> Universe:
        """Declared domains where present, observed values elsewhere."""
        observed = data.observed_values()
        return cls(tuple(f.domain or o for f, o in zip(data.schema.features, observed)))

    def vectors(self) -> Iterable[FeatureVector]:
        return itertools.product(*self.values)

    def rows(self, n_labels: int, target) -> list[tuple]:
        return [(x, y) for x in self.vectors() for y in range(n_labels) if target(x, y)]


Key = tuple  # sorted rows


def _sum_comb(n: int, budget: int, weight: int = 1) -> int:
    return sum(math.comb(n, k) * weight**k for k in range(min(n, budget) + 1))


def _multichoose(n: int, budget: int) -> int:
    if n == 0:
        return 1
    return sum(math.comb(n + k - 1, k) for k in range(budget + 1))


def _stage(members: set[Key], comp, universe: Universe | None, n_labels: int) -> set[Key]:
    kind, budget, g = comp.kind, comp.budget, comp.target
    out: set[Key] = set()
    if budget == 0:
        return set(members)
    if kind == MISS:
        if universe is None:
            raise UniverseRequired("enumerating miss needs a finite universe")
        pool = universe.rows(n_labels, g)
        for rows in members:
            for k in range(budget + 1):
                for extra in itertools.combinations_with_replacement(pool, k):
                    out.add(tuple(sorted(rows + extra)))
        return out
    for rows in members:
        eligible = [p for p, (x, y) in enumerate(rows) if g(x, y)]
        for k in range(min(budget, len(eligible)) + 1):
            for chosen in itertools.combinations(eligible, k):
                if kind == FAKE:
                    drop = set(chosen)
                    out.add(tuple(r for p, r in enumerate(rows) if p not in drop))
                    continue
                options = [[z for z in range(n_labels) if z != rows[p][1]] for p in chosen]
                for labels in itertools.product(*options):
                    new = list(rows)
                    for p, z in zip(chosen, labels):
                        new[p] = (rows[p][0], z)
                    out.add(tuple(sorted(new)))
    return out


def _fanout(comp, universe: Universe | None, n_labels: int, eligible: int) -> int:
    if comp.budget == 0:
        return 1
    if comp.kind == MISS:
        pool = len(universe.rows(n_labels, comp.target)) if universe is not None else 0
        return _multichoose(pool, comp.budget)
    if comp.kind == FLIP:
        return _sum_comb(eligible, comp.budget, n_labels - 1)
    return _sum_comb(eligible, comp.budget)


def _stage_bound(members: set[Key], comp, universe: Universe | None, n_labels: int) -> int:
    if comp.kind == MISS or comp.budget == 0:
        return len(members) * _fanout(comp, universe, n_labels, 0)
    g = comp.target
    return sum(_fanout(comp, universe, n_labels, sum(1 for x, y in rows if g(x, y))) for rows in members)


def enumerate_sequence(
    data: Dataset,
    components: Sequence,
    universe: Universe | None = None,
    cap: int = DEFAULT_CAP,
) -> list[Dataset]:
    """Every dataset reachable by applying ``components`` in the given order.

    Members are distinct as multisets and returned in sorted-row order.  Before
    each stage the projected member count is checked against ``cap``.
    """
    n = data.n_labels
    members: set[Key] = {data.multiset_key()}
    for comp in components:
        if comp.kind == MISS and comp.budget and universe is None:
            raise UniverseRequired("enumerating miss needs a finite universe")
        projected = _stage_bound(members, comp, universe, n)
        if projected > cap:
            raise CapExceeded(projected, cap)
        members = _stage(members, comp, universe, n)
    return [data.with_rows(k) for k in sorted(members)]


def enumerate_bias_set(
    data: Dataset,
    model: BiasModel | NormalizedBiasModel,
    universe: Universe | None = None,
    cap: int = DEFAULT_CAP,
    merged: bool = False,
) -> list[Dataset]:
    """Members of ``B(T)``, applying components in miss, flip, fake order.

    With ``merged`` the normalized model's combined components are used
    instead of the original ones.
    """
    if merged:
        if not isinstance(model, NormalizedBiasModel):
            raise TypeError("merged enumeration needs a NormalizedBiasModel")
        comps = [
            _Merged(kind, part.budget, part.target)
            for kind, part in ((MISS, model.miss), (FLIP, model.flip), (FAKE, model.fake))
            if part is not None
        ]
    else:
        comps = components_of(model)
    return enumerate_sequence(data, comps, universe, cap)


@dataclass(frozen=True)
class _Merged:
    kind: str
    budget: int
    target: object


def projected_size(
    data: Dataset, model: BiasModel | NormalizedBiasModel, universe: Universe | None = None
) -> int:
    """Closed-form upper bound on ``|B(T)|`` that ignores coinciding members."""
    return _projected(data, components_of(model), universe)


def _projected(data: Dataset, comps: Sequence, universe: Universe | None) -> int:
    total, added, flipped = 1, 0, False
    for comp in comps:
        if comp.kind == MISS:
            added += comp.budget
        elif comp.target.mentions_label and flipped:
            eligible = len(data) + added
        else:
            eligible = sum(1 for x, y in data.rows if comp.target(x, y)) + added
        total *= _fanout(comp, universe, data.n_labels, 0 if comp.kind == MISS else eligible)
        flipped |= comp.kind == FLIP and comp.budget > 0
    return total


# --- verdicts ----------------------------------------------------------------


@dataclass(frozen=True)
class OracleVerdict:
    """``label`` is set when robust; otherwise ``witness`` holds two members that disagree."""

    robust: bool
    label: int | None
    members: int
    predictions: frozenset
    witness: tuple[Dataset, Dataset] | None = None

    def render(self, schema) -> str:
        if self.robust:
            return f"Robust({schema.label_name(self.label)})"
        shown = ", ".join("empty" if p is None else schema.label_name(p) for p in sorted(self.predictions, key=_order))
        return "NonRobust({" + shown + "})"


def _order(p):
    return -1 if p is None else p


def member_prediction(member: Dataset, x: FeatureVector, depth: int) -> int | None:
    """The learner's prediction, or ``None`` for an empty member."""
    return predict(member, x, depth) if len(member) else None


def oracle_robust(
    data: Dataset,
    model: BiasModel | NormalizedBiasModel,
    x: FeatureVector,
    depth: int = 1,
    universe: Universe | None = None,
    cap: int = DEFAULT_CAP,
    members: Sequence[Dataset] | None = None,
) -> OracleVerdict:
    """Retrain on every member; an empty member counts as its own outcome."""
    if members is None:
        members = enumerate_bias_set(data, model, universe, cap)
    seen: dict = {}
    for m in members:
        p = member_prediction(m, x, depth)
        seen.setdefault(p, m)
    preds = frozenset(seen)
    if len(preds) == 1 and None not in preds:
        return OracleVerdict(True, next(iter(preds)), len(members), preds)
    first, second = sorted(preds, key=_order)[:2] if len(preds) > 1 else (None, None)
    witness = (seen[first], seen[second]) if len(preds) > 1 else (seen[None], seen[None])
    return OracleVerdict(False, None, len(members), preds, witness)


def pr_bounds_bruteforce(
    data: Dataset,
    model: BiasModel | NormalizedBiasModel,
    label: int,
    universe: Universe | None = None,
    cap: int = DEFAULT_CAP,
    members: Sequence[Dataset] | None = None,
) -> tuple[Fraction, Fraction]:
    if members is None:
        members = enumerate_bias_set(data, model, universe, cap)
    values = []
    for m in members:
        if len(m) == 0:
            raise ValueError("bias set has an empty member; pr is undefined there")
        values.append(Fraction(label_counts(m)[label], len(m)))
    return min(values), max(values)


# --- cardinality reporting ---------------------------------------------------

INFINITE = None


@dataclass(frozen=True)
class SizeReport:
    """``count`` is ``None`` for an infinite set; ``exact`` marks closed forms that are not bounds."""

    count: int | None
    exact: bool

    @property
    def log10(self) -> float:
        if self.count is None:
            return math.inf
        return math.log10(self.count) if self.count > 0 else 0.0

    @property
    def bucket(self) -> str:
        if self.count is None:
            return "infinite"
        for limit in (10, 50, 100, 500):
            if self.log10 < limit:
                return f"<1e{limit}"
        return ">1e500"


def bias_set_size(
    data: Dataset, model: BiasModel | NormalizedBiasModel, universe: Universe | None = None
) -> SizeReport:
    """Cardinality of ``B(T)``.

    ``miss`` over a numeric feature without a universe or declared domain is
    infinite.  A single component on a dataset without repeated rows has an
    exact closed form; anything else reports the closed-form upper bound.
    """
    comps = [c for c in components_of(model) if c.budget > 0]
    if any(c.kind == MISS for c in comps) and universe is None:
        if any(f.kind == NUMERIC and f.domain is None for f in data.schema.features):
            return SizeReport(INFINITE, True)
        universe = Universe.from_schema(data)
    count = _projected(data, comps, universe)
    exact = not comps or (len(comps) == 1 and (comps[0].kind == MISS or len(set(data.rows)) == len(data)))
    return SizeReport(count, exact)
