"""Programmable bias models: missing rows, flipped labels, fake rows.

A bias model maps a dataset ``T`` to the set ``B(T)`` of datasets that could
have existed without the bias.  Components are

* ``miss(m, g)``: add up to ``m`` rows, each satisfying ``g``;
* ``flip(l, g)``: change the label of up to ``l`` rows satisfying ``g``;
* ``fake(f, g)``: remove up to ``f`` rows satisfying ``g``.

Composite models apply every ``miss`` first, then ``flip``, then ``fake``;
that order generates a superset of every other order.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .dataset import (
    CATEGORICAL,
    TRUE,
    Dataset,
    DatasetError,
    FeatureAtom,
    FeatureSchema,
    FeatureVector,
    LabelAtom,
    Predicate,
    TargetPredicate,
)

MISS, FLIP, FAKE = "miss", "flip", "fake"
KINDS = (MISS, FLIP, FAKE)
PARAM = {MISS: "m", FLIP: "l", FAKE: "f"}


class BiasSyntaxError(ValueError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        super().__init__(message if position is None else f"{message} (at position {position})")


class LabelConditionedMergeWarning(UserWarning):
    """Several flip components were merged and at least one conditions on the label."""


@dataclass(frozen=True)
class BiasComponent:
    kind: str
    budget: int
    target: TargetPredicate = TRUE

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown bias kind {self.kind!r}")
        if self.budget < 0:
            raise ValueError("negative budget")

    @property
    def label_conditioned(self) -> bool:
        return self.target.mentions_label

    def render(self, schema: FeatureSchema) -> str:
        where = "" if self.target.is_trivial else f", where {self.target.render(schema)}"
        return f"{self.kind}({PARAM[self.kind]}={self.budget}{where})"


@dataclass(frozen=True)
class BiasModel:
    components: tuple[BiasComponent, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))

    def canonical_order(self) -> tuple[BiasComponent, ...]:
        return tuple(sorted(self.components, key=lambda c: KINDS.index(c.kind)))

    def render(self, schema: FeatureSchema) -> str:
        return "; ".join(c.render(schema) for c in self.canonical_order())

    def scaled(self, factor: int) -> BiasModel:
        return BiasModel(tuple(BiasComponent(c.kind, c.budget * factor, c.target) for c in self.components))


# --- targets that appear only after normalization / filtering ---------------


@dataclass(frozen=True)
class AnyOf:
    """Disjunction of targets."""

    options: tuple

    def __call__(self, x: FeatureVector, y: int) -> bool:
        return any(g(x, y) for g in self.options)

    def labels(self, n: int) -> frozenset[int]:
        out: frozenset[int] = frozenset()
        for g in self.options:
            out |= g.labels(n)
        return out

    @property
    def mentions_label(self) -> bool:
        return any(g.mentions_label for g in self.options)


@dataclass(frozen=True)
class Restricted:
    """``base`` conjoined with a split predicate (or its negation)."""

    base: object
    predicate: Predicate
    side: bool = True

    def __call__(self, x: FeatureVector, y: int) -> bool:
        return self.predicate(x) == self.side and self.base(x, y)  # type: ignore[operator]

    def labels(self, n: int) -> frozenset[int]:
        return self.base.labels(n)  # type: ignore[attr-defined]

    @property
    def mentions_label(self) -> bool:
        return self.base.mentions_label  # type: ignore[attr-defined]


def disjoin(targets: Sequence) -> object:
    if len(targets) == 1:
        return targets[0]
    if any(getattr(t, "is_trivial", False) for t in targets):
        return TRUE
    return AnyOf(tuple(targets))


@dataclass(frozen=True)
class Budgeted:
    budget: int
    target: object = TRUE


@dataclass(frozen=True)
class NormalizedBiasModel:
    """At most one merged component per kind, applied miss, flip, fake.

    ``sequence`` keeps the original components in canonical order so exact
    enumeration and sampling can follow the true semantics; the merged
    triple over-approximates it and is what the abstract learner consumes.
    """

    miss: Budgeted | None = None
    flip: Budgeted | None = None
    fake: Budgeted | None = None
    sequence: tuple = ()
    label_conditioned_merge: bool = False

    @property
    def m(self) -> int:
        return self.miss.budget if self.miss else 0

    @property
    def l(self) -> int:  # noqa: E743
        return self.flip.budget if self.flip else 0

    @property
    def f(self) -> int:
        return self.fake.budget if self.fake else 0

    @property
    def is_zero(self) -> bool:
        return self.m == 0 and self.l == 0 and self.f == 0


def normalize(model: BiasModel) -> NormalizedBiasModel:
    """Merge same-kind components (sum budgets, disjoin targets) in miss, flip, fake order."""
    ordered = model.canonical_order()
    merged: dict[str, Budgeted | None] = {}
    for kind in KINDS:
        parts = [c for c in ordered if c.kind == kind]
        if not parts:
            merged[kind] = None
            continue
        merged[kind] = Budgeted(sum(c.budget for c in parts), disjoin([c.target for c in parts]))
    flips = [c for c in ordered if c.kind == FLIP]
    flagged = len(flips) >= 2 and any(c.label_conditioned for c in flips)
    if flagged:
        warnings.warn(
            "merging flip components whose targets condition on the label; "
            "the merged model over-approximates the sequential one",
            LabelConditionedMergeWarning,
            stacklevel=2,
        )
    return NormalizedBiasModel(merged[MISS], merged[FLIP], merged[FAKE], ordered, flagged)


def filter_bias(model: NormalizedBiasModel, pred: Predicate, side: bool = True) -> NormalizedBiasModel:
    """Restrict the model to one side of a split.

    Only ``miss`` changes: rows it adds must now fall on ``side`` of ``pred``.
    ``flip`` and ``fake`` keep their full budgets.
    """
    miss = model.miss
    if miss is not None:
        miss = Budgeted(miss.budget, Restricted(miss.target, pred, side))
    sequence = tuple(
        BiasComponentView(c.kind, c.budget, Restricted(c.target, pred, side)) if c.kind == MISS else c
        for c in model.sequence
    )
    return NormalizedBiasModel(miss, model.flip, model.fake, sequence, model.label_conditioned_merge)


@dataclass(frozen=True)
class BiasComponentView:
    """A component whose target is an arbitrary predicate object (used after filtering)."""

    kind: str
    budget: int
    target: object


# --- effective per-label budgets --------------------------------------------


@dataclass(frozen=True)
class EffectiveBudgets:
    """Per-label bounds on how far each count can move.

    For label ``i``: ``add_same``/``add_other`` rows of label ``i``/other can be
    added, ``flip_from``/``flip_to`` rows can leave/join label ``i`` by
    flipping, and ``fake_same``/``fake_other`` rows of label ``i``/other can be
    removed.  Rows introduced by earlier stages count toward later ones.
    """

    add_same: tuple[int, ...]
    add_other: tuple[int, ...]
    flip_from: tuple[int, ...]
    flip_to: tuple[int, ...]
    fake_same: tuple[int, ...]
    fake_other: tuple[int, ...]


def _labels_of(target: object, n: int) -> frozenset[int]:
    return target.labels(n)  # type: ignore[attr-defined]


def effective_budgets(model: NormalizedBiasModel, data: Dataset) -> EffectiveBudgets:
    n = data.n_labels
    m, l, f = model.m, model.l, model.f
    miss_labels = _labels_of(model.miss.target, n) if model.miss else frozenset()
    g2 = model.flip.target if model.flip else None
    g3 = model.fake.target if model.fake else None

    flip_counts = [0] * n
    fake_counts = [0] * n
    for x, y in data.rows:
        if g2 is not None and l and g2(x, y):  # type: ignore[operator]
            flip_counts[y] += 1
        if g3 is not None and f and g3(x, y):  # type: ignore[operator]
            fake_counts[y] += 1
    total_flip, total_fake = sum(flip_counts), sum(fake_counts)

    add_same, add_other, la, lb, fa, fb = [], [], [], [], [], []
    for i in range(n):
        mp = m if i in miss_labels else 0
        mm = m if miss_labels - {i} else 0
        a = min(flip_counts[i] + mp, l)
        b = min(total_flip - flip_counts[i] + mm, l)
        add_same.append(mp)
        add_other.append(mm)
        la.append(a)
        lb.append(b)
        fa.append(min(fake_counts[i] + mp + b, f))
        fb.append(min(total_fake - fake_counts[i] + mm + a, f))
    return EffectiveBudgets(*(tuple(v) for v in (add_same, add_other, la, lb, fa, fb)))


def removable_rows(model: NormalizedBiasModel, data: Dataset) -> int:
    """Upper bound on how many rows ``fake`` can remove from ``data`` under ``model``."""
    if not model.fake or model.f == 0:
        return 0
    g3 = model.fake.target
    count = sum(1 for x, y in data.rows if g3(x, y))  # type: ignore[operator]
    bound = count + model.m
    if model.fake.target.mentions_label and model.flip and model.l:  # type: ignore[attr-defined]
        g2 = model.flip.target
        flippable = sum(1 for x, y in data.rows if g2(x, y) and not g3(x, y))  # type: ignore[operator]
        bound += min(model.l, flippable)
    return min(model.f, bound)


# --- DSL ---------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<string>"[^"]*"|'[^']*')
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?%?)
  | (?P<op><=|[(),;={}])
  | (?P<ident>[^\s(),;={}<"'\d\-%][^\s(),;={}<"']*)
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    out, pos = [], 0
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None:
            raise BiasSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = mt.lastgroup
        if kind != "ws":
            out.append(_Tok(kind, mt.group(), pos))  # type: ignore[arg-type]
        pos = mt.end()
    out.append(_Tok("eof", "", len(text)))
    return out


@dataclass
class _Parser:
    tokens: list[_Tok]
    schema: FeatureSchema
    dataset_size: int | None
    i: int = 0
    label_words: tuple = field(default=())

    def peek(self) -> _Tok:
        return self.tokens[self.i]

    def take(self, text: str | None = None, kind: str | None = None) -> _Tok:
        tok = self.peek()
        if (text is not None and tok.text != text) or (kind is not None and tok.kind != kind):
            want = repr(text) if text is not None else ("end of input" if kind == "eof" else kind)
            got = repr(tok.text) if tok.kind != "eof" else "end of input"
            raise BiasSyntaxError(f"expected {want}, got {got}", tok.pos)
        self.i += 1
        return tok

    def model(self) -> BiasModel:
        comps = [self.stmt()]
        while self.peek().text == ";":
            self.take(";")
            if self.peek().kind == "eof":
                break
            comps.append(self.stmt())
        self.take(kind="eof")
        return BiasModel(tuple(comps))

    def stmt(self) -> BiasComponent:
        kind_tok = self.take(kind="ident")
        kind = kind_tok.text.lower()
        if kind not in KINDS:
            raise BiasSyntaxError(f"unknown bias kind {kind_tok.text!r}", kind_tok.pos)
        self.take("(")
        param = self.take(kind="ident")
        if param.text != PARAM[kind]:
            raise BiasSyntaxError(f"{kind} takes parameter {PARAM[kind]!r}, not {param.text!r}", param.pos)
        self.take("=")
        budget = self.budget(self.take(kind="number"))
        target = TRUE
        if self.peek().text == ",":
            self.take(",")
            self.take("where")
            target = self.pred()
        self.take(")")
        return BiasComponent(kind, budget, target)

    def budget(self, tok: _Tok) -> int:
        text = tok.text
        if text.startswith("-"):
            raise BiasSyntaxError("negative budget", tok.pos)
        if text.endswith("%"):
            if self.dataset_size is None:
                raise BiasSyntaxError("percentage budget needs the dataset size", tok.pos)
            return math.floor(Fraction(text[:-1]) * self.dataset_size / 100)
        value = Fraction(text)
        if value.denominator != 1:
            raise BiasSyntaxError("budget must be an integer or a percentage", tok.pos)
        return int(value)

    def pred(self) -> TargetPredicate:
        atoms = [self.atom()]
        while self.peek().text == "and":
            self.take("and")
            atoms.append(self.atom())
        try:
            return TargetPredicate(tuple(atoms))
        except DatasetError as e:
            raise BiasSyntaxError(str(e), self.peek().pos) from None

    def atom(self):
        name = self.take(kind="ident")
        if name.text in self.label_words:
            if self.peek().text == "in":
                self.take("in")
                self.take("{")
                labels = [self.label(self.take())]
                while self.peek().text == ",":
                    self.take(",")
                    labels.append(self.label(self.take()))
                self.take("}")
                return LabelAtom(frozenset(labels))
            self.take("=")
            return LabelAtom(frozenset([self.label(self.take())]))
        try:
            j = self.schema.index(name.text)
        except DatasetError:
            raise BiasSyntaxError(f"unknown feature {name.text!r}", name.pos) from None
        feat = self.schema.features[j]
        op = self.take(kind="op")
        if op.text not in ("=", "<="):
            raise BiasSyntaxError(f"expected '=' or '<=', got {op.text!r}", op.pos)
        tok = self.take()
        if tok.kind not in ("ident", "number", "string"):
            raise BiasSyntaxError("expected a value", tok.pos)
        raw = tok.text[1:-1] if tok.kind == "string" else tok.text
        if op.text == "<=" and feat.kind == CATEGORICAL:
            raise BiasSyntaxError(f"feature {feat.name!r} is categorical; '<=' is not allowed", op.pos)
        try:
            value = feat.parse(raw)
        except DatasetError as e:
            raise BiasSyntaxError(str(e), tok.pos) from None
        return FeatureAtom(j, op.text, value)

    def label(self, tok: _Tok) -> int:
        try:
            return self.schema.parse_label(tok.text.strip("'\""))
        except DatasetError as e:
            raise BiasSyntaxError(f"unknown label: {e}", tok.pos) from None


def parse_bias_dsl(text: str, schema: FeatureSchema, dataset_size: int | None = None) -> BiasModel:
    """Parse statements like ``miss(m=2); flip(l=1, where race=Black and label=0)``.

    Percentage budgets (``m=0.1%``) are resolved against ``dataset_size`` and
    rounded down.
    """
    if not text.strip():
        return BiasModel(())
    label_words = ("label",) if schema.label_column == "label" else ("label", schema.label_column)
    return _Parser(_tokenize(text), schema, dataset_size, label_words=label_words).model()


def components_of(model: BiasModel | NormalizedBiasModel) -> tuple:
    if isinstance(model, NormalizedBiasModel):
        return model.sequence
    return model.canonical_order()


def flip_only(budget: int, target: TargetPredicate = TRUE) -> BiasModel:
    return BiasModel((BiasComponent(FLIP, budget, target),))


def with_budgets(model: BiasModel, budgets: Iterable[int]) -> BiasModel:
    return BiasModel(tuple(BiasComponent(c.kind, b, c.target) for c, b in zip(model.components, budgets)))


def parse_target(text: str, schema: FeatureSchema) -> TargetPredicate:
    """Parse a bare conjunction such as ``race=Black and score<=3``."""
    label_words = ("label",) if schema.label_column == "label" else ("label", schema.label_column)
    parser = _Parser(_tokenize(text), schema, None, label_words=label_words)
    if parser.peek().kind == "eof":
        return TRUE
    pred = parser.pred()
    parser.take(kind="eof")
    return pred
