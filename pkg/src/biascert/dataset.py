"""Tabular datasets, split predicates and targeting predicates."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Iterable, Mapping, Sequence, Union

Value = Union[Fraction, str]
FeatureVector = tuple  # tuple[Value, ...], positions follow the schema
Row = tuple  # (FeatureVector, int)

NUMERIC = "numeric"
CATEGORICAL = "categorical"


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Feature:
    name: str
    kind: str = NUMERIC
    domain: tuple | None = None

    def __post_init__(self) -> None:
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise DatasetError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.domain is not None:
            if self.kind == CATEGORICAL and len(self.domain) < 1:
                raise DatasetError(f"feature {self.name!r}: empty domain")
            object.__setattr__(self, "domain", tuple(self.parse(str(v)) for v in self.domain))

    def parse(self, cell: str) -> Value:
        cell = cell.strip()
        if self.kind == CATEGORICAL:
            return cell
        try:
            return Fraction(cell)
        except (ValueError, ZeroDivisionError):
            raise DatasetError(f"feature {self.name!r}: cannot parse {cell!r} as a number") from None


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[Feature, ...]
    label_column: str = "label"
    n_labels: int = 2
    label_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", tuple(self.features))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise DatasetError("feature names must be unique")
        if self.n_labels < 2:
            raise DatasetError("label arity must be at least 2")
        if self.label_names is not None:
            object.__setattr__(self, "label_names", tuple(self.label_names))
            if len(self.label_names) != self.n_labels:
                raise DatasetError("label_names must have one entry per label")

    def index(self, name: str) -> int:
        for j, f in enumerate(self.features):
            if f.name == name:
                return j
        raise DatasetError(f"unknown feature {name!r}")

    def label_name(self, label: int) -> str:
        if self.label_names is None:
            return str(label)
        return self.label_names[label]

    def parse_label(self, token: str) -> int:
        token = token.strip()
        if self.label_names is not None and token in self.label_names:
            return self.label_names.index(token)
        try:
            y = int(token)
        except ValueError:
            raise DatasetError(f"cannot parse label {token!r}") from None
        if not 0 <= y < self.n_labels:
            raise DatasetError(f"label out of range: {y} not in [0, {self.n_labels})")
        return y

    def parse_point(self, text: str) -> FeatureVector:
        """Parse ``name=value,name=value`` into a feature vector."""
        assigned: dict[str, str] = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            if "=" not in part:
                raise DatasetError(f"bad point component {part!r}; expected name=value")
            k, v = part.split("=", 1)
            assigned[k.strip()] = v.strip()
        missing = [f.name for f in self.features if f.name not in assigned]
        if missing:
            raise DatasetError(f"point is missing features: {', '.join(missing)}")
        extra = set(assigned) - {f.name for f in self.features}
        if extra:
            raise DatasetError(f"point has unknown features: {', '.join(sorted(extra))}")
        return tuple(f.parse(assigned[f.name]) for f in self.features)

    @classmethod
    def from_json(cls, obj: Mapping | str) -> FeatureSchema:
        """Build from ``{features: [{name, kind, domain?}], label: {name, arity, names?}}``."""
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            feats = tuple(
                Feature(f["name"], f.get("kind", NUMERIC), tuple(f["domain"]) if "domain" in f else None)
                for f in obj["features"]
            )
            label = obj["label"]
            names = label.get("names")
            return cls(feats, label["name"], int(label["arity"]), tuple(names) if names else None)
        except KeyError as e:
            raise DatasetError(f"schema is missing key {e}") from None

    def to_json(self) -> dict:
        feats = []
        for f in self.features:
            d: dict = {"name": f.name, "kind": f.kind}
            if f.domain is not None:
                d["domain"] = [str(v) for v in f.domain]
            feats.append(d)
        label: dict = {"name": self.label_column, "arity": self.n_labels}
        if self.label_names is not None:
            label["names"] = list(self.label_names)
        return {"features": feats, "label": label}


@dataclass(frozen=True)
class Dataset:
    """An ordered multiset of ``(x, y)`` rows."""

    schema: FeatureSchema
    rows: tuple[Row, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    @property
    def n_labels(self) -> int:
        return self.schema.n_labels

    def with_rows(self, rows: Iterable[Row]) -> Dataset:
        return Dataset(self.schema, tuple(rows))

    def multiset_key(self) -> tuple:
        """Order-insensitive identity of the dataset."""
        return tuple(sorted(self.rows))

    def observed_values(self) -> tuple[tuple[Value, ...], ...]:
        return tuple(
            tuple(sorted({x[j] for x, _ in self.rows})) for j in range(len(self.schema.features))
        )

    def validate(self) -> None:
        width = len(self.schema.features)
        for r, (x, y) in enumerate(self.rows):
            if len(x) != width:
                raise DatasetError(f"row {r}: expected {width} features, got {len(x)}")
            if not 0 <= y < self.n_labels:
                raise DatasetError(f"row {r}: label out of range: {y}")


def load_dataset(source: bytes | str | IO, schema: FeatureSchema) -> Dataset:
    """Read a headered CSV.  Numeric cells become exact rationals."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DatasetError("CSV has no header row") from None
    positions = {name: k for k, name in enumerate(header)}
    wanted = [f.name for f in schema.features] + [schema.label_column]
    for name in wanted:
        if name not in positions:
            raise DatasetError(f"missing column {name!r}")
    cols = [positions[f.name] for f in schema.features]
    label_col = positions[schema.label_column]

    rows = []
    for line_no, record in enumerate(reader, start=2):
        if not record or all(not c.strip() for c in record):
            continue
        if len(record) < len(header):
            raise DatasetError(f"row {line_no}: expected {len(header)} cells, got {len(record)}")
        x = []
        for f, c in zip(schema.features, cols):
            try:
                x.append(f.parse(record[c]))
            except DatasetError as e:
                raise DatasetError(f"row {line_no}, column {f.name!r}: {e}") from None
        try:
            y = schema.parse_label(record[label_col])
        except DatasetError as e:
            raise DatasetError(f"row {line_no}, column {schema.label_column!r}: {e}") from None
        rows.append((tuple(x), y))
    return Dataset(schema, tuple(rows))


def label_counts(data: Dataset) -> tuple[int, ...]:
    counts = [0] * data.n_labels
    for _, y in data.rows:
        counts[y] += 1
    return tuple(counts)


# --- split predicates -------------------------------------------------------


@dataclass(frozen=True, order=True)
class Predicate:
    """``x[feature] <= threshold`` (numeric) or ``x[feature] in values`` (categorical)."""

    feature: int
    key: tuple = field(compare=True)
    threshold: Fraction | None = field(default=None, compare=False)
    values: frozenset | None = field(default=None, compare=False)

    @classmethod
    def at_most(cls, feature: int, threshold: Fraction) -> Predicate:
        return cls(feature, (0, threshold), threshold=threshold)

    @classmethod
    def member(cls, feature: int, values: Iterable[str]) -> Predicate:
        vs = frozenset(values)
        return cls(feature, (1, tuple(sorted(vs))), values=vs)

    def __call__(self, x: FeatureVector) -> bool:
        v = x[self.feature]
        if self.threshold is not None:
            return v <= self.threshold
        return v in self.values  # type: ignore[operator]

    def describe(self, schema: FeatureSchema) -> str:
        name = schema.features[self.feature].name
        if self.threshold is not None:
            return f"{name} <= {_fmt(self.threshold)}"
        if len(self.values) == 1:  # type: ignore[arg-type]
            return f"{name} = {next(iter(self.values))}"  # type: ignore[arg-type]
        return f"{name} in {{{', '.join(sorted(self.values))}}}"  # type: ignore[arg-type]

    def to_json(self, schema: FeatureSchema) -> dict:
        name = schema.features[self.feature].name
        if self.threshold is not None:
            return {"feature": name, "op": "<=", "threshold": _fmt(self.threshold)}
        return {"feature": name, "op": "in", "values": sorted(self.values)}  # type: ignore[arg-type]


def _fmt(v: Value) -> str:
    if isinstance(v, Fraction) and v.denominator == 1:
        return str(v.numerator)
    return str(v)


def partition(data: Dataset, pred: Predicate) -> tuple[Dataset, Dataset]:
    yes, no = [], []
    for row in data.rows:
        (yes if pred(row[0]) else no).append(row)
    return data.with_rows(yes), data.with_rows(no)


def predicates_from_values(
    schema: FeatureSchema, values: Sequence[Sequence[Value]]
) -> list[Predicate]:
    """All candidate predicates over the given per-feature value pools, canonical order."""
    out: list[Predicate] = []
    for j, f in enumerate(schema.features):
        vs = sorted(set(values[j]))
        if len(vs) < 2:
            continue
        if f.kind == NUMERIC:
            out.extend(Predicate.at_most(j, v) for v in vs[:-1])
        else:
            out.extend(Predicate.member(j, [v]) for v in vs)
    return out


def enumerate_predicates(data: Dataset, dedupe: bool = True) -> list[Predicate]:
    """Candidate splits of ``data`` in canonical (feature, value) order.

    Splits with an empty side never appear.  With ``dedupe``, a predicate whose
    true-side row set equals that of an earlier predicate is dropped.
    """
    if len(data) == 0:
        raise DatasetError("cannot enumerate predicates of an empty dataset")
    candidates = predicates_from_values(data.schema, data.observed_values())
    if not dedupe:
        return candidates
    seen: set[frozenset[int]] = set()
    out = []
    for p in candidates:
        side = frozenset(k for k, (x, _) in enumerate(data.rows) if p(x))
        if side in seen:
            continue
        seen.add(side)
        out.append(p)
    return out


# --- targeting predicates ---------------------------------------------------


@dataclass(frozen=True)
class FeatureAtom:
    """``x[feature] = value`` or, with ``op='<='``, ``x[feature] <= value``."""

    feature: int
    op: str
    value: Value

    def __call__(self, x: FeatureVector, y: int) -> bool:
        if self.op == "=":
            return x[self.feature] == self.value
        return x[self.feature] <= self.value  # type: ignore[operator]

    def render(self, schema: FeatureSchema) -> str:
        return f"{schema.features[self.feature].name}{'=' if self.op == '=' else '<='}{_fmt(self.value)}"


@dataclass(frozen=True)
class LabelAtom:
    labels: frozenset[int]

    def __call__(self, x: FeatureVector, y: int) -> bool:
        return y in self.labels

    def render(self, schema: FeatureSchema) -> str:
        if len(self.labels) == 1:
            return f"label={next(iter(self.labels))}"
        return "label in {" + ",".join(str(v) for v in sorted(self.labels)) + "}"


@dataclass(frozen=True)
class TargetPredicate:
    """Conjunction of atoms, at most one of them on the label.  Empty means true."""

    atoms: tuple = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if sum(isinstance(a, LabelAtom) for a in self.atoms) > 1:
            raise DatasetError("at most one label atom is allowed per target")

    def __call__(self, x: FeatureVector, y: int) -> bool:
        return all(a(x, y) for a in self.atoms)

    def labels(self, n: int) -> frozenset[int]:
        """Labels ``y`` for which the predicate can hold."""
        for a in self.atoms:
            if isinstance(a, LabelAtom):
                return frozenset(a.labels) & frozenset(range(n))
        return frozenset(range(n))

    @property
    def mentions_label(self) -> bool:
        return any(isinstance(a, LabelAtom) for a in self.atoms)

    @property
    def is_trivial(self) -> bool:
        return not self.atoms

    def render(self, schema: FeatureSchema) -> str:
        return " and ".join(a.render(schema) for a in self.atoms)


TRUE = TargetPredicate()


def eval_target(g: TargetPredicate, x: FeatureVector, y: int) -> bool:
    return g(x, y)
