"""Certification-rate tables, overall and per demographic group."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .bias import parse_target
from .dataset import FeatureSchema, FeatureVector, TargetPredicate
from .interval import render_decimal

COLUMNS = ("group", "n", "certified", "rate_pct")


@dataclass(frozen=True)
class RateRow:
    group: str
    n: int
    certified: int

    @property
    def rate(self) -> Fraction | None:
        return Fraction(self.certified, self.n) if self.n else None

    @property
    def rate_pct(self) -> str:
        r = self.rate
        return "n/a" if r is None else render_decimal(r * 100, 1)


@dataclass(frozen=True)
class RateTable:
    rows: tuple[RateRow, ...]

    def __getitem__(self, group: str) -> RateRow:
        for r in self.rows:
            if r.group == group:
                return r
        raise KeyError(group)


def stratified_rates(
    results: Sequence[tuple[FeatureVector, object]],
    groups: Sequence[tuple[str, TargetPredicate]] = (),
) -> RateTable:
    """Count certified points overall (group ``all``) and within each group.

    ``results`` pairs each test point with anything exposing ``robust``.
    Groups may overlap; their predicates may not mention the label.
    """
    for name, g in groups:
        if g.mentions_label:
            raise ValueError(f"group {name!r} conditions on the label; groups must be feature-only")
    rows = [RateRow("all", len(results), sum(1 for _, r in results if r.robust))]
    for name, g in groups:
        members = [r for x, r in results if g(x, 0)]
        rows.append(RateRow(name, len(members), sum(1 for r in members if r.robust)))
    return RateTable(tuple(rows))


def parse_groups(text: str, schema: FeatureSchema) -> list[tuple[str, TargetPredicate]]:
    """``name: pred; name: pred`` with predicates in the bias-language syntax."""
    out = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        if ":" not in part:
            raise ValueError(f"group {part!r} needs the form name: predicate")
        name, pred = part.split(":", 1)
        out.append((name.strip(), parse_target(pred, schema)))
    return out


def emit(table: RateTable, fmt: str = "csv") -> bytes:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in table.rows:
            w.writerow((r.group, r.n, r.certified, r.rate_pct))
        return buf.getvalue().encode()
    if fmt == "json":
        body = {
            "columns": list(COLUMNS),
            "rows": [
                {
                    "group": r.group,
                    "n": r.n,
                    "certified": r.certified,
                    "rate": None if r.rate is None else str(r.rate),
                    "rate_pct": r.rate_pct,
                }
                for r in table.rows
            ],
        }
        return (json.dumps(body, indent=2) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}; expected csv or json")


def load_table(payload: bytes) -> RateTable:
    """Inverse of ``emit(..., 'json')``."""
    body = json.loads(payload)
    return RateTable(tuple(RateRow(r["group"], r["n"], r["certified"]) for r in body["rows"]))
