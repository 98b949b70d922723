from fractions import Fraction
from types import SimpleNamespace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from biascert.abstract import certify
from biascert.bias import BiasSyntaxError, parse_bias_dsl
from biascert.oracle import oracle_robust
from biascert.report import COLUMNS, RateRow, RateTable, emit, load_table, parse_groups, stratified_rates

from conftest import running_schema

F = Fraction


def _r(robust):
    return SimpleNamespace(robust=robust)


def test_three_of_four(schema):
    results = [(("Black", F(i)), _r(i != 2)) for i in range(4)]
    table = stratified_rates(results, parse_groups("everyone: score <= 100", schema))
    assert table["everyone"].rate == F(3, 4) and table["everyone"].rate_pct == "75.0"
    assert [r.group for r in table.rows] == ["all", "everyone"]


def test_empty_group_is_na(schema):
    table = stratified_rates([(("White", F(1)), _r(True))], parse_groups("b: race=Black", schema))
    assert table["b"].n == 0 and table["b"].rate is None and table["b"].rate_pct == "n/a"


def test_label_atoms_rejected(schema):
    with pytest.raises(ValueError, match="feature-only"):
        stratified_rates([], parse_groups("b: race=Black and label=1", schema))


def test_group_syntax(schema):
    with pytest.raises(ValueError):
        parse_groups("race=Black", schema)
    with pytest.raises(BiasSyntaxError):
        parse_groups("b: colour=Black", schema)
    assert parse_groups(" ; ", schema) == []


def test_csv_one_row():
    out = emit(RateTable((RateRow("all", 3, 1),)), "csv")
    assert out == b"group,n,certified,rate_pct\nall,3,1,33.3\n"


def test_json_round_trip():
    table = RateTable((RateRow("all", 8, 3), RateRow("x", 0, 0)))
    assert load_table(emit(table, "json")) == table
    assert emit(table, "json") == emit(table, "json")


def test_unknown_format():
    with pytest.raises(ValueError, match="unknown format"):
        emit(RateTable(()), "xml")


@pytest.mark.parametrize(
    "certified,n,shown",
    [(1, 8, "12.5"), (3, 8, "37.5"), (5, 16, "31.2"), (7, 16, "43.8"), (2, 3, "66.7"), (0, 5, "0.0"), (5, 5, "100.0")],
)
def test_half_even_percentages(certified, n, shown):
    assert RateRow("g", n, certified).rate_pct == shown


@given(st.lists(st.tuples(st.sampled_from(["Black", "White"]), st.integers(0, 9), st.booleans()), max_size=30))
def test_disjoint_groups_sum_to_total(points):
    s = running_schema()
    results = [((race, F(v)), _r(ok)) for race, v, ok in points]
    table = stratified_rates(results, parse_groups("b: race=Black; w: race=White", s))
    assert table["b"].certified + table["w"].certified == table["all"].certified
    assert table["b"].n + table["w"].n == table["all"].n


def test_constructed_group_gap(running, schema):
    # every verdict below is confirmed by the oracle, so the rates are exact
    model = parse_bias_dsl("flip(l=1, where label=1)", schema)
    points = [("Black", F(v)) for v in (0, 4, 5)] + [("White", F(v)) for v in (1, 2, 3)]
    results = []
    for x in points:
        r = certify(running, model, x, 1)
        assert r.robust == oracle_robust(running, model, x, 1).robust
        results.append((x, r))
    table = stratified_rates(results, parse_groups("A: race=Black; B: race=White", schema))
    assert (table["A"].certified, table["A"].n) == (1, 3)
    assert (table["B"].certified, table["B"].n) == (3, 3)
    assert table["A"].rate < table["B"].rate
    assert emit(table).decode().splitlines() == [",".join(COLUMNS), "all,6,4,66.7", "A,3,1,33.3", "B,3,3,100.0"]
