from fractions import Fraction
from pathlib import Path

import pytest

from biascert.dataset import Dataset, Feature, FeatureSchema, load_dataset

FIXTURES = Path(__file__).parent / "fixtures"

# criterion number -> (passed, detail), passed is None when skipped; filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool | None, str]] = {}


def running_schema() -> FeatureSchema:
    return FeatureSchema.from_json((FIXTURES / "running_schema.json").read_text(encoding="utf-8"))


def running_dataset() -> Dataset:
    return load_dataset((FIXTURES / "running.csv").read_text(), running_schema())


def numeric_dataset(values, labels, n_labels=2) -> Dataset:
    schema = FeatureSchema((Feature("f"),), "label", n_labels)
    return Dataset(schema, tuple(((v,), y) for v, y in zip(values, labels)))


@pytest.fixture
def running():
    return running_dataset()


@pytest.fixture
def schema():
    return running_schema()


BLACK_7 = ("Black", Fraction(7))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'SKIP' if ok is None else 'PASS' if ok else 'FAIL'}  {detail}")
