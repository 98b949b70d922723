import io
import json
import subprocess
import sys

import pytest

from biascert.cli import run

from conftest import FIXTURES

DATA = str(FIXTURES / "running.csv")
SCHEMA = str(FIXTURES / "running_schema.json")
TARGETED = "flip(l=1, where race=Black and label=0)"


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def base(cmd, *rest):
    return (cmd, "--data", DATA, "--schema", SCHEMA, *rest)


@pytest.fixture
def test_csv(tmp_path):
    p = tmp_path / "test.csv"
    p.write_text("race,score\nBlack,0\nBlack,4\nBlack,5\nWhite,1\nWhite,2\nWhite,3\n")
    return str(p)


def test_certify_running_example():
    code, out, _ = call(*base("certify", "--bias", TARGETED, "--depth", "1", "--point", "race=Black,score=7"))
    assert code == 0 and out == "Robust(✓)\n"


def test_certify_json_and_timing():
    code, out, _ = call(*base("certify", "--bias", TARGETED, "--point", "race=Black,score=7", "--format", "json"))
    body = json.loads(out)
    assert code == 0 and body["verdict"] == "robust" and body["labels"] == ["✓"] and body["root_split_count"] == 5
    assert "wall_ms" not in body
    _, timed, _ = call(*base("certify", "--bias", TARGETED, "--point", "race=Black,score=7", "--format", "json", "--timing"))
    assert "wall_ms" in json.loads(timed)


def test_certify_test_file(test_csv):
    code, out, _ = call(*base("certify", "--bias", "flip(l=1, where label=1)", "--test", test_csv, "--jobs", "2"))
    lines = out.splitlines()
    assert code == 0 and len(lines) == 6
    assert lines[0] == "race=Black,score=0\tRobust(✗)"
    assert lines[1].endswith("Unknown({✗, ✓})")


def test_usage_errors():
    assert call("certify", "--schema", SCHEMA, "--point", "race=Black,score=7")[0] == 1
    assert call("frobnicate")[0] == 1
    assert call(*base("certify", "--bias", "flip(", "--point", "race=Black,score=7"))[0] == 1
    assert call(*base("certify", "--point", "race=Black"))[0] == 1
    assert call(*base("certify"))[0] == 1
    assert call(*base("certify", "--depth", "0", "--point", "race=Black,score=7"))[0] == 1
    assert call(*base("falsify", "--point", "race=Black,score=7", "--iters", "0"))[0] == 1
    assert call(*base("rates", "--test", DATA, "--groups", "nocolon"))[0] == 1


def test_runtime_errors(tmp_path):
    code, _, err = call(*base("oracle", "--bias", "flip(l=2)", "--point", "race=Black,score=7", "--cap", "10"))
    assert code == 2 and "size: 46" in err
    code, _, err = call("train", "--data", str(tmp_path / "nope.csv"), "--schema", SCHEMA)
    assert code == 2 and "cannot read" in err
    code, _, _ = call(*base("oracle", "--bias", "miss(m=1)", "--point", "race=Black,score=7"))
    assert code == 2


def test_oracle_command():
    code, out, _ = call(*base("oracle", "--bias", TARGETED, "--point", "race=Black,score=7"))
    assert code == 0 and out == "Robust(✓)\nmembers: 3\n"
    code, out, _ = call(*base("oracle", "--bias", "miss(m=1)", "--universe", "observed", "--point", "race=Black,score=7", "--format", "json"))
    assert code == 0 and json.loads(out)["members"] == 37


def test_train_dump():
    code, out, _ = call(*base("train", "--depth", "1"))
    tree = json.loads(out)
    assert code == 0 and "score" in json.dumps(tree, ensure_ascii=False)


def test_rates(test_csv):
    code, out, _ = call(*base("rates", "--bias", "flip(l=1, where label=1)", "--test", test_csv, "--groups", "A: race=Black; B: race=White"))
    assert code == 0
    assert out.splitlines() == ["group,n,certified,rate_pct", "all,6,4,66.7", "A,3,1,33.3", "B,3,3,100.0"]


def test_enum_size():
    assert call(*base("enum-size", "--bias", "flip(l=1)"))[1] == "size: 10 (exact); bucket <1e10\n"
    code, out, _ = call(*base("enum-size", "--bias", "miss(m=1)", "--format", "json"))
    assert json.loads(out) == {"count": "inf", "exact": True, "bucket": "infinite"}


def test_falsify_command(tmp_path):
    data = tmp_path / "six.csv"
    data.write_text("f,label\n" + "".join(f"{v},{y}\n" for v, y in zip(range(6), [0, 0, 0, 1, 0, 0])))
    schema = tmp_path / "six.json"
    schema.write_text(json.dumps({"features": [{"name": "f", "kind": "numeric"}], "label": {"name": "label", "arity": 2}}))
    code, out, _ = call("falsify", "--data", str(data), "--schema", str(schema), "--bias", "flip(l=1)", "--point", "f=5", "--seed", "0")
    body = json.loads(out)
    assert code == 0 and body["found"] and body["iteration"] == 1 and body["witness_rows_changed"] == 1


SURFACE = [
    base("certify", "--bias", TARGETED, "--point", "race=Black,score=7", "--format", "json"),
    base("oracle", "--bias", "flip(l=1)", "--point", "race=Black,score=7", "--format", "json"),
    base("falsify", "--bias", "flip(l=2)", "--point", "race=Black,score=3", "--iters", "200", "--seed", "9"),
    base("train", "--depth", "2"),
    base("enum-size", "--bias", "flip(l=1); fake(f=1)"),
]


@pytest.mark.parametrize("argv", SURFACE, ids=lambda a: a[0])
def test_repeated_runs_identical(argv):
    first, second = call(*argv), call(*argv)
    assert first == second and first[0] == 0


def test_module_entry_point():
    argv = [sys.executable, "-m", "biascert", *base("certify", "--bias", TARGETED, "--point", "race=Black,score=7")]
    runs = [subprocess.run(argv, capture_output=True, check=False) for _ in range(2)]
    assert runs[0].returncode == 0 and runs[0].stdout == runs[1].stdout == "Robust(✓)\n".encode()
