"""Command-line entry point: ``biascert <command> [flags]``.

Exit status is 0 on success, 1 for usage or configuration mistakes and 2 when
the run itself fails (unreadable data, enumeration cap exceeded, ...).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .abstract import certify
from .bias import BiasModel, BiasSyntaxError, normalize, parse_bias_dsl
from .concrete import dump_tree, train
from .dataset import Dataset, DatasetError, FeatureSchema, load_dataset
from .fuzz import falsify
from .oracle import CapExceeded, DEFAULT_CAP, Universe, UniverseRequired, bias_set_size, oracle_robust
from .report import emit, parse_groups, stratified_rates


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, *, bias: bool = True, point: bool = False) -> None:
    p.add_argument("--data", required=True, help="training CSV with a header row")
    p.add_argument("--schema", required=True, help="schema JSON file")
    p.add_argument("--depth", type=int, default=1)
    if bias:
        p.add_argument("--bias", default="", help='e.g. "flip(l=1, where race=Black and label=0)"')
    if point:
        p.add_argument("--point", help="test point, name=value,name=value")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="biascert", description="Certify decision-tree predictions against data bias.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("certify", help="certify one point or every row of a test CSV")
    _common(p, point=True)
    p.add_argument("--test", help="CSV of test points (label column optional)")
    p.add_argument("--universe", help="'observed', 'schema', or a JSON file of per-feature values")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--timing", action="store_true", help="include wall-clock time in JSON records")

    p = sub.add_parser("rates", help="certification rates overall and per group")
    _common(p)
    p.add_argument("--test", required=True)
    p.add_argument("--groups", default="", help='"name: pred; name: pred"')
    p.add_argument("--universe")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("oracle", help="exact verdict by enumerating the bias set")
    _common(p, point=True)
    p.add_argument("--universe")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("falsify", help="random search for a prediction-changing member")
    _common(p, point=True)
    p.add_argument("--universe")
    p.add_argument("--iters", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("train", help="train the concrete tree and print it as JSON")
    _common(p, bias=False)

    p = sub.add_parser("enum-size", help="size of the bias set")
    _common(p)
    p.add_argument("--universe")
    p.add_argument("--format", choices=("text", "json"), default="text")
    return parser


# --- loading -----------------------------------------------------------------


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise RuntimeError(f"cannot read {path}: {e.strerror}") from None


def _schema(args) -> FeatureSchema:
    try:
        return FeatureSchema.from_json(_read_text(args.schema))
    except (json.JSONDecodeError, DatasetError, TypeError) as e:
        raise UsageError(f"bad schema {args.schema}: {e}") from None


def _bias(args, schema: FeatureSchema, data: Dataset) -> BiasModel:
    try:
        return parse_bias_dsl(args.bias, schema, len(data))
    except BiasSyntaxError as e:
        raise UsageError(f"bad bias model: {e}") from None


def _point(args, schema: FeatureSchema):
    if not args.point:
        raise UsageError("--point is required")
    try:
        return schema.parse_point(args.point)
    except DatasetError as e:
        raise UsageError(f"bad point: {e}") from None


def _universe(args, data: Dataset) -> Universe | None:
    choice = getattr(args, "universe", None)
    if not choice:
        return None
    if choice == "observed":
        return Universe.observed(data)
    if choice == "schema":
        return Universe.from_schema(data)
    try:
        raw = json.loads(_read_text(choice))
        feats = data.schema.features
        return Universe(tuple(tuple(f.parse(str(v)) for v in raw[f.name]) for f in feats))
    except (json.JSONDecodeError, KeyError, DatasetError, ValueError) as e:
        raise UsageError(f"bad universe {choice}: {e}") from None


def _test_points(path: str, schema: FeatureSchema) -> list:
    # the label column is optional in test files
    text = _read_text(path)
    header = text.splitlines()[0].split(",") if text.strip() else []
    if schema.label_column not in [h.strip() for h in header]:
        lines = text.splitlines()
        lines[0] += f",{schema.label_column}"
        lines[1:] = [ln + ",0" if ln.strip() else ln for ln in lines[1:]]
        text = "\n".join(lines)
    return [x for x, _ in load_dataset(text, schema).rows]


def _certify_one(job):
    data, model, x, depth, universe = job
    return certify(data, model, x, depth, universe)


def _certify_many(data, model, points, depth, universe, jobs):
    jobs_in = [(data, model, x, depth, universe) for x in points]
    if jobs <= 1 or len(points) <= 1:
        return [_certify_one(j) for j in jobs_in]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_certify_one, jobs_in, chunksize=max(1, len(points) // (4 * jobs))))


# --- commands ----------------------------------------------------------------


def _cmd_certify(args, schema, data, out) -> None:
    model = _bias(args, schema, data)
    universe = _universe(args, data)
    if args.test:
        points = _test_points(args.test, schema)
    else:
        points = [_point(args, schema)]
    results = _certify_many(data, normalize(model), points, args.depth, universe, args.jobs)
    text = model.render(schema)
    for x, r in zip(points, results):
        if args.format == "json":
            out.write(json.dumps(r.to_json(schema, x, text, timing=args.timing), sort_keys=True) + "\n")
        elif args.test:
            shown = ",".join(f"{f.name}={v}" for f, v in zip(schema.features, x))
            out.write(f"{shown}\t{r.verdict(schema)}\n")
        else:
            out.write(r.verdict(schema) + "\n")


def _cmd_rates(args, schema, data, out) -> None:
    model = _bias(args, schema, data)
    try:
        groups = parse_groups(args.groups, schema)
    except (BiasSyntaxError, ValueError) as e:
        raise UsageError(f"bad groups: {e}") from None
    points = _test_points(args.test, schema)
    results = _certify_many(data, normalize(model), points, args.depth, _universe(args, data), args.jobs)
    out.write(emit(stratified_rates(list(zip(points, results)), groups), args.format).decode())


def _cmd_oracle(args, schema, data, out) -> None:
    model = _bias(args, schema, data)
    x = _point(args, schema)
    verdict = oracle_robust(data, model, x, args.depth, _universe(args, data), args.cap)
    if args.format == "json":
        body = {
            "verdict": "robust" if verdict.robust else "nonrobust",
            "labels": [schema.label_name(p) if p is not None else None for p in sorted(verdict.predictions, key=lambda p: -1 if p is None else p)],
            "members": verdict.members,
        }
        out.write(json.dumps(body, sort_keys=True) + "\n")
    else:
        out.write(f"{verdict.render(schema)}\nmembers: {verdict.members}\n")


def _cmd_falsify(args, schema, data, out) -> None:
    model = _bias(args, schema, data)
    x = _point(args, schema)
    try:
        result = falsify(data, model, x, args.depth, args.iters, args.seed, _universe(args, data), args.jobs)
    except ValueError as e:
        if isinstance(e, UniverseRequired):
            raise
        raise UsageError(str(e)) from None
    out.write(json.dumps(result.to_json(schema), sort_keys=True) + "\n")


def _cmd_train(args, schema, data, out) -> None:
    out.write(dump_tree(train(data, args.depth), schema) + "\n")


def _cmd_enum_size(args, schema, data, out) -> None:
    model = _bias(args, schema, data)
    rep = bias_set_size(data, model, _universe(args, data))
    count = "inf" if rep.count is None else str(rep.count)
    if args.format == "json":
        body = {"count": count, "exact": rep.exact, "bucket": rep.bucket}
        out.write(json.dumps(body, sort_keys=True) + "\n")
    else:
        kind = "exact" if rep.exact else "upper bound"
        out.write(f"size: {count} ({kind}); bucket {rep.bucket}\n")


COMMANDS = {
    "certify": _cmd_certify,
    "rates": _cmd_rates,
    "oracle": _cmd_oracle,
    "falsify": _cmd_falsify,
    "train": _cmd_train,
    "enum-size": _cmd_enum_size,
}


def run(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.depth < 1 and args.command != "train":
            raise UsageError("--depth must be at least 1")
        schema = _schema(args)
        data = load_dataset(_read_text(args.data), schema)
        if len(data) == 0:
            raise RuntimeError(f"{args.data} has no rows")
        COMMANDS[args.command](args, schema, data, out)
    except UsageError as e:
        err.write(f"usage error: {e}\n")
        return 1
    except CapExceeded as e:
        err.write(f"error: {e}\nsize: {e.size}\n")
        return 2
    except (RuntimeError, DatasetError, UniverseRequired, ValueError) as e:
        err.write(f"error: {e}\n")
        return 2
    return 0


def main() -> None:
    sys.exit(run())
