"""Walk the nine-row hiring example through every engine.

    python3 scripts/running_example.py
"""

from pathlib import Path

from biascert import certify, load_dataset, oracle_robust, parse_bias_dsl
from biascert.concrete import dump_tree, train
from biascert.dataset import FeatureSchema
from biascert.fuzz import falsify

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def main() -> None:
    schema = FeatureSchema.from_json((FIXTURES / "running_schema.json").read_text(encoding="utf-8"))
    data = load_dataset((FIXTURES / "running.csv").read_text(encoding="utf-8"), schema)
    x = schema.parse_point("race=Black,score=7")
    print(dump_tree(train(data, 1), schema))
    for text in ("flip(l=1, where race=Black and label=0)", "flip(l=1)", "fake(f=1)"):
        bias = parse_bias_dsl(text, schema, len(data))
        res = certify(data, bias, x, 1, trace=True)
        exact = oracle_robust(data, bias, x, 1)
        hit = falsify(data, bias, x, 1, 1000, 0)
        print(f"{text:45s} certify={res.verdict(schema):16s} oracle={exact.render(schema):18s} falsify_found={hit.found}")


if __name__ == "__main__":
    main()
