"""Small random certification problems for oracle cross-checks and sweeps."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .bias import FAKE, FLIP, KINDS, MISS, BiasComponent, BiasModel
from .dataset import CATEGORICAL, NUMERIC, Dataset, Feature, FeatureAtom, FeatureSchema, LabelAtom, TargetPredicate
from .oracle import Universe


@dataclass(frozen=True)
class InstanceConfig:
    max_rows: int = 10
    labels: tuple[int, ...] = (2, 3)
    max_features: int = 3
    max_values: int = 4
    max_budget: int = 2
    max_components: int = 3
    kinds: tuple[str, ...] = KINDS
    label_atom_prob: float = 0.3
    target_prob: float = 0.5
    depths: tuple[int, ...] = (1, 2)


@dataclass(frozen=True)
class Instance:
    data: Dataset
    model: BiasModel
    x: tuple
    depth: int
    universe: Universe = field(compare=False)


def random_schema(rng: random.Random, cfg: InstanceConfig) -> tuple[FeatureSchema, list[list]]:
    feats, domains = [], []
    for j in range(rng.randint(1, cfg.max_features)):
        k = rng.randint(1, cfg.max_values)
        if rng.random() < 0.5:
            feats.append(Feature(f"f{j}", NUMERIC))
            domains.append(list(range(k)))
        else:
            feats.append(Feature(f"f{j}", CATEGORICAL))
            domains.append([chr(ord("a") + v) for v in range(k)])
    return FeatureSchema(tuple(feats), "label", rng.choice(cfg.labels)), domains


def random_target(rng: random.Random, schema: FeatureSchema, domains, cfg: InstanceConfig) -> TargetPredicate:
    if rng.random() >= cfg.target_prob:
        return TargetPredicate()
    atoms: list = []
    j = rng.randrange(len(domains))
    v = rng.choice(domains[j])
    op = "<=" if schema.features[j].kind == NUMERIC and rng.random() < 0.5 else "="
    atoms.append(FeatureAtom(j, op, v))
    if rng.random() < cfg.label_atom_prob:
        k = rng.randint(1, schema.n_labels - 1)
        atoms.append(LabelAtom(frozenset(rng.sample(range(schema.n_labels), k))))
    return TargetPredicate(tuple(atoms))


def random_model(rng: random.Random, schema, domains, cfg: InstanceConfig) -> BiasModel:
    comps = []
    for _ in range(rng.randint(1, cfg.max_components)):
        kind = rng.choice(cfg.kinds)
        comps.append(BiasComponent(kind, rng.randint(0, cfg.max_budget), random_target(rng, schema, domains, cfg)))
    return BiasModel(tuple(comps))


def random_instance(rng: random.Random, cfg: InstanceConfig = InstanceConfig()) -> Instance:
    schema, domains = random_schema(rng, cfg)
    rows = tuple(
        (tuple(rng.choice(d) for d in domains), rng.randrange(schema.n_labels))
        for _ in range(rng.randint(1, cfg.max_rows))
    )
    data = Dataset(schema, rows)
    model = random_model(rng, schema, domains, cfg)
    universe = Universe.observed(data)
    x = tuple(rng.choice(vs) for vs in universe.values)
    return Instance(data, model, x, rng.choice(cfg.depths), universe)


def single_component(rng: random.Random, schema, domains, kind: str, cfg: InstanceConfig) -> BiasModel:
    return BiasModel((BiasComponent(kind, rng.randint(0, cfg.max_budget), random_target(rng, schema, domains, cfg)),))


__all__ = ["Instance", "InstanceConfig", "random_instance", "random_model", "random_schema", "random_target", "single_component", "MISS", "FLIP", "FAKE"]
