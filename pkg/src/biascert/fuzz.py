"""Seeded random search for datasets in the bias set that change a prediction.

Iteration ``i`` of a run with seed ``s`` draws from its own generator,
``numpy.random.default_rng([s, i])``, so results do not depend on how the
iterations are split across workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bias import FAKE, FLIP, MISS, BiasModel, NormalizedBiasModel, components_of
from .concrete import infer, predict, train
from .dataset import Dataset, FeatureVector
from .oracle import Universe, UniverseRequired

RNG_ALGORITHM = f"numpy-{np.__version__}/PCG64/SeedSequence([seed, iteration])"


@dataclass(frozen=True)
class Perturbation:
    dataset: Dataset
    added: int
    flipped: int
    removed: int

    @property
    def rows_changed(self) -> int:
        return self.added + self.flipped + self.removed


def perturb_logged(
    data: Dataset,
    model: BiasModel | NormalizedBiasModel,
    seed,
    universe: Universe | None = None,
) -> Perturbation:
    rng = np.random.default_rng(seed)
    n = data.n_labels
    rows = list(data.rows)
    added = flipped = removed = 0
    for comp in components_of(model):
        if comp.budget == 0:
            continue
        k = int(rng.integers(0, comp.budget + 1))
        if comp.kind == MISS:
            if universe is None:
                raise UniverseRequired("sampling miss needs a finite universe")
            pool = universe.rows(n, comp.target)
            if not pool:
                continue
            picks = rng.integers(0, len(pool), size=k)
            rows.extend(pool[int(j)] for j in picks)
            added += k
            continue
        eligible = [p for p, (x, y) in enumerate(rows) if comp.target(x, y)]
        k = min(k, len(eligible))
        chosen = [eligible[int(j)] for j in rng.choice(len(eligible), size=k, replace=False)] if k else []
        if comp.kind == FLIP:
            for p in chosen:
                x, y = rows[p]
                z = int(rng.integers(0, n - 1))
                rows[p] = (x, z if z < y else z + 1)
            flipped += k
        elif comp.kind == FAKE:
            drop = set(chosen)
            rows = [r for p, r in enumerate(rows) if p not in drop]
            removed += k
    return Perturbation(data.with_rows(rows), added, flipped, removed)


def perturb(
    data: Dataset,
    model: BiasModel | NormalizedBiasModel,
    seed,
    universe: Universe | None = None,
) -> Dataset:
    """One random member of the bias set; ``seed`` is anything ``default_rng`` accepts."""
    return perturb_logged(data, model, seed, universe).dataset


@dataclass(frozen=True)
class Counterexample:
    dataset: Dataset
    label: int
    original_label: int
    iteration: int
    rows_changed: int


@dataclass(frozen=True)
class FalsifyResult:
    seed: int
    iterations: int
    counterexample: Counterexample | None

    @property
    def found(self) -> bool:
        return self.counterexample is not None

    def to_json(self, schema=None) -> dict:
        ce = self.counterexample
        name = schema.label_name if schema is not None else (lambda i: i)
        out = {
            "found": self.found,
            "iteration": ce.iteration if ce else None,
            "seed": self.seed,
            "witness_rows_changed": ce.rows_changed if ce else None,
            "rng": RNG_ALGORITHM,
        }
        if ce:
            out["original_label"] = name(ce.original_label)
            out["label"] = name(ce.label)
        return out


def _search(args) -> tuple[int, Perturbation, int] | None:
    data, model, x, depth, seed, universe, base, indices = args
    for i in indices:
        pert = perturb_logged(data, model, [seed, i], universe)
        if len(pert.dataset) == 0:
            continue
        label = predict(pert.dataset, x, depth)
        if label != base:
            return i, pert, label
    return None


def falsify(
    data: Dataset,
    model: BiasModel | NormalizedBiasModel,
    x: FeatureVector,
    depth: int,
    iterations: int,
    seed: int,
    universe: Universe | None = None,
    jobs: int = 1,
) -> FalsifyResult:
    """First sampled member (by iteration index) whose prediction for ``x`` differs.

    Samples that remove every row are skipped.  A hit is re-checked by training
    full trees on both datasets before it is returned.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    base = predict(data, x, depth)
    chunks: Sequence[range]
    if jobs <= 1:
        hit = _search((data, model, x, depth, seed, universe, base, range(iterations)))
    else:
        step = -(-iterations // jobs)
        chunks = [range(lo, min(lo + step, iterations)) for lo in range(0, iterations, step)]
        args = [(data, model, x, depth, seed, universe, base, c) for c in chunks]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            hits = [h for h in pool.map(_search, args) if h is not None]
        hit = min(hits, key=lambda h: h[0]) if hits else None
    if hit is None:
        return FalsifyResult(seed, iterations, None)
    i, pert, label = hit
    original = infer(train(data, depth), x)
    retrained = infer(train(pert.dataset, depth), x)
    if retrained != label or original != base or retrained == original:
        raise AssertionError("counterexample did not survive retraining")
    return FalsifyResult(seed, iterations, Counterexample(pert.dataset, label, base, i, pert.rows_changed))
