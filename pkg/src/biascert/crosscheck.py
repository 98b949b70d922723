"""Cross-checks of the abstract engine against bias-set enumeration."""

import random

from .abstract import (
    AbstractDataset,
    certify,
    cost_abstract,
    gini_abstract,
    node_predicates,
    pr_abstract_vector,
    size_abstract,
    split_abstract,
    value_pool,
)
from .bias import normalize
from .concrete import best_split, cost, gini, pr
from .dataset import enumerate_predicates
from .oracle import CapExceeded, enumerate_bias_set, member_prediction
from .random_instances import InstanceConfig, random_instance


def check(inst, cap):
    """Return a list of violation strings for one instance."""
    members = enumerate_bias_set(inst.data, inst.model, inst.universe, cap)
    model = normalize(inst.model)
    root = AbstractDataset(inst.data, model)
    res = certify(inst.data, model, inst.x, inst.depth, inst.universe)
    cands, ref = node_predicates(root, value_pool(inst.data, inst.universe))
    phis = set(split_abstract(root, cands, ref)) if cands else set()
    prv, size, imp = pr_abstract_vector(root), size_abstract(root), gini_abstract(root)
    costs = {p: cost_abstract(root, p) for p in cands}
    bad = []
    preds = set()
    for m in members:
        p = member_prediction(m, inst.x, inst.depth)
        preds.add(p)
        if p is not None and p not in res.labels:
            bad.append(f"infer: member predicts {p}, abstract {set(res.labels)}")
        if len(m) not in size:
            bad.append(f"size {len(m)} not in {size}")
        if not len(m):
            continue
        for i, v in enumerate(pr(m)):
            if v not in prv[i]:
                bad.append(f"pr_{i} {v} not in {prv[i]}")
        if gini(m) not in imp:
            bad.append(f"gini {gini(m)} not in {imp}")
        for q, c in costs.items():
            if cost(m, q) not in c:
                bad.append(f"cost {q} {cost(m, q)} not in {c}")
        mc = enumerate_predicates(m)
        if mc and best_split(m, mc) not in phis:
            bad.append(f"split {best_split(m, mc)} not in split^a")
    if res.robust and preds != {res.label}:
        bad.append(f"certified {res.label} but oracle saw {preds}")
    return bad, res.robust, len(members)


def sweep(n, seed, cap, cfg=InstanceConfig()):
    rng = random.Random(seed)
    done = robust = skipped = 0
    failures = []
    while done < n:
        inst = random_instance(rng, cfg)
        try:
            bad, r, _ = check(inst, cap)
        except CapExceeded:
            skipped += 1
            continue
        done += 1
        robust += r
        if bad:
            failures.append((inst, bad))
    return done, robust, skipped, failures
