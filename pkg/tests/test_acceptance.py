"""Acceptance gate: one test per criterion, each recorded for the summary table.

Run ``pytest tests/test_acceptance.py -v`` and read the "acceptance criteria"
section at the end of the output.
"""

import time

import numpy as np
import pytest

from temporal_sortition import (
    Instance,
    audit_sequence,
    brute_force_pfc,
    build_tree,
    chain_based_representation,
    fairness_audit,
    fixture,
    generate,
    nested_based_representation,
    pfc_factor,
    prf_factor,
)
from temporal_sortition.audit import pfc_witness_ratio
from temporal_sortition.chain import CHAIN_RADIUS_FACTOR, group_coverage_distances, plan_chain
from temporal_sortition.federated import composition_audit, federated_pipeline
from temporal_sortition.nested import check_nested_coverage, plan_nested, sample_partition

KINDS = ("line-clusters", "planar-gaussians", "uniform")


@pytest.fixture
def record(record_property):
    def _record(num, detail=""):
        record_property("criterion", num)
        record_property("detail", detail)

    return _record


def random_instance(rng, n, kind=None):
    kind = kind or KINDS[int(rng.integers(len(KINDS)))]
    clusters = int(rng.integers(1, 6))
    weights = rng.dirichlet(np.ones(clusters))
    weights = (weights / weights.sum()).tolist()
    weights[-1] = 1.0 - sum(weights[:-1])
    return generate({
        "kind": kind, "n": n, "weights": weights, "separation": float(rng.uniform(2, 30)),
        "spread": float(rng.uniform(0.5, 3)), "seed": int(rng.integers(2**31)),
    })


def nested_cases():
    """The 200 strict nested configurations shared by criteria 3 and 5."""
    rng = np.random.default_rng(3)
    for i in range(200):
        ell = int(rng.choice([2, 3]))
        k = int(rng.integers(1, 6))
        q = int(rng.integers(1, 120 // (ell * k) + 1))
        yield i, random_instance(rng, ell * k * q), ell, k


def chain_cases():
    """The 200 strict chain configurations shared by criteria 4 and 5."""
    rng = np.random.default_rng(4)
    for i in range(200):
        ell = int(rng.choice([2, 3, 5]))
        sizes = rng.integers(1, 5, size=ell).tolist()
        m = int(rng.integers(1, 200 // sum(sizes) + 1))
        yield i, random_instance(rng, sum(sizes) * m), sizes


def test_criterion_1_theorem1_counterexample(record):
    start = time.perf_counter()
    inst = fixture("theorem1")
    x = inst.index_of
    p1 = [x("x1"), x("x3"), x("x4"), x("x7")]
    p2 = [x("x1"), x("x3"), x("x4")]
    alpha = prf_factor(inst, p1, 4, "brute")
    sub = inst.restrict(p1)
    beta = prf_factor(sub, [0, 1, 2], 3, "brute")
    gamma = prf_factor(inst, p2, 3, "brute")
    witness = [inst.ids[v] for v in gamma.witness.members]
    elapsed = time.perf_counter() - start
    record(1, f"alpha={alpha.factor:g} beta={beta.factor:g} gamma={gamma.factor} witness={witness}")
    assert alpha.factor <= 1
    assert beta.factor <= 1
    assert gamma.factor == np.inf
    assert witness == ["x7", "x8", "x9"]
    assert elapsed < 1


def test_criterion_2_divisible_composition(record):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    k1, k2 = 4, 2
    violations, worst = 0, 0.0
    for i in range(100):
        inst = random_instance(rng, 40, "line-clusters")
        p1 = federated_pipeline(inst, 1, k1, seed=i).panels[0]
        sub = inst.restrict(p1)
        local = federated_pipeline(sub, 1, k2, seed=i).panels[0]
        p2 = [p1[j] for j in local]
        rep = composition_audit(inst, k1, k2, p1, p2)
        violations += not rep.holds
        worst = max(worst, rep.gamma.factor / rep.bound)
    elapsed = time.perf_counter() - start
    record(2, f"violations={violations}/100 worst gamma/bound={worst:.3f}")
    assert violations == 0
    assert elapsed < 60


def test_criterion_3_nested_bounds(record):
    start = time.perf_counter()
    violations, worst = 0, 0.0
    for i, inst, ell, k in nested_cases():
        plan = plan_nested(inst, ell, k)
        seq = nested_based_representation(inst, ell, k, seed=i, plan=plan)
        check_nested_coverage(plan.tree, seq)
        report = audit_sequence(inst, seq, ["prefix", "panel"])
        violations += len(report.failures())
        worst = max(worst, max(r.result.factor / r.threshold for r in report.rows))
    elapsed = time.perf_counter() - start
    record(3, f"violations={violations} worst factor/bound={worst:.3f}")
    assert violations == 0
    assert elapsed < 300


def test_criterion_4_chain_bound(record):
    start = time.perf_counter()
    prefix_bad, radius_bad, worst, worst_radius = 0, 0, 0.0, 0.0
    for i, inst, sizes in chain_cases():
        plan = plan_chain(inst, sizes)
        seq = chain_based_representation(inst, sizes, seed=i, plan=plan)
        for row in group_coverage_distances(plan.families, seq):
            if row["radius"] > 0:
                worst_radius = max(worst_radius, row["distance"] / row["radius"])
            radius_bad += not row["distance"] <= CHAIN_RADIUS_FACTOR * row["radius"]
        report = audit_sequence(inst, seq, ["prefix"], thresholds=19.0)
        prefix_bad += len(report.failures())
        worst = max(worst, max(r.result.factor for r in report.rows))
    elapsed = time.perf_counter() - start
    record(4, f"prefix violations={prefix_bad} worst prefix factor={worst:.3f} "
              f"16r violations={radius_bad} worst distance/radius={worst_radius:.2f}")
    assert prefix_bad == 0
    assert radius_bad == 0
    assert elapsed < 600


def test_criterion_5_structural_fairness(record):
    bad = 0
    for _, inst, ell, k in nested_cases():
        parts = sample_partition(plan_nested(inst, ell, k))
        q = inst.n // (ell * k)
        bad += len(parts) != ell * k or {len(p) for p in parts} != {q} \
            or sorted(v for p in parts for v in p) != list(range(inst.n))
    for _, inst, sizes in chain_cases():
        last = plan_chain(inst, sizes).families.level(len(sizes))
        m = inst.n // sum(sizes)
        bad += len(last) != sum(sizes) or {g.size for g in last} != {m} \
            or sorted(v for g in last for v in g.members) != list(range(inst.n))
    record(5, f"partition mismatches={bad}/400")
    assert bad == 0


def test_criterion_6_empirical_fairness(record):
    start = time.perf_counter()
    inst = fixture("figure1")
    blocks = [
        fairness_audit("nested", inst, {"ell": 2, "k": 2}, 10_000, seed=61),
        fairness_audit("chain", inst, {"sizes": [2, 2]}, 10_000, seed=62),
        fairness_audit("federated", inst, {"ell": 2, "k": 2}, 10_000, seed=63),
    ]
    elapsed = time.perf_counter() - start
    record(6, " ".join(f"{b.algorithm}: max dev {b.max_abs_deviation:.4f}/{b.tolerance:.4f}" for b in blocks))
    for b in blocks:
        assert b.target == 0.5
        assert not b.flagged
    assert elapsed < 60


def test_criterion_7_oracle_equivalence(record):
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(500):
        n = int(rng.integers(1, 13))
        if rng.random() < 0.5:
            inst = random_instance(rng, n)
        else:
            pts = rng.integers(0, 4, size=(n, int(rng.integers(1, 3)))).astype(float)
            inst = Instance.from_points(pts, "l1")
        panel = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist()
        k = int(rng.integers(1, n + 1))
        fast, slow = pfc_factor(inst, panel, k), brute_force_pfc(inst, panel, k)
        same = fast.factor == slow.factor and fast.ratio == slow.ratio
        if fast.witness is not None:
            same &= pfc_witness_ratio(inst, panel, fast.witness.members) == fast.ratio
        mismatches += not same
    elapsed = time.perf_counter() - start
    record(7, f"mismatches={mismatches}/500")
    assert mismatches == 0
    assert elapsed < 300


def test_criterion_8_figure1_tree(record):
    start = time.perf_counter()
    inst = fixture("figure1")
    tree = build_tree(inst, 2, 2)
    level2 = sorted(sorted(inst.ids[v] for v in g.members) for g in tree.levels[2])
    by_content = {frozenset(g.members): g for g in tree.levels[1]}
    left = by_content[frozenset({0, 1, 2, 3})]
    right = by_content[frozenset({4, 5, 6, 7})]
    left_children = sorted(sorted(c.members) for c in left.subgroups())
    right_units = sorted(sorted(c.members) if hasattr(c, "members") else [c] for c in right.children)
    seq = nested_based_representation(inst, 2, 2, seed=0)
    hits = [all(set(p) & g.members for g in tree.levels[1]) for p in seq.panels]
    elapsed = time.perf_counter() - start
    record(8, f"level2={level2} left={left_children} right={right_units}")
    assert set(by_content) == {frozenset(range(4)), frozenset(range(4, 8))}
    assert left_children == [[0, 1], [2, 3]]
    # {v5,v6} is a level-2 group; v7, v8 sit together under the same level-1 group
    assert [4, 5] in right_units and sorted(v for u in right_units for v in u) == [4, 5, 6, 7]
    assert all(hits)
    assert elapsed < 1
