"""Simultaneous panels from one large panel: sample, partition, assign.

A global panel of size l*k is drawn with one uniform member per equal-size
captured group.  It is then cut into k groups of l nearby members by an
expanding-ball sweep, and each group is spread across the l panels by an
independent uniform bijection.  Also hosts the two-stage composition check
for PRF factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audit import FactorResult, prf_factor
from .capture import GroupNode, equal_size_capture
from .errors import DivisibilityError, InputError
from .metric import Instance
from .sequence import PanelSequence, Seat, resolve_seed


def expanding_approval_partition(instance: Instance, panel, group_size: int) -> list[list[int]]:
    """Split ``panel`` into groups of ``group_size`` mutually close members.

    All members grow balls at a shared radius, stepping through the pairwise
    distances inside the panel.  Scanning active members by index, the first
    ball holding ``group_size`` unassigned members binds the closest of them
    (ties by index) into a group; bound members stop growing balls.
    """
    panel = [int(p) for p in panel]
    ell = int(group_size)
    if ell < 1 or not panel or len(panel) % ell:
        raise InputError(f"panel of size {len(panel)} cannot be cut into groups of {ell}")
    if len(set(panel)) != len(panel):
        raise InputError("panel has repeated members")
    k = len(panel) // ell
    idx = np.array(panel, dtype=np.intp)
    d = instance.matrix[np.ix_(idx, idx)]
    free = np.ones(len(panel), dtype=bool)
    groups: list[list[int]] = []
    for delta in np.unique(d):
        progress = True
        while progress and len(groups) < k:
            progress = False
            for c in np.flatnonzero(free):
                inside = np.flatnonzero(free & (d[c] <= delta))
                if inside.size < ell:
                    continue
                near = inside[np.lexsort((idx[inside], d[c, inside]))][:ell]
                groups.append(sorted(idx[near].tolist()))
                free[near] = False
                progress = True
                break
        if len(groups) == k:
            break
    return groups


def federated_assignment(groups, seed: int | None = None, rng: np.random.Generator | None = None) -> list[list[int]]:
    """Map each group's members onto panels 1..l by an independent uniform bijection."""
    groups = [list(g) for g in groups]
    if not groups:
        raise InputError("no groups to assign")
    ell = len(groups[0])
    if ell < 1 or any(len(g) != ell for g in groups):
        raise InputError("groups must all have the same positive size")
    if rng is None:
        rng = np.random.default_rng(resolve_seed(seed))
    panels: list[list[int]] = [[] for _ in range(ell)]
    for g in groups:
        for slot, j in enumerate(rng.permutation(ell)):
            panels[int(j)].append(g[slot])
    return panels


def sample_groups(instance: Instance, ell: int, k: int, strict: bool = True) -> list[GroupNode]:
    if ell < 1 or k < 1:
        raise InputError("need at least one panel of size at least one")
    m = ell * k
    if m > instance.n:
        raise InputError(f"{m} seats exceed the population ({instance.n})")
    if strict and instance.n % m:
        raise DivisibilityError(f"n={instance.n} is not divisible by l*k={m}")
    return equal_size_capture(instance, m, strict=strict, level=1, id_prefix="F").groups


def federated_pipeline(
    instance: Instance,
    ell: int,
    k: int,
    seed: int | None = None,
    strict: bool = True,
    groups: list[GroupNode] | None = None,
) -> PanelSequence:
    """Draw l simultaneous panels of size k (each individual lands in the union w.p. l*k/n)."""
    if groups is None:
        groups = sample_groups(instance, ell, k, strict)
    seed = resolve_seed(seed)
    rng = np.random.default_rng(seed)
    source = {}
    draw = []
    for g in groups:
        pool = sorted(g.members)
        v = pool[int(rng.integers(len(pool)))]
        source[v] = (g.id, pool)
        draw.append(v)
    parts = expanding_approval_partition(instance, draw, ell)
    panels = federated_assignment(parts, rng=rng)
    seats = [
        Seat(t, v, source[v][1], source[v][0], phase="federated")
        for t, panel in enumerate(panels, 1) for v in panel
    ]
    prob = np.zeros(instance.n)
    for g in groups:
        prob[sorted(g.members)] = 1.0 / g.size
    return PanelSequence(
        algorithm="federated",
        sizes=[k] * ell,
        panels=panels,
        seats=seats,
        seed=seed,
        params={"ell": ell, "k": k, "strict": strict},
        selection_probability=prob.tolist(),
        log={"groups": [g.to_json() for g in groups], "global_panel": sorted(draw), "partition": parts},
    )


@dataclass
class CompositionReport:
    k1: int
    k2: int
    alpha: FactorResult  # P1 against (V, k1)
    beta: FactorResult  # P2 against (P1, k2)
    gamma: FactorResult  # P2 against (V, k2)
    divisible: bool
    witness_ids: list

    @property
    def bound(self) -> float | None:
        if not self.divisible:
            return None
        return 2 * self.alpha.factor * self.beta.factor + self.beta.factor

    @property
    def holds(self) -> bool | None:
        if not self.divisible:
            return None
        return bool(self.gamma.factor <= self.bound)

    def to_json(self) -> dict:
        return {
            "k1": self.k1,
            "k2": self.k2,
            "divisible": self.divisible,
            "alpha": self.alpha.to_json(),
            "beta": self.beta.to_json(),
            "gamma": self.gamma.to_json(),
            "bound": self.bound,
            "holds": self.holds,
            "witness_ids": self.witness_ids,
        }


def composition_audit(instance: Instance, k1: int, k2: int, p1, p2, mode: str = "auto") -> CompositionReport:
    """Measure both stage factors and the end-to-end factor of a two-stage selection.

    ``mode`` is passed to :func:`prf_factor` per measurement, so instances
    beyond the brute-force limit get sound lower bounds.
    """
    p1 = [int(v) for v in p1]
    p2 = [int(v) for v in p2]
    if len(p1) != k1 or len(p2) != k2:
        raise InputError("panel sizes do not match k1/k2")
    if not set(p2) <= set(p1):
        raise InputError("the second panel is not a subset of the first")
    alpha = prf_factor(instance, p1, k1, mode)
    sub = instance.restrict(p1)
    local = {v: i for i, v in enumerate(p1)}
    beta = prf_factor(sub, [local[v] for v in p2], k2, mode)
    gamma = prf_factor(instance, p2, k2, mode)
    ids = [instance.ids[v] for v in gamma.witness.members] if gamma.witness else []
    return CompositionReport(k1, k2, alpha, beta, gamma, k1 % k2 == 0, ids)
