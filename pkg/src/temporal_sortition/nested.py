"""Nested-tree temporal sortition: per-panel and per-prefix coverage.

Phase 1 builds a hierarchy of captured groups for the prefix sizes
``l*k, (l-1)*k, ..., k`` (largest panel first, so later captures nest the
earlier ones).  Phase 2 walks the hierarchy, always descending into the
subgroup that must be represented earliest, and carves out sample sets of
``n / (l*k)`` individuals; one uniform draw per sample set fills a seat.

Everything except the uniform draws is deterministic, so :func:`plan_nested`
can be computed once and reused across seeds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .capture import MINIMAL, GroupNode, individuals_of, modified_greedy_capture
from .errors import DivisibilityError, InputError, InvariantViolation, StructuralError
from .metric import Instance
from .sequence import PanelSequence, Seat, resolve_seed


@dataclass
class NestedTree:
    ell: int
    k: int
    root: list  # children of the root: GroupNodes and loose individuals
    levels: dict[int, list[GroupNode]]

    def to_json(self) -> dict:
        return {
            "root": [c.id if isinstance(c, GroupNode) else int(c) for c in self.root],
            "levels": {t: [g.to_json() for g in gs] for t, gs in sorted(self.levels.items())},
        }


def _check_params(n: int, ell: int, k: int, strict: bool) -> None:
    if ell < 1 or k < 1:
        raise InputError("need at least one panel of size at least one")
    if ell * k > n:
        raise InputError(f"{ell} panels of size {k} exceed the population ({n})")
    if strict and n % (ell * k):
        raise DivisibilityError(f"n={n} is not divisible by l*k={ell * k}")


def build_tree(instance: Instance, ell: int, k: int, strict: bool = True, mode: str = MINIMAL) -> NestedTree:
    """Capture for K = l*k down to K = k, each pass over the root's current children."""
    _check_params(instance.n, ell, k, strict)
    root: list = list(range(instance.n))
    levels: dict[int, list[GroupNode]] = {}
    for t in range(ell, 0, -1):
        coll = modified_greedy_capture(instance, t * k, root, mode=mode, level=t)
        levels[t] = coll.groups
        root = list(coll.groups) + list(coll.residual)
    return NestedTree(ell, k, root, levels)


def find_representative(group: GroupNode, sample_size: int, relaxed: bool = False):
    """Carve a sample set out of ``group`` along its most urgent trajectory.

    Descends into the direct subgroup with the smallest level (ties by
    creation order) until reaching a node with only individuals, then takes
    its ``sample_size`` lowest-index individuals.  Intermediate groups on the
    way are dissolved and their remaining children re-attached to ``group``,
    which is rewritten in place.

    Returns ``(group, sample, trajectory)`` where ``trajectory`` lists the
    ids of the descended-into subgroups.
    """
    trajectory: list[str] = []
    group.children, sample = _descend(group, sample_size, trajectory, relaxed)
    return group, sample, trajectory


def _descend(node: GroupNode, q: int, trajectory: list[str], relaxed: bool):
    subs = node.subgroups()
    if subs:
        target = min(subs, key=lambda g: (g.level, g.order))
        trajectory.append(target.id)
        rest, sample = _descend(target, q, trajectory, relaxed)
        return [c for c in node.children if c is not target] + rest, sample
    for c in node.children:
        if not isinstance(c, (int, np.integer)):
            raise StructuralError(f"dangling child {c!r} under {node.id}")
    loose = sorted(int(c) for c in node.children)
    if len(loose) < q and not (relaxed and loose):
        raise InvariantViolation(f"{node.id} holds {len(loose)} individuals, need {q}")
    sample = loose[:q]
    taken = set(sample)
    return [c for c in node.children if int(c) not in taken], sample


def _clone(unit, copies: dict):
    if not isinstance(unit, GroupNode):
        return unit
    twin = GroupNode(
        unit.id, unit.level, unit.order, unit.center, unit.radius,
        [_clone(c, copies) for c in unit.children], unit.members,
    )
    copies[unit.id] = twin
    return twin


@dataclass
class NestedPlan:
    """The deterministic skeleton of a run: which sample set feeds which seat."""

    tree: NestedTree
    sample_size: int
    seats: list[Seat]  # member is -1 until drawn
    ejections: list[dict] = field(default_factory=list)
    strict: bool = True


def plan_nested(instance: Instance, ell: int, k: int, strict: bool = True, tree: NestedTree | None = None) -> NestedPlan:
    n = instance.n
    if tree is None:
        tree = build_tree(instance, ell, k, strict)
    q = n // (ell * k)
    copies: dict[str, GroupNode] = {}
    root = GroupNode("R", 0, 0, -1, float("inf"), [_clone(c, copies) for c in tree.root], frozenset(range(n)))
    consumed: set[int] = set()
    seats: list[Seat] = []
    ejections: list[dict] = []

    def take(node: GroupNode, panel: int, phase: str, prefix: list[str]) -> None:
        _, sample, traj = find_representative(node, q, relaxed=not strict)
        if consumed.intersection(sample):
            raise InvariantViolation("sample sets overlap")
        consumed.update(sample)
        source = traj[-1] if traj else node.id
        seats.append(Seat(panel, -1, sample, source, prefix + traj, phase=phase))

    for original in tree.levels.get(1, []):
        g = copies[original.id]
        for t in range(1, ell + 1):
            early = [h for h in g.subgroups() if h.level < t]
            for h in early:
                if consumed & individuals_of(h):
                    raise InvariantViolation(f"ejected group {h.id} overlaps consumed individuals")
                g.children.remove(h)
                root.children.append(h)
                ejections.append({"group": g.id, "panel": t, "ejected": h.id})
            if not g.children:
                if strict:
                    raise InvariantViolation(f"{g.id} exhausted before panel {t}")
                continue
            take(g, t, "panel", [g.id])
        root.children.remove(g)
        root.children.extend(g.children)

    fill = [0] * ell
    for s in seats:
        fill[s.panel - 1] += 1
    while root.children and sum(fill) < ell * k:
        t = next(i for i in range(ell) if fill[i] < k)
        take(root, t + 1, "prefix", [])
        fill[t] += 1

    if strict:
        g1 = len(tree.levels.get(1, []))
        phase1 = sum(s.phase == "panel" for s in seats)
        if phase1 != ell * g1 or len(seats) != ell * k or root.children:
            raise InvariantViolation(
                f"termination counts off: {phase1} panel seats, {len(seats)} total, "
                f"{len(individuals_of(root))} left in root"
            )
    return NestedPlan(tree, q, seats, ejections, strict)


def _probabilities(n: int, seats: list[Seat]) -> list[float]:
    p = np.zeros(n)
    for s in seats:
        p[s.pool] = 1.0 / len(s.pool)
    return p.tolist()


def nested_based_representation(
    instance: Instance,
    ell: int,
    k: int,
    seed: int | None = None,
    strict: bool = True,
    plan: NestedPlan | None = None,
) -> PanelSequence:
    """Draw ``ell`` disjoint panels of size ``k`` from the nested hierarchy.

    Every panel contains a member of each level-1 group, every prefix of
    ``t`` panels a member of each level-``t`` group, and (in strict mode)
    each individual lands in the union with probability ``l*k/n`` exactly.
    Those coverage facts are checked before returning.
    """
    if plan is None:
        plan = plan_nested(instance, ell, k, strict)
    seed = resolve_seed(seed)
    rng = np.random.default_rng(seed)
    panels: list[list[int]] = [[] for _ in range(ell)]
    seats = []
    for s in plan.seats:
        v = s.pool[int(rng.integers(len(s.pool)))]
        panels[s.panel - 1].append(v)
        seats.append(Seat(s.panel, v, s.pool, s.source, s.trajectory, phase=s.phase))
    seq = PanelSequence(
        algorithm="nested",
        sizes=[k] * ell,
        panels=panels,
        seats=seats,
        seed=seed,
        params={"ell": ell, "k": k, "strict": strict, "sample_size": plan.sample_size},
        selection_probability=_probabilities(instance.n, plan.seats),
        log={"tree": plan.tree.to_json(), "ejections": plan.ejections,
             "trajectories": [s.trajectory for s in plan.seats]},
    )
    if plan.strict:
        check_nested_coverage(plan.tree, seq)
    return seq


def check_nested_coverage(tree: NestedTree, seq: PanelSequence) -> None:
    """Raise unless every panel hits every level-1 group and every prefix t hits every level-t group."""
    for t, panel in enumerate(seq.panels, 1):
        chosen = set(panel)
        for g in tree.levels.get(1, []):
            if not chosen & g.members:
                raise InvariantViolation(f"panel {t} misses level-1 group {g.id}")
    for t in range(1, seq.ell + 1):
        chosen = set(seq.prefix(t))
        for g in tree.levels.get(t, []):
            if not chosen & g.members:
                raise InvariantViolation(f"prefix {t} misses level-{t} group {g.id}")


def sample_partition(plan: NestedPlan) -> list[list[int]]:
    return [list(s.pool) for s in plan.seats]
