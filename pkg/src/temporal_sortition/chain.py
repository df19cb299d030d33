"""Chain-based temporal sortition: constant-factor prefix representation.

One independent group family per prefix size.  Groups of consecutive
families are linked into chains ending at the last family; a single
representative drawn from the terminal group then stands in for every
group on the chain, and is seated early enough (by priority) to cover the
chain's head prefix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import accumulate

import numpy as np

from .capture import MINIMAL, GroupCollection, GroupNode, equal_size_capture, modified_greedy_capture
from .errors import ConfigurationError, DivisibilityError, InputError, InvariantViolation
from .metric import Instance
from .sequence import PanelSequence, Seat, resolve_seed

# Per-group distance bound from the chain construction: every group at level t
# has a member of the first t panels within this many radii of its center.
CHAIN_RADIUS_FACTOR = 16.0


@dataclass
class LevelFamilies:
    instance: Instance
    sizes: list[int]
    levels: list[GroupCollection]
    strict: bool = True

    @property
    def ell(self) -> int:
        return len(self.sizes)

    def level(self, t: int) -> list[GroupNode]:
        return self.levels[t - 1].groups

    def all_groups(self):
        for coll in self.levels:
            yield from coll.groups

    def to_json(self) -> dict:
        return {str(t): coll.to_json() for t, coll in enumerate(self.levels, 1)}


@dataclass
class Chain:
    head: GroupNode
    links: list[GroupNode]
    anchors: list[str]
    status: str
    blocked_by: str | None = None
    priority: int | None = None

    @property
    def succeeded(self) -> bool:
        return self.status == "succeed"

    @property
    def terminal(self) -> GroupNode:
        return self.links[-1]

    def to_json(self) -> dict:
        return {
            "head": self.head.id,
            "links": [g.id for g in self.links],
            "anchors": self.anchors,
            "status": self.status,
            "blocked_by": self.blocked_by,
            "priority": self.priority,
        }


def _check_sizes(n: int, sizes, strict: bool) -> list[int]:
    sizes = [int(s) for s in sizes]
    if not sizes or min(sizes) < 1:
        raise InputError("need at least one panel, each of size at least one")
    total = sum(sizes)
    if total > n:
        raise InputError(f"{total} seats exceed the population ({n})")
    if strict and n % total:
        raise DivisibilityError(f"n={n} is not divisible by the total seat count {total}")
    return sizes


def build_level_families(instance: Instance, sizes, strict: bool = True) -> LevelFamilies:
    """Capture once per prefix size; the last family is an exact equal-size split."""
    sizes = _check_sizes(instance.n, sizes, strict)
    cum = list(accumulate(sizes))
    ell = len(sizes)
    levels = [
        modified_greedy_capture(instance, cum[t - 1], mode=MINIMAL, level=t, id_prefix="C")
        for t in range(1, ell)
    ]
    if instance.n % cum[-1] == 0:
        last = equal_size_capture(instance, cum[-1], level=ell, id_prefix="C")
    else:
        # Relaxed only: plain capture leaves a residual that is sampled uniformly.
        last = modified_greedy_capture(instance, cum[-1], mode=MINIMAL, level=ell, id_prefix="C")
    levels.append(last)
    return LevelFamilies(instance, sizes, levels, strict)


def construct_chain(families: LevelFamilies, head: GroupNode) -> Chain:
    """Link ``head`` to a group in every later family, or fail on a covered one.

    At each later level the candidate must lie within twice the anchor's
    radius of the anchor's center and be no wider than the anchor; among
    candidates the narrowest wins (ties by creation order).  The anchor moves
    to a new link whenever its radius drops below half the anchor's.
    """
    if head.covered:
        raise InputError(f"chain head {head.id} is already covered")
    d = families.instance.matrix
    anchor = head
    links = [head]
    anchors = [head.id]
    for j in range(head.level + 1, families.ell + 1):
        cands = [
            g for g in families.level(j)
            if d[anchor.center, g.center] <= 2 * anchor.radius and g.radius <= anchor.radius
        ]
        if not cands:
            raise InvariantViolation(f"no level-{j} group close to anchor {anchor.id}")
        nxt = min(cands, key=lambda g: (g.radius, g.order))
        if nxt.covered:
            return Chain(head, [head], [head.id], "fail", blocked_by=nxt.id)
        links.append(nxt)
        if nxt.radius < anchor.radius / 2:
            anchor = nxt
            anchors.append(nxt.id)
    return Chain(head, links, anchors, "succeed")


@dataclass
class ChainPlan:
    families: LevelFamilies
    chains: list[Chain]
    seats: list[Seat]  # member -1 until drawn; residual seats share one pool
    residual_pool: list[int] = field(default_factory=list)


def plan_chain(instance: Instance, sizes, strict: bool = True, families: LevelFamilies | None = None) -> ChainPlan:
    if families is None:
        families = build_level_families(instance, sizes, strict)
    sizes = families.sizes
    ell = families.ell
    chains: list[Chain] = []
    for t in range(1, ell):
        for g in families.level(t):
            if g.covered:
                continue
            chain = construct_chain(families, g)
            for link in chain.links:
                link.covered = True
            if chain.succeeded:
                chain.priority = t
                if chain.terminal.priority is None:
                    chain.terminal.priority = t
            chains.append(chain)
    for g in families.level(ell):
        g.covered = True
        if g.priority is None:
            g.priority = ell

    cum = list(accumulate(sizes))
    last = families.level(ell)
    for t in range(1, ell + 1):
        urgent = sum(g.priority <= t for g in last)
        if urgent > cum[t - 1]:
            raise InvariantViolation(f"{urgent} groups need a seat by panel {t}, only {cum[t - 1]} exist")

    spare = cum[-1] - len(last)
    in_groups = set().union(*(g.members for g in last)) if last else set()
    pool = [v for v in range(instance.n) if v not in in_groups]
    if spare > len(pool):
        raise ConfigurationError(f"{spare} residual seats but only {len(pool)} ungrouped individuals")

    order = sorted(last, key=lambda g: (g.priority, g.order))
    fill = [0] * ell
    seats: list[Seat] = []

    def seat_for(priority: int) -> int:
        t = next(i for i in range(ell) if fill[i] < sizes[i])
        fill[t] += 1
        return t + 1

    for g in order:
        seats.append(Seat(seat_for(g.priority), -1, sorted(g.members), g.id, priority=g.priority, phase="group"))
    for _ in range(spare):
        seats.append(Seat(seat_for(ell), -1, pool, "residual", priority=ell, phase="residual"))
    return ChainPlan(families, chains, seats, pool)


def _probabilities(n: int, plan: ChainPlan) -> list[float]:
    p = np.zeros(n)
    for s in plan.seats:
        if s.phase == "group":
            p[s.pool] = 1.0 / len(s.pool)
    spare = sum(s.phase == "residual" for s in plan.seats)
    if plan.residual_pool:
        p[plan.residual_pool] = spare / len(plan.residual_pool)
    return p.tolist()


def chain_based_representation(
    instance: Instance,
    sizes,
    seed: int | None = None,
    strict: bool = True,
    plan: ChainPlan | None = None,
) -> PanelSequence:
    """Draw panels of sizes ``k_1..k_l`` whose every prefix is representative.

    One uniform draw per last-level group (plus uniform residual draws in
    relaxed mode); representatives are seated by ascending priority into the
    earliest panel with a free seat.  Raises :class:`InvariantViolation` if
    a postcondition of the construction fails for the drawn panels.
    """
    if plan is None:
        plan = plan_chain(instance, sizes, strict)
    sizes = plan.families.sizes
    seed = resolve_seed(seed)
    rng = np.random.default_rng(seed)
    spare = sum(s.phase == "residual" for s in plan.seats)
    extra = iter(rng.permutation(plan.residual_pool)[:spare].tolist()) if spare else iter(())
    panels: list[list[int]] = [[] for _ in sizes]
    seats = []
    for s in plan.seats:
        v = s.pool[int(rng.integers(len(s.pool)))] if s.phase == "group" else int(next(extra))
        panels[s.panel - 1].append(v)
        seats.append(Seat(s.panel, v, s.pool, s.source, priority=s.priority, phase=s.phase))
    seq = PanelSequence(
        algorithm="chain",
        sizes=list(sizes),
        panels=panels,
        seats=seats,
        seed=seed,
        params={"sizes": list(sizes), "strict": plan.families.strict},
        selection_probability=_probabilities(instance.n, plan),
        log={"families": plan.families.to_json(), "chains": [c.to_json() for c in plan.chains]},
    )
    check_chain_postconditions(plan, seq)
    return seq


def group_coverage_distances(families: LevelFamilies, seq: PanelSequence) -> list[dict]:
    """For every group: nearest member of its prefix, relative to the group radius."""
    d = families.instance.matrix
    rows = []
    for t in range(1, families.ell + 1):
        prefix = np.array(seq.prefix(t), dtype=np.intp)
        for g in families.level(t):
            dist = float(d[g.center, prefix].min()) if prefix.size else np.inf
            rows.append({"group": g.id, "level": t, "radius": g.radius, "distance": dist})
    return rows


def check_chain_postconditions(plan: ChainPlan, seq: PanelSequence) -> None:
    fam = plan.families
    for g in fam.all_groups():
        if not g.covered:
            raise InvariantViolation(f"group {g.id} was never covered")
    for s in seq.seats:
        if s.priority is not None and s.panel > s.priority:
            raise InvariantViolation(f"{s.source} has priority {s.priority} but sits in panel {s.panel}")
    for row in group_coverage_distances(fam, seq):
        if not row["distance"] <= CHAIN_RADIUS_FACTOR * row["radius"]:
            raise InvariantViolation(
                f"group {row['group']}: nearest prefix member at {row['distance']:g} "
                f"> {CHAIN_RADIUS_FACTOR:g} x radius {row['radius']:g}"
            )


def chain_telescoping_ok(families: LevelFamilies, chain: Chain) -> bool:
    """Anchor radii strictly halve and the terminal center is within 8 head radii."""
    d = families.instance.matrix
    by_id = {g.id: g for g in chain.links}
    radii = [by_id[a].radius for a in chain.anchors]
    halving = all(b < a / 2 for a, b in zip(radii, radii[1:]))
    return halving and d[chain.head.center, chain.terminal.center] <= 8 * chain.head.radius
