"""Ball-growing group formation over an existing partition.

The sweep radius only matters at the finitely many values
``max_{y in I(G)} d(x, y)`` (a candidate center ``x`` against an input group
``G``), so the continuous sweep is replaced by an exact walk over those event
radii.  Within one event radius, balls that are already complete first
disregard every uncovered group they reach; then new groups are formed by
scanning candidate centers in ascending index until no center reaches the
size threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DivisibilityError, InputError, StructuralError
from .metric import Instance

MINIMAL = "minimal"
FULL = "full"


@dataclass(eq=False)
class GroupNode:
    """A captured group: center/radius at creation plus its direct children.

    Children are individual indices (``int``) or other ``GroupNode`` objects.
    ``members`` is the flattened population frozen at creation time; the
    nested pipeline rewrites ``children`` on working copies but never
    ``members``.
    """

    id: str
    level: int
    order: int
    center: int
    radius: float
    children: list
    members: frozenset
    covered: bool = False
    priority: int | None = None

    def __repr__(self) -> str:
        return f"GroupNode({self.id}, r={self.radius:g}, |I|={len(self.members)})"

    @property
    def size(self) -> int:
        return len(self.members)

    def subgroups(self) -> list["GroupNode"]:
        return [c for c in self.children if isinstance(c, GroupNode)]

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "level": self.level,
            "center": self.center,
            "radius": self.radius,
            "children": [c.id if isinstance(c, GroupNode) else int(c) for c in self.children],
            "members_flat": sorted(self.members),
        }


Unit = Union[int, GroupNode]


def individuals_of(unit: Unit) -> set[int]:
    """Recursively flatten a group (or a lone individual) to its individuals."""
    if isinstance(unit, (int, np.integer)) and not isinstance(unit, bool):
        return {int(unit)}
    if not isinstance(unit, GroupNode):
        raise StructuralError(f"dangling child reference {unit!r}")
    out: set[int] = set()
    for child in unit.children:
        part = individuals_of(child)
        if out & part:
            raise StructuralError(f"children of {unit.id} overlap")
        out |= part
    return out


@dataclass
class GroupCollection:
    level: int
    groups: list[GroupNode]
    residual: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.groups)

    def __len__(self) -> int:
        return len(self.groups)

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "groups": [g.to_json() for g in self.groups],
            "residual": [u.id if isinstance(u, GroupNode) else int(u) for u in self.residual],
        }


def _unit_members(partition: Sequence[Unit], n: int) -> list[np.ndarray]:
    seen = np.zeros(n, dtype=bool)
    members = []
    for unit in partition:
        flat = individuals_of(unit)
        idx = np.fromiter(sorted(flat), dtype=np.intp, count=len(flat))
        if idx.size == 0:
            raise StructuralError("empty group in partition")
        if idx.min() < 0 or idx.max() >= n:
            raise StructuralError("partition refers to individuals outside the population")
        if seen[idx].any():
            raise StructuralError("partition groups overlap")
        seen[idx] = True
        members.append(idx)
    return members


def _reach_matrix(instance: Instance, members: list[np.ndarray]) -> np.ndarray:
    """E[x, g] = max_{y in I(g)} d(x, y): the radius at which x's ball swallows g."""
    d = instance.matrix
    return np.stack([d[:, idx].max(axis=1) for idx in members], axis=1)


class _Sweep:
    """State for one exact event-driven sweep."""

    def __init__(self, reach: np.ndarray, sizes: np.ndarray, threshold: int):
        self.reach = reach
        self.sizes = sizes
        self.threshold = threshold
        self.order = np.argsort(reach, axis=1, kind="stable")
        self.sorted_reach = np.take_along_axis(reach, self.order, axis=1)
        self.events = np.unique(reach)
        self.uncovered = np.ones(reach.shape[1], dtype=bool)
        self.mincomplete = np.full(reach.shape[1], np.inf)
        self.refresh()

    def refresh(self) -> None:
        """Recompute, per center, the smallest radius reaching the threshold."""
        mass = (self.sizes * self.uncovered)[self.order]
        cum = np.cumsum(mass, axis=1)
        hit = cum >= self.threshold
        first = np.argmax(hit, axis=1)
        rows = np.arange(self.reach.shape[0])
        self.trigger = np.where(hit[:, -1], self.sorted_reach[rows, first], np.inf)

    def next_radius(self, delta: float | None, disregard: bool) -> float:
        cand = float(self.trigger.min())
        if disregard and self.uncovered.any():
            cand = min(cand, float(self.mincomplete[self.uncovered].min()))
        if delta is not None and cand <= delta:
            pos = int(np.searchsorted(self.events, delta, side="right"))
            cand = float(self.events[pos]) if pos < self.events.size else np.inf
        return cand


def _sweep(
    instance: Instance,
    partition: Sequence[Unit],
    threshold: int,
    mode: str,
    disregard: bool,
    level: int,
    id_prefix: str,
    max_groups: int | None = None,
) -> tuple[list[GroupNode], list[int], np.ndarray]:
    n = instance.n
    members = _unit_members(partition, n)
    sizes = np.array([m.size for m in members], dtype=np.int64)
    state = _Sweep(_reach_matrix(instance, members), sizes, threshold)
    groups: list[GroupNode] = []
    residual: list[int] = []
    delta: float | None = None
    while state.uncovered.any():
        if max_groups is not None and len(groups) >= max_groups:
            break
        delta = state.next_radius(delta, disregard)
        if not np.isfinite(delta):
            break
        if disregard:
            hit = state.uncovered & (state.mincomplete <= delta)
            if hit.any():
                residual.extend(np.flatnonzero(hit).tolist())
                state.uncovered &= ~hit
                state.refresh()
        while max_groups is None or len(groups) < max_groups:
            ready = np.flatnonzero(state.trigger <= delta)
            if ready.size == 0:
                break
            x = int(ready[0])
            row = state.order[x]
            reachable = row[(state.reach[x, row] <= delta) & state.uncovered[row]]
            if mode == MINIMAL:
                cum = np.cumsum(sizes[reachable])
                take = reachable[: int(np.argmax(cum >= threshold)) + 1]
            else:
                take = reachable
            take = [int(u) for u in take]
            flat = frozenset(int(v) for u in take for v in members[u])
            groups.append(
                GroupNode(
                    id=f"{id_prefix}{level}.{len(groups) + 1}",
                    level=level,
                    order=len(groups),
                    center=x,
                    radius=float(delta),
                    children=[partition[u] for u in take],
                    members=flat,
                )
            )
            state.uncovered[take] = False
            state.mincomplete = np.minimum(state.mincomplete, state.reach[x])
            state.refresh()
    leftovers = np.flatnonzero(state.uncovered).tolist()
    return groups, residual + leftovers, state.reach


def modified_greedy_capture(
    instance: Instance,
    K: int,
    partition: Sequence[Unit] | None = None,
    mode: str = MINIMAL,
    level: int = 0,
    id_prefix: str = "G",
) -> GroupCollection:
    """Grow balls around every individual, consolidating whole input groups.

    A ball forms a new group once the uncovered input groups it fully
    contains hold at least ``n / K`` individuals.  In ``"minimal"`` mode the
    group takes those groups in ascending distance (ties by input order) only
    until the threshold is met; ``"full"`` takes everything reachable.
    Complete balls keep growing and disregard whatever they reach, and
    disregarded input groups are returned as ``residual``.
    """
    if K < 1:
        raise InputError("K must be at least 1")
    if mode not in (MINIMAL, FULL):
        raise InputError(f"unknown capture mode {mode!r}")
    if partition is None:
        partition = list(range(instance.n))
    threshold = -(-instance.n // K)
    groups, residual, _ = _sweep(instance, partition, threshold, mode, True, level, id_prefix)
    return GroupCollection(level, groups, [partition[u] for u in sorted(residual)])


def equal_size_capture(
    instance: Instance,
    m: int,
    exclusions: Iterable[int] = (),
    strict: bool = True,
    level: int = 0,
    id_prefix: str = "E",
) -> GroupCollection:
    """Partition the population into ``m`` groups of exactly ``n / m`` members.

    Same sweep over singletons, but without disregarding, and each forming
    ball takes exactly the ``n / m`` closest uncovered individuals (ties by
    index).  ``exclusions`` are left out of the population being split.

    With ``strict=False`` and ``n % m != 0`` groups take ``n // m`` members and
    the leftovers join the group whose center is nearest; the resulting
    unequal sizes are visible in the output.
    """
    excluded = set(int(e) for e in exclusions)
    pool = [v for v in range(instance.n) if v not in excluded]
    n = len(pool)
    if m < 1 or m > n:
        raise InputError(f"group count must be in [1, {n}], got {m}")
    if n % m and strict:
        raise DivisibilityError(f"{n} individuals cannot be split into {m} equal groups")
    size = n // m
    groups, _, _ = _sweep(instance, pool, size, MINIMAL, False, level, id_prefix, max_groups=m)
    covered = set().union(*(g.members for g in groups))
    leftover = [v for v in pool if v not in covered]
    if leftover and strict:
        raise StructuralError("strict equal-size capture left individuals uncovered")
    for v in leftover:
        dists = [instance.matrix[g.center, v] for g in groups]
        g = groups[int(np.argmin(dists))]
        g.children.append(v)
        g.members = g.members | {v}
    return GroupCollection(level, groups, [])
