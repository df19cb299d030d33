"""Measure how proportional a panel (or a panel sequence) actually is.

Factors follow the usual convention that a panel satisfies the axiom for
every factor at least the reported one; reported factors are never below 1.
The raw worst-case ratio is kept next to it so that a witness coalition can
be re-evaluated and compared bit-for-bit.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InputError
from .metric import Instance
from .sequence import PanelSequence

BRUTE_LIMIT = 14
PANEL, PREFIX, GLOBAL = "panel", "prefix", "global"
LEVELS = (PANEL, PREFIX, GLOBAL)


@dataclass
class Witness:
    members: list[int]
    center: int
    radius: float  # Chebyshev radius (PFC) or diameter (PRF)
    nearest: float  # distance to the panel that the ratio is built from
    q: int = 1

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class FactorResult:
    factor: float
    ratio: float
    witness: Witness | None
    method: str  # exact | brute | sound-heuristic
    lower_bound: bool = False

    def to_json(self) -> dict:
        return {
            "factor": self.factor,
            "ratio": self.ratio,
            "method": self.method,
            "lower_bound": self.lower_bound,
            "witness": self.witness.to_json() if self.witness else None,
        }


def coalition_threshold(n: int, k: int) -> int:
    """Smallest coalition size that is at least n/k."""
    if k < 1:
        raise InputError("panel size must be at least 1")
    return -(-n // k)


def pfc_ratio(nearest: float, radius: float) -> float:
    """nearest / radius with 0/0 = 1 and x/0 = inf."""
    if radius == 0:
        return 1.0 if nearest == 0 else np.inf
    return nearest / radius


def panel_distances(instance: Instance, panel: Iterable[int]) -> np.ndarray:
    idx = np.fromiter((int(p) for p in panel), dtype=np.intp)
    if idx.size == 0:
        return np.full(instance.n, np.inf)
    if idx.min() < 0 or idx.max() >= instance.n:
        raise InputError("panel refers to unknown individuals")
    return instance.matrix[:, idx].min(axis=1)


def pfc_witness_ratio(instance: Instance, panel: Iterable[int], members: Iterable[int]) -> float:
    """Re-evaluate one coalition from scratch."""
    members = list(members)
    _, radius = instance.chebyshev_center(members)
    nearest = float(panel_distances(instance, panel)[members].min())
    return pfc_ratio(nearest, radius)


def _finish(ratio: float, witness: Witness | None, method: str, lower: bool = False) -> FactorResult:
    return FactorResult(max(1.0, ratio), ratio, witness, method, lower)


# -- PFC ---------------------------------------------------------------------


def brute_force_pfc(instance: Instance, panel: Sequence[int], k: int) -> FactorResult:
    """Exhaustive maximum over every coalition of size >= n/k (n <= 14)."""
    n = instance.n
    if n > BRUTE_LIMIT:
        raise InputError(f"brute force refused for n={n} > {BRUTE_LIMIT}")
    s = coalition_threshold(n, k)
    d = instance.matrix
    pd = panel_distances(instance, panel)
    codes = np.arange(1 << n, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(bool)
    bits = bits[bits.sum(axis=1) >= s]
    if bits.shape[0] == 0:
        return _finish(1.0, None, "brute")
    worst = np.stack([np.where(bits, d[y], -np.inf).max(axis=1) for y in range(n)], axis=1)
    radius = worst.min(axis=1)
    center = worst.argmin(axis=1)
    nearest = np.where(bits, pd, np.inf).min(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(radius == 0, np.where(nearest == 0, 1.0, np.inf), nearest / radius)
    best = int(np.argmax(ratio))
    w = Witness(np.flatnonzero(bits[best]).tolist(), int(center[best]), float(radius[best]), float(nearest[best]))
    return _finish(float(ratio[best]), w, "brute")


def pfc_factor(instance: Instance, panel: Sequence[int], k: int) -> FactorResult:
    """Exact PFC factor via a polynomial dominating family of coalitions.

    For every center y and every prefix of the population sorted by distance
    to y (at least n/k long), the candidate coalition is the n/k members of
    that prefix farthest from the panel (ties by index).  Any coalition S is
    dominated by the candidate built from its own Chebyshev ball: at least as
    far from the panel, and no wider.  Candidates are pruned with the bounds
    ``(max - min distance to y) / 2 <= radius <= max distance to y``.
    """
    n = instance.n
    s = coalition_threshold(n, k)
    if s > n:
        return _finish(1.0, None, "exact")
    d = instance.matrix
    pd = panel_distances(instance, panel)
    if not np.isfinite(pd).all():
        members = list(range(s))
        c, r = instance.chebyshev_center(members)
        return _finish(np.inf, Witness(members, c, r, np.inf), "exact")

    seen: dict[tuple, float] = {}
    best = -np.inf
    best_w: Witness | None = None

    def evaluate(members: tuple) -> float:
        nonlocal best, best_w
        if members in seen:
            return seen[members]
        idx = np.array(members, dtype=np.intp)
        worst = d[:, idx].max(axis=1)
        c = int(np.argmin(worst))
        near = float(pd[idx].min())
        ratio = pfc_ratio(near, float(worst[c]))
        seen[members] = ratio
        if ratio > best:
            best, best_w = ratio, Witness(list(members), c, float(worst[c]), near)
        return ratio

    orders = np.argsort(d, axis=1, kind="stable")
    for y in range(n):
        evaluate(tuple(sorted(orders[y, :s].tolist())))
        if best == np.inf:
            return _finish(best, best_w, "exact")

    for y in range(n):
        order = orders[y]
        dy = d[y]
        heap = [(float(pd[v]), -int(v)) for v in order[:s]]
        heapq.heapify(heap)
        for m in range(s + 1, n + 1):
            v = int(order[m - 1])
            key = (float(pd[v]), -v)
            if key <= heap[0]:
                continue
            heapq.heapreplace(heap, key)
            near = heap[0][0]
            members = [-h[1] for h in heap]
            radii = dy[members]
            lo = (radii.max() - radii.min()) / 2
            if pfc_ratio(near, lo) <= best:
                continue
            evaluate(tuple(sorted(members)))
            if best == np.inf:
                return _finish(best, best_w, "exact")
    return _finish(best, best_w, "exact")


# -- PRF ---------------------------------------------------------------------


def prf_ratio(needed: float, diameter: float) -> float:
    """Smallest beta with q panel members within beta * diameter of S."""
    if needed == 0:
        return 0.0
    if diameter == 0:
        return np.inf
    return needed / diameter


def brute_force_prf(instance: Instance, panel: Sequence[int], k: int) -> FactorResult:
    n = instance.n
    if n > BRUTE_LIMIT:
        raise InputError(f"brute-force PRF refused for n={n} > {BRUTE_LIMIT}; use sound mode")
    d = instance.matrix
    panel = [int(p) for p in panel]
    codes = np.arange(1, 1 << n, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(bool)
    size = bits.sum(axis=1)
    q = (size * k) // n
    keep = q >= 1
    bits, q = bits[keep], q[keep]
    if bits.shape[0] == 0:
        return _finish(1.0, None, "brute")
    diam = np.zeros(bits.shape[0])
    for u in range(n):
        far = np.where(bits, d[u], -np.inf).max(axis=1)
        diam = np.maximum(diam, np.where(bits[:, u], far, 0.0))
    if panel:
        to_panel = np.stack([np.where(bits, d[p], np.inf).min(axis=1) for p in panel], axis=1)
        to_panel.sort(axis=1)
        padded = np.concatenate([to_panel, np.full((bits.shape[0], 1), np.inf)], axis=1)
        needed = padded[np.arange(bits.shape[0]), np.minimum(q, len(panel)) - 1 + (q > len(panel))]
    else:
        needed = np.full(bits.shape[0], np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.where(needed == 0, 0.0, np.where(diam == 0, np.inf, needed / diam))
    best = int(np.argmax(beta))
    w = Witness(np.flatnonzero(bits[best]).tolist(), -1, float(diam[best]), float(needed[best]), int(q[best]))
    return _finish(float(beta[best]), w, "brute")


def sound_prf(instance: Instance, panel: Sequence[int], k: int) -> FactorResult:
    """Lower bound on the PRF factor from nearest-neighbour coalitions.

    For every y, every prefix (of length >= n/k) of the population sorted by
    distance to y is checked exactly.  Violations found are genuine; the
    search is not complete.
    """
    n = instance.n
    d = instance.matrix
    panel = np.array([int(p) for p in panel], dtype=np.intp)
    s = coalition_threshold(n, k)
    sizes = np.arange(1, n + 1)
    q_all = (sizes * k) // n
    best, best_w = -np.inf, None
    orders = np.argsort(d, axis=1, kind="stable")
    for y in range(n):
        o = orders[y]
        doo = d[np.ix_(o, o)]
        diam = np.maximum.accumulate(np.tril(doo).max(axis=1))
        if panel.size:
            near = np.minimum.accumulate(d[np.ix_(panel, o)], axis=1)
            near.sort(axis=0)
            near = np.vstack([near, np.full((1, n), np.inf)])
            row = np.minimum(q_all, panel.size + 1) - 1
            row = np.where(q_all >= 1, row, 0)
            needed = near[row, np.arange(n)]
        else:
            needed = np.full(n, np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            beta = np.where(needed == 0, 0.0, np.where(diam == 0, np.inf, needed / diam))
        beta = np.where((q_all >= 1) & (sizes >= s), beta, -np.inf)
        m = int(np.argmax(beta))
        if beta[m] > best:
            best = float(beta[m])
            best_w = Witness(sorted(o[: m + 1].tolist()), y, float(diam[m]), float(needed[m]), int(q_all[m]))
    if best_w is None:
        return _finish(1.0, None, "sound-heuristic", True)
    return _finish(best, best_w, "sound-heuristic", True)


def prf_factor(instance: Instance, panel: Sequence[int], k: int, mode: str = "auto") -> FactorResult:
    """PRF factor: exhaustive for n <= 14 (``brute``), else a sound lower bound."""
    if mode == "auto":
        mode = "brute" if instance.n <= BRUTE_LIMIT else "sound"
    if mode == "brute":
        return brute_force_prf(instance, panel, k)
    if mode == "sound":
        return sound_prf(instance, panel, k)
    raise InputError(f"unknown PRF mode {mode!r}")


def prf_witness_ratio(instance: Instance, panel: Sequence[int], k: int, members: Sequence[int]) -> float:
    members = list(members)
    q = (len(members) * k) // instance.n
    diam = instance.diameter(members)
    if not len(panel):
        return np.inf
    to_s = np.sort(instance.matrix[np.ix_(list(panel), members)].min(axis=1))
    needed = to_s[q - 1] if q <= to_s.size else np.inf
    return prf_ratio(float(needed), diam)


# -- sequences ---------------------------------------------------------------


@dataclass
class AuditRow:
    level: str
    t: int
    size: int
    result: FactorResult
    threshold: float | None = None

    @property
    def passed(self) -> bool:
        return self.threshold is None or self.result.factor <= self.threshold

    def to_json(self) -> dict:
        out = {"level": self.level, "t": self.t, "size": self.size, "threshold": self.threshold, "passed": self.passed}
        out.update(self.result.to_json())
        return out


@dataclass
class FairnessBlock:
    algorithm: str
    trials: int
    target: float
    frequencies: list[float]
    max_abs_deviation: float
    tolerance: float  # 3 sigma
    flagged: list[int]
    structural: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.flagged and self.structural.get("exact", True)

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        out["passed"] = self.passed
        return out


@dataclass
class AuditReport:
    axiom: str
    rows: list[AuditRow]
    fairness: FairnessBlock | None = None

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows) and (self.fairness is None or self.fairness.passed)

    def failures(self) -> list[AuditRow]:
        return [r for r in self.rows if not r.passed]

    def to_json(self) -> dict:
        return {
            "axiom": self.axiom,
            "passed": self.passed,
            "rows": [r.to_json() for r in self.rows],
            "fairness": self.fairness.to_json() if self.fairness else None,
        }

    def csv_rows(self) -> list[list]:
        out = [["level", "t", "size", "factor", "witness_size", "witness_radius", "method", "threshold", "passed"]]
        for r in self.rows:
            w = r.result.witness
            out.append([
                r.level, r.t, r.size, r.result.factor,
                len(w.members) if w else 0, w.radius if w else "",
                r.result.method, "" if r.threshold is None else r.threshold, r.passed,
            ])
        return out


def auto_thresholds(seq: PanelSequence) -> dict[tuple[str, int], float]:
    """Proven PFC bounds for the algorithm that produced ``seq``.

    chain: every prefix within 19.  nested: prefix t within 2*4^(l-t+1),
    every panel within 2*4^l.  Other producers get no thresholds.
    """
    ell = seq.ell
    out: dict[tuple[str, int], float] = {}
    if seq.algorithm == "chain":
        for t in range(1, ell + 1):
            out[(PREFIX, t)] = 19.0
        out[(GLOBAL, ell)] = 19.0
    elif seq.algorithm == "nested":
        for t in range(1, ell + 1):
            out[(PREFIX, t)] = 2.0 * 4 ** (ell - t + 1)
            out[(PANEL, t)] = 2.0 * 4**ell
        out[(GLOBAL, ell)] = 8.0
    return out


def audit_sequence(
    instance: Instance,
    seq: PanelSequence,
    levels: Iterable[str] = LEVELS,
    thresholds: dict | str | float | None = "auto",
    axiom: str = "pfc",
    prf_mode: str = "auto",
) -> AuditReport:
    """Audit each panel, each prefix and/or the union against its own size."""
    seq.check_disjoint(instance.n)
    levels = list(levels)
    for lv in levels:
        if lv not in LEVELS:
            raise InputError(f"unknown audit level {lv!r}")
    if thresholds == "auto":
        limits = auto_thresholds(seq)
    elif thresholds is None:
        limits = {}
    elif isinstance(thresholds, (int, float)):
        limits = {(lv, t): float(thresholds) for lv in LEVELS for t in range(1, seq.ell + 1)}
    else:
        limits = {}
        for key, val in thresholds.items():
            if isinstance(key, tuple):
                limits[key] = float(val)
            else:
                limits.update({(key, t): float(val) for t in range(1, seq.ell + 1)})

    if axiom == "pfc":
        measure: Callable = pfc_factor
    elif axiom == "prf":
        measure = lambda inst, p, k: prf_factor(inst, p, k, prf_mode)  # noqa: E731
    else:
        raise InputError(f"unknown axiom {axiom!r}")

    rows = []
    cum = np.cumsum(seq.sizes).tolist()
    for lv in levels:
        if lv == PANEL:
            jobs = [(t, seq.panels[t - 1], seq.sizes[t - 1]) for t in range(1, seq.ell + 1)]
        elif lv == PREFIX:
            jobs = [(t, seq.prefix(t), cum[t - 1]) for t in range(1, seq.ell + 1)]
        else:
            jobs = [(seq.ell, seq.union(), cum[-1])]
        for t, members, size in jobs:
            res = measure(instance, members, size)
            rows.append(AuditRow(lv, t, size, res, limits.get((lv, t))))
    return AuditReport(axiom, rows)


# -- individual fairness -----------------------------------------------------


def derived_seeds(seed: int, trials: int) -> list[int]:
    return [int(s.generate_state(1, dtype=np.uint64)[0] >> 1) for s in np.random.SeedSequence(seed).spawn(trials)]


def _runner(algorithm: str, instance: Instance, params: dict):
    """Build a seed -> PanelSequence function, reusing the deterministic skeleton."""
    from . import chain, federated, nested

    strict = params.get("strict", True)
    if algorithm == "nested":
        plan = nested.plan_nested(instance, params["ell"], params["k"], strict)
        pools = [s.pool for s in plan.seats]
        return (lambda s: nested.nested_based_representation(instance, params["ell"], params["k"], s, strict, plan)), pools
    if algorithm == "chain":
        plan = chain.plan_chain(instance, params["sizes"], strict)
        pools = [s.pool for s in plan.seats if s.phase == "group"]
        return (lambda s: chain.chain_based_representation(instance, params["sizes"], s, strict, plan)), pools
    if algorithm == "federated":
        groups = federated.sample_groups(instance, params["ell"], params["k"], strict)
        pools = [sorted(g.members) for g in groups]
        return (lambda s: federated.federated_pipeline(instance, params["ell"], params["k"], s, strict, groups)), pools
    raise InputError(f"unknown algorithm {algorithm!r}")


def _structural(n: int, pools: list[list[int]], seats: int) -> dict:
    flat = [v for p in pools for v in p]
    sizes = sorted({len(p) for p in pools})
    partition = len(flat) == n and set(flat) == set(range(n))
    exact = partition and len(pools) == seats and len(sizes) == 1 and sizes[0] * seats == n
    return {"checked": True, "parts": len(pools), "part_sizes": sizes, "partition": partition, "exact": exact}


def fairness_audit(
    algorithm: str,
    instance: Instance,
    params: dict,
    trials: int,
    seed: int = 0,
    workers: int = 1,
) -> FairnessBlock:
    """Empirical inclusion frequencies over seeded runs plus the structural exactness check."""
    if trials < 1:
        raise InputError("need at least one trial")
    run, pools = _runner(algorithm, instance, params)
    seeds = derived_seeds(seed, trials)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            unions = list(pool.map(lambda s: run(s).union(), seeds))
    else:
        unions = [run(s).union() for s in seeds]
    n = instance.n
    counts = np.zeros(n)
    for u in unions:
        counts[u] += 1
    seats = len(unions[0])
    target = seats / n
    freq = counts / trials
    tol = 3 * np.sqrt(target * (1 - target) / trials)
    dev = np.abs(freq - target)
    flagged = np.flatnonzero(dev > tol + 1e-12).tolist()
    structural = _structural(n, pools, seats) if params.get("strict", True) else {"checked": False}
    return FairnessBlock(algorithm, trials, target, freq.tolist(), float(dev.max()), float(tol), flagged, structural)
