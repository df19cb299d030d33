"""Populations over a pseudo-metric: distances, balls and coalition radii.

Individuals are addressed by their position ``0..n-1`` everywhere inside the
library; the opaque ids from the input file are kept only for I/O.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import InputError

TRIANGLE_EPS = 1e-9
EXHAUSTIVE_TRIANGLE_LIMIT = 500
SAMPLED_TRIPLES = 10**6


def _as_norm_spec(norm: Any) -> tuple[str, np.ndarray | None]:
    if isinstance(norm, str) and norm.lower() in ("l1", "l2"):
        return norm.lower(), None
    if isinstance(norm, dict) and set(norm) == {"weighted_l1"}:
        w = np.asarray(norm["weighted_l1"], dtype=float)
        if w.ndim != 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InputError("weighted_l1 weights must be a finite non-negative vector")
        return "weighted_l1", w
    raise InputError(f"unsupported norm {norm!r}")


def pairwise_from_points(points: np.ndarray, norm: Any = "l2") -> np.ndarray:
    """Dense distance matrix of feature vectors under the declared norm."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or not np.all(np.isfinite(pts)):
        raise InputError("points must be a finite n x d array")
    kind, weights = _as_norm_spec(norm)
    diff = np.abs(pts[:, None, :] - pts[None, :, :])
    if kind == "l1":
        return diff.sum(axis=-1)
    if kind == "weighted_l1":
        if weights.shape[0] != pts.shape[1]:
            raise InputError("weighted_l1 needs one weight per feature")
        return (diff * weights).sum(axis=-1)
    return np.sqrt((diff * diff).sum(axis=-1))


@dataclass(frozen=True, eq=False)
class Instance:
    """An immutable population plus its distance matrix.

    Use :meth:`from_matrix`, :meth:`from_points` or :meth:`from_json` rather
    than the constructor; those canonicalize and freeze the matrix.
    """

    ids: tuple
    matrix: np.ndarray
    points: np.ndarray | None = None
    norm: Any = None
    corrections: tuple[str, ...] = ()
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_matrix(cls, matrix, ids: Sequence | None = None, eps: float = TRIANGLE_EPS) -> "Instance":
        d = np.array(matrix, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 1:
            raise InputError("distance matrix must be square with n >= 1")
        if not np.all(np.isfinite(d)):
            raise InputError("distance matrix has non-finite entries")
        if np.any(d < 0):
            raise InputError("distance matrix has negative entries")
        notes = []
        asym = np.abs(d - d.T)
        worst = float(asym.max())
        if worst > 0:
            scale = max(1.0, float(np.abs(d).max()))
            if worst > eps * scale:
                notes.append(f"symmetrized by averaging; worst asymmetry {worst:g}")
            d = (d + d.T) / 2.0
        diag = np.abs(np.diag(d))
        if diag.max() > 0:
            notes.append(f"zeroed diagonal; worst entry {float(diag.max()):g}")
            np.fill_diagonal(d, 0.0)
        return cls._build(d, ids, None, None, tuple(notes))

    @classmethod
    def from_points(cls, points, norm: Any = "l2", ids: Sequence | None = None) -> "Instance":
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        d = pairwise_from_points(pts, norm)
        pts.setflags(write=False)
        return cls._build(d, ids, pts, norm, ())

    @classmethod
    def _build(cls, d, ids, points, norm, notes) -> "Instance":
        n = d.shape[0]
        ids = tuple(range(n)) if ids is None else tuple(ids)
        if len(ids) != n:
            raise InputError(f"expected {n} ids, got {len(ids)}")
        if len(set(ids)) != n:
            raise InputError("ids must be unique")
        d.setflags(write=False)
        inst = cls(ids=ids, matrix=d, points=points, norm=norm, corrections=notes)
        inst._index.update({x: i for i, x in enumerate(ids)})
        return inst

    @classmethod
    def from_json(cls, data: dict) -> "Instance":
        if not isinstance(data, dict):
            raise InputError("instance JSON must be an object")
        ids = data.get("ids")
        if "matrix" in data:
            return cls.from_matrix(data["matrix"], ids=ids)
        if "points" in data:
            return cls.from_points(data["points"], data.get("norm", "l2"), ids=ids)
        raise InputError("instance JSON needs either 'matrix' or 'points'")

    @classmethod
    def load(cls, path: str | Path) -> "Instance":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read instance {path}: {exc}") from exc
        return cls.from_json(data)

    def to_json(self) -> dict:
        out: dict[str, Any] = {"ids": list(self.ids)}
        if self.points is not None:
            out["points"] = self.points.tolist()
            out["norm"] = self.norm
        else:
            out["matrix"] = self.matrix.tolist()
        return out

    # -- primitives ---------------------------------------------------------

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def __len__(self) -> int:
        return self.n

    def index_of(self, ident) -> int:
        try:
            return self._index[ident]
        except KeyError:
            raise InputError(f"unknown individual id {ident!r}") from None

    def _check(self, i) -> int:
        if isinstance(i, (bool, np.bool_)) or not isinstance(i, (int, np.integer)):
            raise InputError(f"individual index must be an integer, got {i!r}")
        if not 0 <= i < self.n:
            raise InputError(f"unknown individual {i}")
        return int(i)

    def distance(self, i: int, j: int) -> float:
        return float(self.matrix[self._check(i), self._check(j)])

    def ball(self, v: int, r: float) -> set[int]:
        """All individuals within distance ``r`` of ``v`` (boundary inclusive)."""
        v = self._check(v)
        if not r >= 0:
            raise InputError(f"ball radius must be non-negative, got {r}")
        return set(np.flatnonzero(self.matrix[v] <= r).tolist())

    def chebyshev_center(self, members: Iterable[int]) -> tuple[int, float]:
        """Best single center in V for ``members`` and the radius it attains.

        Ties go to the lowest index.
        """
        idx = self._members(members)
        worst = self.matrix[:, idx].max(axis=1)
        y = int(np.argmin(worst))
        return y, float(worst[y])

    def diameter(self, members: Iterable[int]) -> float:
        idx = self._members(members)
        return float(self.matrix[np.ix_(idx, idx)].max())

    def _members(self, members: Iterable[int]) -> np.ndarray:
        idx = np.fromiter((self._check(m) for m in members), dtype=np.intp)
        if idx.size == 0:
            raise InputError("coalition must be non-empty")
        return idx

    def restrict(self, members: Sequence[int]) -> "Instance":
        """Sub-population on ``members`` (in the given order) with their ids."""
        idx = self._members(members)
        sub = np.array(self.matrix[np.ix_(idx, idx)])
        return Instance._build(sub, [self.ids[i] for i in idx], None, None, ())


@dataclass(frozen=True)
class Coalition:
    members: frozenset
    diameter: float
    center: int
    radius: float

    @classmethod
    def of(cls, instance: Instance, members: Iterable[int]) -> "Coalition":
        members = frozenset(int(m) for m in members)
        center, radius = instance.chebyshev_center(members)
        return cls(members, instance.diameter(members), center, radius)


@dataclass
class ValidationReport:
    n: int
    symmetric: bool
    zero_diagonal: bool
    nonnegative: bool
    finite: bool
    triangle_ok: bool
    worst_triangle_slack: float
    worst_triple: tuple[int, int, int] | None
    triples_checked: int
    exhaustive: bool
    corrections: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.symmetric and self.zero_diagonal and self.nonnegative and self.finite and self.triangle_ok

    def to_json(self) -> dict:
        out = dict(self.__dict__)
        out["ok"] = self.ok
        out["corrections"] = list(self.corrections)
        return out


def _triangle_exhaustive(d: np.ndarray, eps: float):
    n = d.shape[0]
    worst, triple = 0.0, None
    for j in range(n):
        via = d[:, j][:, None] + d[j][None, :]
        slack = d - via
        bad = slack > eps * via
        if bad.any():
            masked = np.where(bad, slack, -np.inf)
            flat = int(np.argmax(masked))
            if masked.flat[flat] > worst:
                worst = float(masked.flat[flat])
                i, k = divmod(flat, n)
                triple = (i, j, k)
    return worst, triple, n**3


def _triangle_sampled(d: np.ndarray, eps: float, seed: int, count: int):
    rng = np.random.default_rng(seed)
    n = d.shape[0]
    i, j, k = (rng.integers(0, n, size=count) for _ in range(3))
    via = d[i, j] + d[j, k]
    slack = d[i, k] - via
    bad = slack > eps * via
    if not bad.any():
        return 0.0, None, count
    pos = int(np.argmax(np.where(bad, slack, -np.inf)))
    return float(slack[pos]), (int(i[pos]), int(j[pos]), int(k[pos])), count


def validate(instance: Instance | np.ndarray, eps: float = TRIANGLE_EPS, seed: int = 0) -> ValidationReport:
    """Check the pseudo-metric axioms; never raises, the report carries failures.

    Symmetry, diagonal and sign are checked exactly.  The triangle inequality
    is checked on every triple up to 500 individuals and on a seeded sample of
    10^6 triples beyond that.
    """
    if isinstance(instance, Instance):
        d, notes = instance.matrix, instance.corrections
    else:
        d, notes = np.asarray(instance, dtype=float), ()
    n = d.shape[0]
    finite = bool(np.all(np.isfinite(d)))
    dd = np.where(np.isfinite(d), d, 0.0)
    if n <= EXHAUSTIVE_TRIANGLE_LIMIT:
        worst, triple, checked = _triangle_exhaustive(dd, eps)
        exhaustive = True
    else:
        worst, triple, checked = _triangle_sampled(dd, eps, seed, SAMPLED_TRIPLES)
        exhaustive = False
    return ValidationReport(
        n=n,
        symmetric=bool(np.array_equal(d, d.T)),
        zero_diagonal=bool(np.all(np.diag(d) == 0)),
        nonnegative=bool(np.all(d >= 0)),
        finite=finite,
        triangle_ok=triple is None,
        worst_triangle_slack=worst,
        worst_triple=triple,
        triples_checked=checked,
        exhaustive=exhaustive,
        corrections=tuple(notes),
    )
