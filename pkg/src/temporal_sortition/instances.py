"""Named fixtures and seeded synthetic populations."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InputError
from .metric import Instance

KINDS = ("line-clusters", "planar-gaussians", "uniform")


def _line(positions, prefix: str) -> Instance:
    x = np.asarray(positions, dtype=float)
    d = np.abs(x[:, None] - x[None, :])
    return Instance.from_matrix(d, ids=[f"{prefix}{i}" for i in range(1, x.size + 1)])


def _intro_toy() -> Instance:
    # Four locations far apart relative to their (zero) spread.
    locations = [0.0, 100.0, 200.0, 300.0]
    counts = [8, 4, 2, 2]
    x = np.repeat(locations, counts)
    d = np.abs(x[:, None] - x[None, :])
    return Instance.from_matrix(d, ids=[f"v{i}" for i in range(1, x.size + 1)])


FIXTURES = {
    "theorem1": lambda: _line([0, 0, 1, 10, 10, 10, 11, 11, 11], "x"),
    "figure1": lambda: _line([1, 1, 2, 2, 4, 4, 4, 4], "v"),
    "intro_toy": _intro_toy,
}


def fixture(name: str) -> Instance:
    """One of ``theorem1``, ``figure1`` or ``intro_toy`` as an explicit-matrix instance."""
    try:
        return FIXTURES[name]()
    except KeyError:
        raise InputError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None


def largest_remainder(weights, n: int) -> list[int]:
    """Integer counts summing to ``n`` that round ``n * weights`` by largest remainder."""
    w = np.asarray(weights, dtype=float)
    raw = w * n
    counts = np.floor(raw).astype(int)
    short = n - int(counts.sum())
    # Stable sort keeps lower cluster indices first among equal remainders.
    for j in np.argsort(-(raw - counts), kind="stable")[:short]:
        counts[j] += 1
    return counts.tolist()


def _parse(spec: dict) -> dict:
    if not isinstance(spec, dict):
        raise InputError("instance spec must be a mapping")
    out = {
        "kind": spec.get("kind", "uniform"),
        "n": spec.get("n"),
        "weights": spec.get("weights", [1.0]),
        "separation": spec.get("separation", 10.0),
        "spread": spec.get("spread", 1.0),
        "dim": spec.get("dim", 2),
        "seed": spec.get("seed", 0),
    }
    if out["kind"] not in KINDS:
        raise InputError(f"unknown instance kind {out['kind']!r}; choose from {KINDS}")
    try:
        out["n"] = int(out["n"])
        out["weights"] = [float(w) for w in out["weights"]]
        out["separation"] = float(out["separation"])
        out["spread"] = float(out["spread"])
        out["dim"] = int(out["dim"])
        out["seed"] = int(out["seed"])
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid instance spec: {exc}") from exc
    if out["n"] < 1:
        raise InputError("n must be at least 1")
    w = np.array(out["weights"])
    if w.size == 0 or (w < 0).any() or abs(w.sum() - 1) > 1e-9:
        raise InputError("cluster weights must be non-negative and sum to 1")
    if out["spread"] < 0 or out["separation"] < 0 or out["dim"] < 1:
        raise InputError("spread, separation and dim must be non-negative (dim positive)")
    return out


def generate(spec: dict[str, Any]) -> Instance:
    """Seeded synthetic population.

    ``line-clusters`` puts cluster j at ``j * separation * spread`` on a line
    with members uniform within ``spread`` of it.  ``planar-gaussians`` lays
    centers on a square grid with the same spacing and draws members from an
    isotropic normal of scale ``spread``.  ``uniform`` ignores the weights
    and fills the unit cube of dimension ``dim``.
    """
    s = _parse(spec)
    rng = np.random.default_rng(s["seed"])
    n = s["n"]
    if s["kind"] == "uniform":
        pts = rng.random((n, s["dim"]))
    else:
        counts = largest_remainder(s["weights"], n)
        gap = s["separation"] * s["spread"]
        if s["kind"] == "line-clusters":
            centers = np.arange(len(counts), dtype=float)[:, None] * gap
            noise = lambda c: rng.uniform(-s["spread"], s["spread"], size=(c, 1))  # noqa: E731
        else:
            side = int(np.ceil(np.sqrt(len(counts))))
            centers = np.array([[j % side, j // side] for j in range(len(counts))], dtype=float) * gap
            noise = lambda c: rng.normal(0, s["spread"], size=(c, 2))  # noqa: E731
        pts = np.concatenate([centers[j] + noise(c) for j, c in enumerate(counts)])
    return Instance.from_points(pts, "l2")


def load_spec(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read instance spec {path}: {exc}") from exc
