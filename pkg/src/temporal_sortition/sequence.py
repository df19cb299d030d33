"""Panel sequences with per-seat provenance, and their JSON form."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InputError
from .metric import Instance


@dataclass
class Seat:
    panel: int  # 1-based panel index
    member: int
    pool: list[int]  # the set the member was drawn from uniformly
    source: str  # id of the sampling group (or "residual")
    trajectory: list[str] = field(default_factory=list)
    priority: int | None = None
    phase: str = ""


@dataclass
class PanelSequence:
    algorithm: str
    sizes: list[int]
    panels: list[list[int]]
    seats: list[Seat] = field(default_factory=list)
    seed: int | None = None
    params: dict = field(default_factory=dict)
    # Exact per-individual probability of landing in the union of panels,
    # read off the sampling structure (not estimated).
    selection_probability: list[float] | None = None
    log: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.panels) != len(self.sizes):
            raise InputError("one size per panel required")

    @property
    def ell(self) -> int:
        return len(self.panels)

    def prefix(self, t: int) -> list[int]:
        """Members of the first ``t`` panels."""
        return [v for p in self.panels[:t] for v in p]

    def union(self) -> list[int]:
        return self.prefix(self.ell)

    def check_disjoint(self, n: int | None = None) -> None:
        seen: set[int] = set()
        for t, panel in enumerate(self.panels, 1):
            for v in panel:
                if v in seen:
                    raise InputError(f"individual {v} appears twice (panel {t})")
                if n is not None and not 0 <= v < n:
                    raise InputError(f"panel {t} refers to unknown individual {v}")
                seen.add(v)

    def to_json(self, instance: Instance | None = None) -> dict:
        name = (lambda v: instance.ids[v]) if instance is not None else (lambda v: v)
        out: dict[str, Any] = {
            "algorithm": self.algorithm,
            "sizes": list(self.sizes),
            "seed": self.seed,
            "params": self.params,
            "panels": [[name(v) for v in p] for p in self.panels],
            "panel_indices": [list(p) for p in self.panels],
            "seats": [asdict(s) for s in self.seats],
            "selection_probability": self.selection_probability,
            "log": self.log,
        }
        return to_plain(out)

    @classmethod
    def from_json(cls, data: dict, instance: Instance | None = None) -> "PanelSequence":
        try:
            if "panel_indices" in data:
                panels = [[int(v) for v in p] for p in data["panel_indices"]]
            elif instance is not None:
                panels = [[instance.index_of(v) for v in p] for p in data["panels"]]
            else:
                panels = [[int(v) for v in p] for p in data["panels"]]
            sizes = data.get("sizes") or [len(p) for p in panels]
            seats = [Seat(**s) for s in data.get("seats", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed panel sequence: {exc}") from exc
        return cls(
            algorithm=data.get("algorithm", "external"),
            sizes=[int(s) for s in sizes],
            panels=panels,
            seats=seats,
            seed=data.get("seed"),
            params=data.get("params", {}),
            selection_probability=data.get("selection_probability"),
            log=data.get("log", {}),
        )

    @classmethod
    def load(cls, path: str | Path, instance: Instance | None = None) -> "PanelSequence":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read sequence {path}: {exc}") from exc
        return cls.from_json(data, instance)


def to_plain(obj):
    """Make numpy scalars and tuples JSON-serializable."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


def resolve_seed(seed: int | None) -> int:
    if seed is None:
        return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0] >> 1)
    return int(seed)
