"""Experiment configuration: a flat-ish dataclass tree readable from YAML or JSON.

Keys may be nested (``disorder: {kind: bernoulli}``) or dotted
(``disorder.kind: bernoulli``).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .lattice import DISORDER_KINDS, LatticeModel


@dataclass
class DisorderConfig:
    kind: str = "zero"
    h: float = 0.0
    p: float = 0.5


@dataclass
class GridConfig:
    kind: str = "linear"  # "linear" or "log"
    points: int = 201  # linear grids
    per_decade: int = 20  # log grids
    t_min: float = 0.1  # first nonzero time of a log grid


@dataclass
class MeanfieldConfig:
    N_total: float = 0.01


@dataclass
class ExperimentConfig:
    experiment: str = "custom"
    L: int = 31
    J: float = 0.2
    Q: float = 1.0
    disorder: DisorderConfig = field(default_factory=DisorderConfig)
    seed: int = 20250101
    t_max: float = 20.0
    grid: GridConfig = field(default_factory=GridConfig)
    realizations: int = 1
    tolerance: float = 1e-9
    n0: int | None = None
    kappa: float = 1.0
    meanfield: MeanfieldConfig = field(default_factory=MeanfieldConfig)
    boundary_policy: str = "exclude"
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.disorder.kind not in DISORDER_KINDS:
            raise ValueError(f"disorder.kind must be one of {DISORDER_KINDS}, got {self.disorder.kind!r}")
        if self.grid.kind not in ("linear", "log"):
            raise ValueError(f"grid.kind must be 'linear' or 'log', got {self.grid.kind!r}")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")

    @property
    def center(self) -> int:
        return self.n0 if self.n0 is not None else (self.L + 1) // 2

    def model(self, realization: int = 0, J: float | None = None) -> LatticeModel:
        d = self.disorder
        return LatticeModel.build(self.L, self.J if J is None else J, self.Q, d.kind, d.h, d.p,
                                  self.seed, realization)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def updated(self, values: dict) -> "ExperimentConfig":
        merged = _deep_merge(self.to_dict(), _expand_dotted(values))
        return from_dict(merged)


def _expand_dotted(values: dict) -> dict:
    out: dict = {}
    for key, val in values.items():
        if isinstance(val, dict):
            val = _expand_dotted(val)
        parts = key.split(".")
        node = out
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        if isinstance(val, dict) and isinstance(node.get(parts[-1]), dict):
            node[parts[-1]] = _deep_merge(node[parts[-1]], val)
        else:
            node[parts[-1]] = val
    return out


def _deep_merge(base: dict, upd: dict) -> dict:
    out = dict(base)
    for k, v in upd.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


_NESTED = {"disorder": DisorderConfig, "grid": GridConfig, "meanfield": MeanfieldConfig}


def from_dict(values: dict) -> ExperimentConfig:
    values = _expand_dotted(values)
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kw: dict[str, Any] = {}
    for k, v in values.items():
        if k in _NESTED:
            sub = _NESTED[k]
            sub_known = {f.name for f in dataclasses.fields(sub)}
            bad = set(v) - sub_known
            if bad:
                raise ValueError(f"unknown config keys under {k}: {sorted(bad)}")
            kw[k] = sub(**v)
        else:
            kw[k] = v
    for k in ("L", "realizations", "seed", "workers"):
        if k in kw:
            kw[k] = int(kw[k])
    for k in ("J", "Q", "t_max", "tolerance", "kappa"):
        if k in kw:
            kw[k] = float(kw[k])
    return ExperimentConfig(**kw)


def load_config(path) -> dict:
    """Raw mapping from a YAML or JSON file, chosen by extension."""
    text = Path(path).read_text()
    data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ValueError(f"config file {path} must contain a mapping")
    return data
