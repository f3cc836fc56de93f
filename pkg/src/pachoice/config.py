"""Run configuration and the flat key-value config file format.

A config file has one ``key = value`` pair per line; ``#`` starts a comment.
Values are JSON scalars or arrays, or bare strings::

    r = 3
    xi = rank 2 of 3        # or [0, 1, 0]
    alpha = -0.75
    steps = 100000
    seed = 7
    grid_points = 201
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from ._validation import ChoiceVector, ValidationError, check_alpha, check_grid, check_xi

DEFAULT_GRID_POINTS = 201
CHECKPOINT_START = 10
CHECKPOINT_RATIO = 1.2


class ConfigParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"field {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key


def default_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    if points < 2:
        raise ValidationError("grid needs at least 2 points")
    return np.linspace(0.0, 1.0, points)


def default_checkpoints(steps: int, start: int = CHECKPOINT_START, ratio: float = CHECKPOINT_RATIO) -> list[int]:
    """Step 0, then a geometric schedule from ``start``, then the final step."""
    out = [0]
    t = float(start)
    while round(t) < steps:
        n = int(round(t))
        if n > out[-1]:
            out.append(n)
        t *= ratio
    if steps > out[-1]:
        out.append(steps)
    return out


@dataclass
class ModelConfig:
    """Full parameterisation of one simulation run."""

    xi: ChoiceVector | Sequence[float] | str
    alpha: float
    r: int | None = None
    n0: int = 2
    initial_locations: Sequence[float] | str = "random"
    steps: int = 0
    seed: int = 0
    grid: Sequence[float] | None = None
    checkpoints: Sequence[int] | None = None
    tracked: Sequence[int] | None = None

    def __post_init__(self):
        self.xi = check_xi(self.xi, self.r)
        self.r = self.xi.r
        self.alpha = check_alpha(self.alpha)
        self.n0 = int(self.n0)
        if self.n0 < 2:
            raise ValidationError(f"n0 must be at least 2, got {self.n0}")
        if isinstance(self.initial_locations, str):
            if self.initial_locations != "random":
                raise ValidationError("initial_locations must be a list or 'random'")
        else:
            locs = [float(v) for v in self.initial_locations]
            if len(locs) != self.n0:
                raise ValidationError(f"expected {self.n0} initial locations, got {len(locs)}")
            if any(not 0.0 < v < 1.0 for v in locs):
                raise ValidationError("initial locations must lie in (0, 1)")
            if len(set(locs)) != len(locs):
                raise ValidationError("duplicate initial locations")
            self.initial_locations = locs
        self.steps = int(self.steps)
        if self.steps < 0:
            raise ValidationError("steps must be non-negative")
        self.seed = int(self.seed)
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        self.grid = check_grid(default_grid() if self.grid is None else self.grid)
        if self.checkpoints is None:
            self.checkpoints = default_checkpoints(self.steps)
        else:
            cps = sorted({int(c) for c in self.checkpoints})
            if cps and (cps[0] < 0 or cps[-1] > self.steps):
                raise ValidationError("checkpoints must lie in 0..steps")
            self.checkpoints = cps
        if self.tracked is None:
            self.tracked = list(range(self.n0))
        else:
            self.tracked = [int(v) for v in self.tracked]
            if any(not 0 <= v < self.n0 for v in self.tracked):
                raise ValidationError("tracked vertices must be initial vertices 0..n0-1")

    def to_dict(self) -> dict:
        """JSON-serialisable echo of the configuration."""
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["xi"] = list(self.xi.weights)
        d["grid"] = [float(v) for v in self.grid]
        d["checkpoints"] = list(self.checkpoints)
        d["tracked"] = list(self.tracked)
        if not isinstance(self.initial_locations, str):
            d["initial_locations"] = list(self.initial_locations)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        points = d.pop("grid_points", None)
        if points is not None and d.get("grid") is None:
            d["grid"] = default_grid(int(points))
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigParseError(f"unknown field(s) {sorted(unknown)}")
        return cls(**d)

    def replace(self, **changes) -> "ModelConfig":
        d = self.to_dict()
        if "steps" in changes and "checkpoints" not in changes:
            d["checkpoints"] = None
        d.update(changes)
        return ModelConfig.from_dict(d)


_CONFIG_KEYS = {f.name for f in fields(ModelConfig)} | {"grid_points"}


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def parse_config_text(text: str) -> dict:
    """Parse the key-value format into a dict, reporting the offending line."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigParseError("expected 'key = value'", line=lineno)
        key, raw = (p.strip() for p in body.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigParseError("unknown key", line=lineno, key=key)
        if key in out:
            raise ConfigParseError("duplicate key", line=lineno, key=key)
        if not raw:
            raise ConfigParseError("missing value", line=lineno, key=key)
        out[key] = (lineno, _parse_value(raw))
    return out


def load_config(path: str | Path, **overrides) -> ModelConfig:
    """Read a config file; ``overrides`` (non-None) replace file values."""
    entries = parse_config_text(Path(path).read_text())
    values = {k: v for k, (_, v) in entries.items()}
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "xi" not in values or "alpha" not in values:
        missing = [k for k in ("xi", "alpha") if k not in values]
        raise ConfigParseError(f"missing required field(s) {missing}")
    try:
        return ModelConfig.from_dict(values)
    except ValidationError as exc:
        key = next((k for k in entries if k in str(exc)), None)
        line = entries[key][0] if key else None
        raise ConfigParseError(str(exc), line=line, key=key) from exc


def format_config(cfg: ModelConfig) -> str:
    """Inverse of :func:`load_config` (grid written out explicitly)."""
    d = cfg.to_dict()
    return "".join(f"{k} = {json.dumps(v)}\n" for k, v in d.items())


__all__ = [
    "ConfigParseError", "ModelConfig", "default_checkpoints", "default_grid",
    "format_config", "load_config", "parse_config_text",
]
