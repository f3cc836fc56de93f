"""Checkpointed measurements of a run, with CSV + JSON sidecar serialisation."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ModelConfig


def fmt(v) -> str:
    """Round-trip float formatting (17 significant digits)."""
    return format(float(v), ".17g")


@dataclass
class Trajectory:
    config: ModelConfig
    n: np.ndarray               # (rows,)
    psi: np.ndarray             # (rows, grid)
    D: np.ndarray               # (rows, tracked)
    max_id: np.ndarray          # (rows,)
    max_degree: np.ndarray      # (rows,)
    rng_algorithm: str
    initial_locations: list[float]
    locations: dict[int, float] = field(default_factory=dict)  # of every max-degree vertex seen
    wall_time: float = 0.0

    @property
    def grid(self) -> np.ndarray:
        return self.config.grid

    @property
    def seed(self) -> int:
        return self.config.seed

    def __len__(self):
        return len(self.n)

    def total_weight(self, n=None) -> np.ndarray:
        n = self.n if n is None else np.asarray(n)
        a = self.config.alpha
        return (n + self.config.n0 - 1) * (2.0 + a) + a

    def max_share(self) -> np.ndarray:
        """Weight share (deg + alpha) / total of the current max-degree vertex."""
        return (self.max_degree + self.config.alpha) / self.total_weight()

    def header(self) -> list[str]:
        cols = ["n"]
        cols += [f"psi@{fmt(x)}" for x in self.grid]
        cols += [f"D[{v}]" for v in self.config.tracked]
        cols += ["max_degree_vertex_id", "max_degree"]
        return cols

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for i in range(len(self.n)):
            row = [str(int(self.n[i]))]
            row += [fmt(v) for v in self.psi[i]]
            row += [fmt(v) for v in self.D[i]]
            row += [str(int(self.max_id[i])), str(int(self.max_degree[i]))]
            w.writerow(row)
        return buf.getvalue()

    def metadata(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "rng_algorithm": self.rng_algorithm,
            "initial_locations": [float(v) for v in self.initial_locations],
            "initial_locations_source": (
                "explicit" if not isinstance(self.config.initial_locations, str) else "uniform draws"
            ),
            "max_degree_vertex_locations": {str(k): v for k, v in sorted(self.locations.items())},
            "wall_time_s": self.wall_time,
        }

    def save(self, csv_path: str | Path, meta_path: str | Path | None = None) -> tuple[Path, Path]:
        csv_path = Path(csv_path)
        meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
        csv_path.write_text(self.to_csv_string())
        meta_path.write_text(json.dumps(self.metadata(), indent=2) + "\n")
        return csv_path, meta_path

    @classmethod
    def load(cls, csv_path: str | Path, meta_path: str | Path | None = None) -> "Trajectory":
        csv_path = Path(csv_path)
        meta_path = Path(meta_path) if meta_path else csv_path.with_suffix(".json")
        meta = json.loads(meta_path.read_text())
        cfg = ModelConfig.from_dict(meta["config"])
        with csv_path.open() as fh:
            rows = list(csv.reader(fh))
        data = rows[1:]
        g, t = len(cfg.grid), len(cfg.tracked)
        arr = np.array([[float(v) for v in row] for row in data]) if data else np.zeros((0, 3 + g + t))
        return cls(
            config=cfg,
            n=arr[:, 0].astype(np.int64),
            psi=arr[:, 1:1 + g],
            D=arr[:, 1 + g:1 + g + t],
            max_id=arr[:, 1 + g + t].astype(np.int64),
            max_degree=arr[:, 2 + g + t].astype(np.int64),
            rng_algorithm=meta["rng_algorithm"],
            initial_locations=meta["initial_locations"],
            locations={int(k): v for k, v in meta["max_degree_vertex_locations"].items()},
            wall_time=meta.get("wall_time_s", 0.0),
        )
