"""Condensation diagnostics for simulated trajectories and figure reproduction.

The hub rules (5% share drift, 10% fade ratio, at least 6 checkpoints) are
heuristics for desk-scale runs, not properties of the model.  Every constant
is a keyword argument.
"""
from __future__ import annotations

import csv
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from ._validation import ChoiceVector, check_xi
from .config import ModelConfig
from .engine import RNG_ALGORITHM, run
from .kernels import lambda1, lambda2
from .roots import MID3_XI, SEC6_XI, STABLE, PhaseReport, condensation_predict, mid3_delta_roots, root_curves
from .trajectory import Trajectory, fmt

log = logging.getLogger(__name__)

NULL_THRESHOLD = 0.1
PERSIST_CHANGE = 0.05
FADE_RATIO = 0.1
MIN_CHECKPOINTS = 6
MIN_ID_CHANGES = 2

PERSISTENT_HUB, NON_HUB, UNDECIDED = "persistent-hub", "non-hub", "undecided"


@dataclass
class LimitEstimate:
    grid: np.ndarray
    psi: np.ndarray
    change: np.ndarray          # spread of Psi_n over the last checkpoints, per grid point
    n: int = 0
    alpha: float | None = None
    xi: ChoiceVector | None = None

    @classmethod
    def from_values(cls, grid, psi, **kw) -> "LimitEstimate":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.asarray(psi, dtype=float), np.zeros_like(grid), **kw)


def estimate_limit(traj: Trajectory, window: int = 3) -> LimitEstimate:
    """Final Psi_n with the max change over the last ``window`` checkpoints."""
    if len(traj) < window:
        raise ValueError(f"need at least {window} checkpoints, got {len(traj)}")
    tail = traj.psi[-window:]
    return LimitEstimate(
        grid=np.asarray(traj.grid), psi=traj.psi[-1].copy(), change=np.ptp(tail, axis=0),
        n=int(traj.n[-1]), alpha=traj.config.alpha, xi=traj.config.xi,
    )


@dataclass(frozen=True)
class Jump:
    location: float     # right end of the grid cell holding the increment
    size: float
    cell: int           # index of that right end in the grid


def detect_jump(estimate: LimitEstimate, null_threshold: float = NULL_THRESHOLD) -> Jump | None:
    """Largest single-cell increment, if it exceeds ``null_threshold``."""
    inc = np.diff(estimate.psi)
    i = int(np.argmax(inc))
    if inc[i] <= null_threshold:
        return None
    return Jump(float(estimate.grid[i + 1]), float(inc[i]), i + 1)


def detect_jumps(estimate: LimitEstimate, null_threshold: float = NULL_THRESHOLD) -> list[Jump]:
    """Every increment above the threshold; runs of adjacent cells count once."""
    inc = np.diff(estimate.psi)
    hot = np.flatnonzero(inc > null_threshold)
    out: list[Jump] = []
    start = 0
    while start < len(hot):
        stop = start
        while stop + 1 < len(hot) and hot[stop + 1] == hot[stop] + 1:
            stop += 1
        cells = hot[start:stop + 1]
        top = int(cells[np.argmax(inc[cells])])
        out.append(Jump(float(estimate.grid[top + 1]), float(inc[cells].sum()), top + 1))
        start = stop + 1
    return out


def classify_hub(traj: Trajectory, jump: Jump | None, *,
                 persist_change: float = PERSIST_CHANGE, fade_ratio: float = FADE_RATIO,
                 min_checkpoints: int = MIN_CHECKPOINTS, min_id_changes: int = MIN_ID_CHANGES) -> str:
    """Is the condensate carried by one persistent vertex?

    Looks at the current max-degree vertex over the final half of the
    checkpoints.
    """
    rows = len(traj)
    if rows < min_checkpoints:
        return UNDECIDED
    if jump is None:
        return NON_HUB
    half = slice(rows // 2, rows)
    ids = traj.max_id[half]
    share = traj.max_share()[half]
    changes = int(np.count_nonzero(np.diff(ids)))
    cell = float(np.max(np.diff(traj.grid)))
    if changes == 0 and share[0] > 0:
        drift = abs(share[-1] - share[0]) / share[0]
        loc = traj.locations.get(int(ids[-1]))
        if drift < persist_change and loc is not None and abs(loc - jump.location) <= cell:
            return PERSISTENT_HUB
    if changes >= min_id_changes or share[-1] < fade_ratio * jump.size:
        return NON_HUB
    return UNDECIDED


@dataclass
class Comparison:
    grid: np.ndarray
    assignment: np.ndarray      # 1-based branch index, 0 where nothing was assigned
    residuals: np.ndarray       # NaN where nothing was assigned
    near_unstable: np.ndarray   # closer to an unstable zero than to any stable one

    @property
    def visited(self) -> list[int]:
        """Branches in the order Psi uses them (consecutive repeats collapsed)."""
        seq: list[int] = []
        for b in self.assignment:
            if b and (not seq or seq[-1] != b):
                seq.append(int(b))
        return seq

    @property
    def jumps(self) -> int:
        return max(len(self.visited) - 1, 0)


def compare(estimate: LimitEstimate, report: PhaseReport) -> Comparison:
    """Assign each grid point to the nearest stable zero curve."""
    if estimate.alpha is not None and not np.isclose(estimate.alpha, report.alpha, rtol=0, atol=1e-12):
        raise ValueError(f"alpha mismatch: estimate {estimate.alpha} vs report {report.alpha}")
    if estimate.xi is not None and check_xi(estimate.xi) != report.xi:
        raise ValueError(f"xi mismatch: estimate {estimate.xi} vs report {report.xi}")
    grid = estimate.grid
    inner = (grid > 0) & (grid < 1)
    branches = root_curves(report.alpha, report.xi, grid[inner])
    assignment = np.zeros(len(grid), dtype=int)
    residuals = np.full(len(grid), np.nan)
    near_unstable = np.zeros(len(grid), dtype=bool)
    cols = np.flatnonzero(inner)
    for k, col in enumerate(cols):
        est = estimate.psi[col]
        best, best_d, unstable_d = 0, np.inf, np.inf
        for b in branches:
            v = b.values[k]
            if np.isnan(v):
                continue
            dist = abs(est - v)
            if b.kind == STABLE:
                if dist < best_d:
                    best, best_d = b.index, dist
            else:
                unstable_d = min(unstable_d, dist)
        assignment[col] = best
        residuals[col] = best_d if best else np.nan
        near_unstable[col] = unstable_d < best_d
    return Comparison(grid, assignment, residuals, near_unstable)


@dataclass
class CondensationDiagnosis:
    jump_detected: bool
    location: float | None
    size: float
    hub: str
    jumps: list[Jump] = field(default_factory=list)
    comparison: Comparison | None = None

    def summary(self) -> dict:
        d = {
            "jump_detected": self.jump_detected,
            "location": self.location,
            "size": self.size,
            "hub": self.hub,
            "jumps": [asdict(j) for j in self.jumps],
        }
        if self.comparison is not None:
            d["branches_visited"] = self.comparison.visited
            res = self.comparison.residuals
            d["max_residual"] = float(np.nanmax(res)) if np.any(~np.isnan(res)) else None
        return d


def diagnose(traj: Trajectory, null_threshold: float = NULL_THRESHOLD,
             report: PhaseReport | None = None, **hub_kw) -> CondensationDiagnosis:
    est = estimate_limit(traj) if len(traj) >= 3 else LimitEstimate.from_values(traj.grid, traj.psi[-1])
    jump = detect_jump(est, null_threshold)
    jumps = detect_jumps(est, null_threshold)
    return CondensationDiagnosis(
        jump_detected=jump is not None,
        location=None if jump is None else jump.location,
        size=0.0 if jump is None else jump.size,
        hub=classify_hub(traj, jump, **hub_kw),
        jumps=jumps,
        comparison=None if report is None else compare(est, report),
    )


# ---------------------------------------------------------------- ensembles

def _run_one(cfg_dict: dict) -> Trajectory:
    return run(ModelConfig.from_dict(cfg_dict))


def run_ensemble(config: ModelConfig, seeds: Sequence[int], workers: int = 1) -> list[Trajectory]:
    """One independent run per seed; results in seed order."""
    dicts = [config.replace(seed=s).to_dict() for s in seeds]
    if workers <= 1 or len(dicts) <= 1:
        return [_run_one(d) for d in dicts]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, dicts))


def default_workers() -> int:
    return os.cpu_count() or 1


# ---------------------------------------------------------------- figure reproduction

@dataclass(frozen=True)
class FigureSpec:
    kind: str                   # sims | roots | eigen
    xi: ChoiceVector
    alpha: float
    description: str


FIGURES: dict[str, FigureSpec] = {
    "mid3-sims": FigureSpec("sims", MID3_XI, -0.75, "middle of three, simulations at alpha=-0.75"),
    "sec6-85": FigureSpec("sims", SEC6_XI, -0.85, "second or sixth of seven, simulations at alpha=-0.85"),
    "sec6-95": FigureSpec("sims", SEC6_XI, -0.95, "second or sixth of seven, simulations at alpha=-0.95"),
    "mid3-roots": FigureSpec("roots", MID3_XI, -0.75, "zeros of F1 against x, middle of three"),
    "eigen-plot": FigureSpec("eigen", MID3_XI, -0.75, "Jacobian eigenvalues at the stationary points"),
}

DEFAULT_FIGURE_STEPS = 10**6
DEFAULT_FIGURE_SEEDS = (1, 2)


def _write_csv(path: Path, header: list[str], rows: Iterable[Iterable]) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None or (isinstance(v, float) and np.isnan(v)) else
                        (fmt(v) if isinstance(v, (float, np.floating)) else v) for v in row])
    return path


def write_root_curves(path: Path, report: PhaseReport) -> Path:
    header = ["x"] + [f"psi_{b.index}" for b in report.branches]
    rows = ([x] + [float(b.values[i]) for b in report.branches] for i, x in enumerate(report.x_grid))
    return _write_csv(path, header, rows)


def eigen_curves(alpha: float, samples: int = 300) -> dict[str, np.ndarray]:
    """Middle-of-three eigenvalues over the y-range where the delta roots are real."""
    half = np.sqrt(144.0 - 48.0 * (7.0 + 8.0 * alpha)) / 24.0
    ys = np.linspace(0.5 - half, 0.5 + half, samples)
    out = {"y": ys, "lambda1": np.asarray(lambda1(ys, alpha, MID3_XI))}
    for name, pick in (("delta2", 1), ("delta3", 2)):
        deltas = np.array([mid3_delta_roots(y, alpha)[pick] for y in ys])
        ok = (deltas >= 0) & (deltas <= ys)
        lam = np.where(ok, 0.0, np.asarray(lambda1(ys - deltas, alpha, MID3_XI)))
        if ok.any():
            lam[ok] = lambda2(ys[ok], deltas[ok], alpha, MID3_XI)
        out[name] = deltas
        out[f"lambda2_{name}"] = lam
        out[f"{name}_in_domain"] = ok
    return out


def reproduce(figure: str, out_dir: str | Path, steps: int | None = None, seeds: Sequence[int] | None = None,
              workers: int = 1, null_threshold: float = NULL_THRESHOLD,
              grid_points: int | None = None) -> dict:
    """Write the CSV data behind one figure plus ``manifest.json``; returns the manifest."""
    if figure not in FIGURES:
        raise KeyError(f"unknown figure {figure!r}; available: {', '.join(FIGURES)}")
    spec = FIGURES[figure]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files: list[str] = []
    manifest: dict = {
        "figure": figure, "description": spec.description,
        "parameters": {"alpha": spec.alpha, "xi": list(spec.xi.weights)},
        "tool_version": __version__,
    }
    report = condensation_predict(spec.alpha, spec.xi)
    manifest["prediction"] = {
        "min_condensation": report.min_condensation, "max_condensation": report.max_condensation,
        "constants": report.constants,
    }
    if spec.kind in ("roots", "sims"):
        files.append(write_root_curves(out / "roots.csv", report).name)
    if spec.kind == "eigen":
        ec = eigen_curves(spec.alpha)
        files.append(_write_csv(out / "lambda1.csv", ["y", "lambda1"], zip(ec["y"], ec["lambda1"])).name)
        for name in ("delta2", "delta3"):
            rows = zip(ec["y"], ec[name], ec[f"lambda2_{name}"], ec[f"{name}_in_domain"].astype(int))
            files.append(_write_csv(out / f"lambda2_{name}.csv", ["y", name, "lambda2", "in_domain"], rows).name)
    if spec.kind == "sims":
        steps = DEFAULT_FIGURE_STEPS if steps is None else int(steps)
        seeds = list(DEFAULT_FIGURE_SEEDS if seeds is None else seeds)
        kw = {} if grid_points is None else {"grid_points": grid_points}
        base = ModelConfig.from_dict({"xi": spec.xi, "alpha": spec.alpha, "steps": steps, **kw})
        trajs = run_ensemble(base, seeds, workers)
        diags = {}
        for seed, tr in zip(seeds, trajs):
            csv_path, meta_path = tr.save(out / f"sim_seed{seed}.csv")
            files += [csv_path.name, meta_path.name]
            dg = diagnose(tr, null_threshold, report)
            label = f"{len(dg.jumps)}-jump"
            diags[str(seed)] = {**dg.summary(), "label": label}
        manifest.update({"steps": steps, "seeds": seeds, "rng_algorithm": RNG_ALGORITHM,
                         "null_threshold": null_threshold, "diagnosis": diags})
    manifest["files"] = files
    manifest["wall_time_s"] = time.perf_counter() - t0
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return manifest


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, ChoiceVector):
        return list(o.weights)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


__all__ = [
    "CondensationDiagnosis", "Comparison", "FIGURES", "Jump", "LimitEstimate", "NON_HUB",
    "PERSISTENT_HUB", "UNDECIDED", "classify_hub", "compare", "detect_jump", "detect_jumps",
    "diagnose", "eigen_curves", "estimate_limit", "reproduce", "run_ensemble",
]
