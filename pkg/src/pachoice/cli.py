"""Command-line entry point: ``pachoice {simulate,analyze,scan,reproduce}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from collections import Counter
from datetime import datetime
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import ValidationError, check_alpha, check_xi
from .config import ConfigParseError, ModelConfig, default_grid, load_config
from .engine import RNG_ALGORITHM, run
from .harness import (FIGURES, NON_HUB, NULL_THRESHOLD, PERSISTENT_HUB, UNDECIDED, _json_default,
                      default_workers, diagnose, reproduce, run_ensemble)
from .roots import condensation_predict
from .trajectory import fmt

log = logging.getLogger("pachoice")


def _out_dir(args, command: str, seed) -> Path:
    if args.out:
        out = Path(args.out)
    else:
        stamp = datetime.now().strftime("%Y%m%dT%H%M%S")
        out = Path("out") / command / f"{stamp}-{seed}"
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, params: dict, seeds, artifacts: list[str],
                    t0: float, extra: dict | None = None) -> dict:
    manifest = {
        "command": command,
        "config": params,
        "seeds": list(seeds),
        "rng_algorithm": RNG_ALGORITHM,
        "artifacts": artifacts,
        "tool_version": __version__,
        "wall_time_s": time.perf_counter() - t0,
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return manifest


def _parse_alphas(text: str) -> list[float]:
    vals = [v for v in text.replace(" ", "").split(",") if v]
    if not vals:
        raise ValidationError("alpha range is empty")
    return [check_alpha(float(v)) for v in vals]


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    over = {k: v for k, v in (("seed", args.seed), ("steps", args.steps), ("grid_points", args.grid_points))
            if v is not None}
    cfg = load_config(args.config, **over)
    out = _out_dir(args, "simulate", cfg.seed)
    traj = run(cfg)
    csv_path = out / "trajectory.csv"
    csv_path.write_text(traj.to_csv_string())
    # the manifest doubles as the trajectory sidecar, so it carries the run metadata too
    _write_manifest(out, "simulate", cfg.to_dict(), [cfg.seed], [csv_path.name], t0, extra=traj.metadata())
    print(out)
    return 0


def _x_grid(points: int | None):
    if points is None:
        return None
    if points < 3:
        raise ValidationError(f"grid-points must be at least 3, got {points}")
    return np.linspace(0.0, 1.0, points)[1:-1]


def cmd_analyze(args) -> int:
    t0 = time.perf_counter()
    xi, alpha = check_xi(args.xi), check_alpha(args.alpha)
    report = condensation_predict(alpha, xi, _x_grid(args.grid_points))
    out = _out_dir(args, "analyze", "na")
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, default=_json_default) + "\n")
    _write_manifest(out, "analyze", {"xi": list(xi.weights), "alpha": alpha, "grid_points": args.grid_points},
                    [], ["report.json"], t0,
                    extra={"min_condensation": report.min_condensation,
                           "max_condensation": report.max_condensation})
    print(out)
    return 0


SCAN_COLUMNS = ["alpha", "predicted_min", "predicted_max", "runs", "jump_detected", "jump_frequency",
                PERSISTENT_HUB, NON_HUB, UNDECIDED]


def cmd_scan(args) -> int:
    t0 = time.perf_counter()
    xi = check_xi(args.xi)
    alphas = _parse_alphas(args.alphas)
    if args.runs < 1:
        raise ValidationError(f"runs must be at least 1, got {args.runs}")
    seeds = list(range(args.seed, args.seed + args.runs))
    workers = args.workers or default_workers()
    out = _out_dir(args, "scan", args.seed)
    rows, predictions = [], {}
    for alpha in alphas:
        report = condensation_predict(alpha, xi)
        predictions[fmt(alpha)] = {"min": report.min_condensation, "max": report.max_condensation}
        cfg = ModelConfig(xi=xi, alpha=alpha, steps=args.steps, seed=args.seed, grid=default_grid(args.grid_points))
        diags = [diagnose(t, args.jump_threshold) for t in run_ensemble(cfg, seeds, workers)]
        hubs = Counter(d.hub for d in diags)
        hits = sum(d.jump_detected for d in diags)
        rows.append([fmt(alpha), report.min_condensation, report.max_condensation, len(diags), hits,
                     fmt(hits / len(diags)), hubs[PERSISTENT_HUB], hubs[NON_HUB], hubs[UNDECIDED]])
        log.info("alpha=%s jumps %d/%d", alpha, hits, len(diags))
    with (out / "scan.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCAN_COLUMNS)
        w.writerows(rows)
    params = {"xi": list(xi.weights), "alphas": alphas, "runs": args.runs, "steps": args.steps,
              "grid_points": args.grid_points, "jump_threshold": args.jump_threshold, "workers": workers}
    _write_manifest(out, "scan", params, seeds, ["scan.csv"], t0, extra={"predictions": predictions})
    print(out)
    return 0


def cmd_reproduce(args) -> int:
    t0 = time.perf_counter()
    if args.figure not in FIGURES:
        raise KeyError(f"unknown figure {args.figure!r}; available: {', '.join(FIGURES)}")
    seeds = None if args.runs is None else list(range(args.seed, args.seed + args.runs))
    out = _out_dir(args, "reproduce", args.seed)
    result = reproduce(args.figure, out, steps=args.steps, seeds=seeds, workers=args.workers or 1,
                       null_threshold=args.jump_threshold, grid_points=args.grid_points)
    params = {"figure": args.figure, "steps": result.get("steps"), "grid_points": args.grid_points,
              "jump_threshold": args.jump_threshold}
    files = result.pop("files")
    _write_manifest(out, "reproduce", params, result.get("seeds", []), files, t0, extra=result)
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pachoice", description="Location-choice preferential attachment toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run one simulation from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--steps", type=int)
    s.add_argument("--grid-points", type=int)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="zero curves and condensation prediction")
    a.add_argument("--xi", required=True, help='comma-separated weights or "rank k of r"')
    a.add_argument("--alpha", type=float, required=True)
    a.add_argument("--grid-points", type=int, help="x grid size including the endpoints 0 and 1")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("scan", help="prediction plus ensemble diagnosis over several alphas")
    c.add_argument("--xi", required=True)
    c.add_argument("--alphas", required=True, help="comma-separated alpha values")
    c.add_argument("--runs", type=int, default=10)
    c.add_argument("--steps", type=int, default=100_000)
    c.add_argument("--seed", type=int, default=1, help="first seed; runs use consecutive seeds")
    c.add_argument("--grid-points", type=int, default=201)
    c.add_argument("--jump-threshold", type=float, default=NULL_THRESHOLD)
    c.add_argument("--workers", type=int, help="worker processes (default: number of processors)")
    c.set_defaults(func=cmd_scan)

    r = sub.add_parser("reproduce", help="write the data behind one figure")
    r.add_argument("--figure", required=True, help=f"one of: {', '.join(FIGURES)}")
    r.add_argument("--steps", type=int)
    r.add_argument("--seed", type=int, default=1, help="first seed when --runs is given")
    r.add_argument("--runs", type=int)
    r.add_argument("--grid-points", type=int)
    r.add_argument("--jump-threshold", type=float, default=NULL_THRESHOLD)
    r.add_argument("--workers", type=int)
    r.set_defaults(func=cmd_reproduce)

    for sp in (s, a, c, r):
        sp.add_argument("--out", help="output directory (default: out/<command>/<timestamp-seed>/)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
    except (ValidationError, ConfigParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
