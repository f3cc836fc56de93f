"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary lines are
repeated at the end of the pytest report.  Criteria 6-8 simulate ensembles of
up to a million steps per run and take several minutes in total.
"""
import os
import time
from math import sqrt

import numpy as np
import pytest

from pachoice import ChoiceVector, ModelConfig
from pachoice.harness import NON_HUB, PERSISTENT_HUB, detect_jump, detect_jumps, diagnose, estimate_limit, run_ensemble
from pachoice.kernels import dg_dy, f1, f2, g, h, lambda1, lambda2
from pachoice.roots import (MID3_XI, SEC6_XI, STABLE, TOUCHPOINT, UNSTABLE, condensation_predict, find_roots,
                            mid3_delta_roots, root_curves, sec6_thresholds, stationary_points)
from oracles import attachment_probabilities, tree_degree_sequences

WORKERS = os.cpu_count() or 1
CELL = 0.005  # default 201-point grid


def test_criterion_1_kernel_enumeration(report):
    t0 = time.perf_counter()
    worst = 0.0
    cases = 0
    for alpha in (0.0, -0.5, -0.9):
        for r in (2, 3):
            xis = [ChoiceVector.basis(k, r) for k in range(1, r + 1)]
            if r == 3:
                xis += [ChoiceVector((0, 1, 0)), ChoiceVector((0.5, 0, 0.5))]
            for xi in xis:
                for degrees in tree_degree_sequences(4):
                    probs, shares = attachment_probabilities(degrees, alpha, xi.weights)
                    for j in range(len(degrees)):
                        y = float(sum(shares[:j + 1]))
                        worst = max(worst, abs(g(y, xi) - float(sum(probs[:j + 1]))),
                                    abs(h(y, float(shares[j]), xi) - float(probs[j])))
                        cases += 1
    probs, _ = attachment_probabilities((1, 2, 1), 0, (0, 1, 0))
    eleven = probs[1] == pytest.approx(11 / 16, abs=0) and abs(h(0.75, 0.5, MID3_XI) - 11 / 16) < 1e-12
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and eleven and elapsed < 1.0
    report(1, ok, f"{cases} cases, max error {worst:.2e}, 11/16 {'ok' if eleven else 'wrong'}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_identities(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    rs = rng.integers(2, 8, size=10_000)
    worst_split = worst_shift = 0.0
    for r in np.unique(rs):
        m = int(np.sum(rs == r))
        xi = rng.dirichlet(np.ones(r), size=m)
        xi /= xi.sum(axis=1, keepdims=True)
        y, x = rng.random(m), rng.random(m)
        d = y * rng.random(m)
        alpha = rng.uniform(-0.99, 3.0, size=m)
        split = f1(y - d, x, alpha, xi) - f1(y, x, alpha, xi) + f2(y, d, alpha, xi)
        shift = lambda2(y, d, alpha, xi) - lambda1(y - d, alpha, xi)
        worst_split = max(worst_split, float(np.max(np.abs(split))))
        worst_shift = max(worst_shift, float(np.max(np.abs(shift))))
    elapsed = time.perf_counter() - t0
    ok = worst_split < 1e-12 and worst_shift < 1e-12 and elapsed < 1.0
    report(2, ok, f"{len(rs)} tuples, split {worst_split:.2e}, shift {worst_shift:.2e}, {elapsed:.3f}s")
    assert ok


def test_criterion_3_derivatives(report):
    from math import comb
    rng = np.random.default_rng(7)
    eps = 1e-6
    worst1 = worst2 = worst_sum = 0.0
    for _ in range(500):
        r = int(rng.integers(2, 8))
        xi = ChoiceVector(tuple(rng.dirichlet(np.ones(r))))
        alpha = rng.uniform(-0.99, 2.0)
        y = rng.uniform(0.01, 0.99)
        d = y * rng.uniform(0.05, 0.95)
        fd1 = (f1(y + eps, 0.4, alpha, xi) - f1(y - eps, 0.4, alpha, xi)) / (2 * eps)
        fd2 = (f2(y, d + eps, alpha, xi) - f2(y, d - eps, alpha, xi)) / (2 * eps)
        worst1 = max(worst1, abs(lambda1(y, alpha, xi) - fd1))
        worst2 = max(worst2, abs(lambda2(y, d, alpha, xi) - fd2))
    ys = np.linspace(0.005, 0.995, 199)
    for r in range(2, 8):
        for k in range(1, r + 1):
            closed = r * comb(r - 1, k - 1) * ys ** (k - 1) * (1 - ys) ** (r - k)
            summed = sum(comb(r, i) * ys ** (i - 1) * (1 - ys) ** (r - i - 1) * (i - r * ys) for i in range(k, r + 1))
            worst_sum = max(worst_sum, np.max(np.abs(closed - summed)),
                            np.max(np.abs(dg_dy(ys, ChoiceVector.basis(k, r)) - closed)))
    ok = worst1 < 1e-6 and worst2 < 1e-6 and worst_sum < 1e-10
    report(3, ok, f"lambda1 fd {worst1:.2e}, lambda2 fd {worst2:.2e}, sum form {worst_sum:.2e}")
    assert ok


def test_criterion_4_middle_of_three(report):
    a = -0.75
    prof = find_roots(0.5, a, MID3_XI)
    exp = [(2 - sqrt(2)) / 4, 0.5, (2 + sqrt(2)) / 4]
    roots_ok = len(prof.values) == 3 and np.max(np.abs(np.subtract(prof.values, exp))) < 1e-10
    kinds_ok = prof.kinds == [STABLE, UNSTABLE, STABLE]
    b1, b3 = condensation_predict(a, MID3_XI).stable_branches
    window_err = max(abs(b3.domain[0] - (9 - sqrt(6)) / 18), abs(b1.domain[1] - (9 + sqrt(6)) / 18))
    touch = []
    for x, want in ((b3.domain[0], 0.5 + sqrt(1 / 24)), (b1.domain[1], 0.5 - sqrt(1 / 24))):
        p = find_roots(x, a, MID3_XI)
        t = [rt.y for rt in p.roots if rt.kind == TOUCHPOINT]
        touch.append(abs(t[0] - want) if t else np.inf)
    y, d = exp[2], sqrt(2) / 2
    sp = [p for p in stationary_points(0.5, a, MID3_XI) if abs(p.y - y) < 1e-10 and abs(p.d - d) < 1e-10]
    sp_ok = (len(sp) == 1 and abs(f1(y, 0.5, a, MID3_XI)) < 1e-10 and abs(f2(y, d, a, MID3_XI)) < 1e-10
             and all(ev < 0 for ev in sp[0].eigenvalues))
    delta_err = max(abs(f2(yy, dd, a, MID3_XI)) for yy in prof.values for dd in mid3_delta_roots(yy, a)
                    if 0 <= dd <= yy)
    ok = roots_ok and kinds_ok and window_err < 1e-8 and max(touch) < 1e-8 and sp_ok and delta_err < 1e-10
    report(4, ok, f"roots {'ok' if roots_ok and kinds_ok else 'bad'}, window {window_err:.1e}, "
                  f"touchpoints {max(touch):.1e}, stationary {'ok' if sp_ok else 'bad'}, delta {delta_err:.1e}")
    assert ok


def test_criterion_5_second_or_sixth(report):
    t0 = time.perf_counter()
    th = sec6_thresholds()
    errs = {
        "alpha1": abs(th.alpha1 - (35 * sqrt(10) - 116) / 9),
        "alpha2": abs(th.alpha2 + 0.87562),
        "alpha3": abs(th.alpha3 + 0.93144),
        "alpha4": abs(th.alpha4 + 0.96842),
    }
    c85 = condensation_predict(-0.85, SEC6_XI).constants
    c95 = condensation_predict(-0.95, SEC6_XI).constants
    errs["beta1"] = abs(c85["beta1"] - 0.0492)
    errs["beta2"] = abs(c85["beta2"] - 0.2721)
    errs["beta"] = abs(c95["beta"] - 0.3420)
    elapsed = time.perf_counter() - t0
    tol = {"alpha1": 1e-9, "alpha2": 5e-5, "alpha3": 5e-5, "alpha4": 5e-5, "beta1": 5e-4, "beta2": 5e-4, "beta": 5e-4}
    ok = all(errs[k] < tol[k] for k in errs) and elapsed < 10
    report(5, ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + f", {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_criterion_6_null_simulation(report):
    cfg = ModelConfig(xi=MID3_XI, alpha=0.0, steps=200_000)
    trajs = run_ensemble(cfg, range(1, 21), WORKERS)
    grid = np.asarray(cfg.grid)
    inner = (grid > 0) & (grid < 1)
    (branch,) = root_curves(0.0, MID3_XI, grid[inner])
    close = fired = 0
    worst = 0.0
    for tr in trajs:
        dist = np.max(np.abs(tr.psi[-1][inner] - branch.values))
        worst = max(worst, dist)
        close += dist < 0.02
        fired += detect_jump(estimate_limit(tr), 0.1) is not None
    ok = close >= 19 and fired == 0
    report(6, ok, f"{close}/20 within 0.02 (worst {worst:.4f}), jumps fired {fired}/20")
    assert ok


@pytest.mark.slow
def test_criterion_7_condensation(report):
    a = -0.75
    cfg = ModelConfig(xi=MID3_XI, alpha=a, steps=1_000_000)
    diags = [diagnose(tr, 0.1) for tr in run_ensemble(cfg, range(1, 51), WORKERS)]
    lo, hi = 0.5 - sqrt(6) / 18 - CELL, 0.5 + sqrt(6) / 18 + CELL
    found = [d for d in diags if d.jump_detected]
    inside = [d for d in found if lo <= d.location <= hi]
    hubs = {d.hub for d in diags}
    frac = len(inside) / len(found) if found else 0.0
    ok = len(found) >= 47 and frac >= 0.95 and PERSISTENT_HUB in hubs and NON_HUB in hubs
    report(7, ok, f"jumps {len(found)}/50 (need 47), in window {len(inside)}/{len(found)} = {frac:.0%} (need 95%), "
                  f"hub classes {sorted(hubs)}")
    assert ok


def _in_intervals(locs, intervals):
    return all(lo - CELL <= x <= hi + CELL for x, (lo, hi) in zip(sorted(locs), intervals))


@pytest.mark.slow
def test_criterion_8_two_point_condensation(report):
    rep85 = condensation_predict(-0.85, SEC6_XI)
    b1, b2 = rep85.constants["beta1"], rep85.constants["beta2"]
    intervals = [(b1, b2), (1 - b2, 1 - b1)]
    cfg = ModelConfig(xi=SEC6_XI, alpha=-0.85, steps=1_000_000)
    two = located = 0
    for tr in run_ensemble(cfg, range(1, 31), WORKERS):
        js = detect_jumps(estimate_limit(tr), 0.1)
        if len(js) == 2:
            two += 1
            located += _in_intervals([j.location for j in js], intervals)
    counts = []
    for tr in run_ensemble(cfg.replace(alpha=-0.95), range(1, 31), WORKERS):
        counts.append(len(detect_jumps(estimate_limit(tr), 0.1)))
    ok85 = two > 15 and located > 15
    ok95 = 1 in counts and 2 in counts
    ok = ok85 and ok95
    report(8, ok, f"alpha=-0.85: two jumps {two}/30, located in [b1,b2] and [1-b2,1-b1] {located}/30 (need >15); "
                  f"alpha=-0.95: one-jump {counts.count(1)}, two-jump {counts.count(2)}")
    assert ok


def test_criterion_9_determinism(report, tmp_path):
    from pachoice.cli import main
    cfgfile = tmp_path / "c.cfg"
    cfgfile.write_text("xi = rank 2 of 3\nalpha = -0.75\nsteps = 20000\nseed = 42\n")
    blobs = []
    for name in ("first", "second"):
        assert main(["simulate", "--config", str(cfgfile), "--out", str(tmp_path / name)]) == 0
        blobs.append((tmp_path / name / "trajectory.csv").read_bytes())
    ok = blobs[0] == blobs[1] and len(blobs[0]) > 0
    report(9, ok, f"trajectory CSV {len(blobs[0])} bytes, identical: {blobs[0] == blobs[1]}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
