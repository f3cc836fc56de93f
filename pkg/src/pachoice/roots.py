"""Zeros of the drift F1, their stability, root curves and phase predictions.

F1(y; x) = G(y) + x (1 + alpha) with G(y) = g(y) - (2 + alpha) y, so the
critical points of F1 in y do not depend on x.  They split [0, 1] into
monotone segments; each segment carries at most one zero for every x, and
that zero traces a continuous curve in x.  Decreasing segments give stable
zeros, increasing ones unstable zeros, and a zero sitting on a critical
point is a touchpoint.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from itertools import combinations
from math import comb, sqrt
from typing import Callable

import numpy as np

from ._validation import ChoiceVector, ValidationError, check_alpha, check_grid, check_unit, check_xi
from .kernels import dg_dy, f1, lambda1, lambda2

SCAN_STEP = 1e-3
Y_TOL = 1e-12
ALPHA_TOL = 1e-9
MAX_ITER = 200
TOUCH_TOL = 1e-10
TOUCH_RADIUS = 1e-4

STABLE, UNSTABLE, TOUCHPOINT = "stable", "unstable", "touchpoint"

SEC6_XI = ChoiceVector((0.0, 0.5, 0.0, 0.0, 0.0, 0.5, 0.0))
MID3_XI = ChoiceVector.basis(2, 3)


class ConvergenceError(RuntimeError):
    pass


def bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = Y_TOL,
           max_iter: int = MAX_ITER) -> float:
    """Bisection on a sign change of ``f`` over ``[lo, hi]``."""
    flo = f(lo)
    if flo == 0.0:
        return lo
    fhi = f(hi)
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError("no sign change on the bracket")
    it = 0
    while hi - lo > tol:
        it += 1
        if it > max_iter:
            raise ConvergenceError(f"bisection exceeded {max_iter} iterations")
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _bisect_many(f: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray,
                 tol: float = Y_TOL, max_iter: int = MAX_ITER) -> np.ndarray:
    """Vectorised bisection; ``f(lo)`` and ``f(hi)`` must not share a strict sign."""
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    flo = f(lo)
    it = 0
    while np.any(hi - lo > tol):
        it += 1
        if it > max_iter:
            raise ConvergenceError(f"bisection exceeded {max_iter} iterations")
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        fm = f(mid)
        same = (fm > 0) == (flo > 0)
        same &= fm != 0
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------- critical points

@dataclass(frozen=True)
class Segment:
    """Monotone piece ``[a, b]`` of F1(.; x); identical for every x."""

    index: int
    a: float
    b: float
    decreasing: bool

    @property
    def kind(self) -> str:
        return STABLE if self.decreasing else UNSTABLE


def critical_points(alpha: float, xi, step: float = SCAN_STEP) -> list[float]:
    """Sign changes of lambda1 on (0, 1): dense scan refined by bisection."""
    xi = check_xi(xi)
    n = int(round(1.0 / step))
    ys = np.linspace(0.0, 1.0, n + 1)
    v = np.asarray(lambda1(ys, alpha, xi))
    sgn = np.sign(v)
    out = []
    i = 0
    while i < n:
        if sgn[i] != 0 and sgn[i] * sgn[i + 1] < 0:
            out.append(bisect(lambda y: lambda1(y, alpha, xi), ys[i], ys[i + 1]))
        elif sgn[i + 1] == 0 and 0 < i + 1 < n:
            # exact zero on the grid: a turning point only if the sign flips across it
            j = i + 1
            while j < n and sgn[j] == 0:
                j += 1
            if sgn[i] != 0 and sgn[j] != 0 and sgn[i] != sgn[j]:
                out.append(float(ys[i + 1]) if j == i + 2 else 0.5 * (ys[i + 1] + ys[j - 1]))
            i = j - 1
        i += 1
    return out


def segments(alpha: float, xi) -> list[Segment]:
    xi = check_xi(xi)
    alpha = check_alpha(alpha)
    cuts = [0.0] + critical_points(alpha, xi) + [1.0]
    segs = []
    for k in range(len(cuts) - 1):
        a, b = cuts[k], cuts[k + 1]
        segs.append(Segment(k, a, b, lambda1(0.5 * (a + b), alpha, xi) < 0))
    return segs


def _G(y, alpha, xi):
    # exact at the ends: G(0) = 0, G(1) = -(1 + alpha)
    if np.ndim(y) == 0 and y in (0.0, 1.0):
        return 0.0 if y == 0.0 else -(1.0 + alpha)
    return f1(y, 0.0, alpha, xi)


def segment_domain(seg: Segment, alpha: float, xi) -> tuple[float, float]:
    """Closed x-interval (clipped to [0, 1]) on which the segment holds a zero.

    Empty domains are returned with ``lo > hi``.
    """
    ga = _G(seg.a, alpha, xi) / (1.0 + alpha)
    gb = _G(seg.b, alpha, xi) / (1.0 + alpha)
    lo, hi = (-ga, -gb) if seg.decreasing else (-gb, -ga)
    return max(lo, 0.0), min(hi, 1.0)


# ---------------------------------------------------------------- roots at one x

@dataclass(frozen=True)
class Root:
    y: float
    kind: str
    lambda1: float


@dataclass
class RootProfile:
    x: float
    alpha: float
    xi: ChoiceVector
    roots: list[Root]

    @property
    def values(self) -> list[float]:
        return [rt.y for rt in self.roots]

    @property
    def kinds(self) -> list[str]:
        return [rt.kind for rt in self.roots]

    def stable(self) -> list[float]:
        """Possible limits: stable zeros and touchpoints."""
        return [rt.y for rt in self.roots if rt.kind != UNSTABLE]


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


def find_roots(x: float, alpha: float, xi) -> RootProfile:
    """All zeros of F1(.; x) in (0, 1), classified."""
    xi = check_xi(xi)
    alpha = check_alpha(alpha)
    x = check_unit(x, open_interval=True)
    F = lambda y: f1(y, x, alpha, xi)
    segs = segments(alpha, xi)
    found: list[Root] = []
    for seg in segs[1:]:
        c = seg.a
        if abs(F(c)) < TOUCH_TOL:
            left, right = F(max(c - TOUCH_RADIUS, 0.0)), F(min(c + TOUCH_RADIUS, 1.0))
            if _sign(left) == _sign(right) != 0:
                found.append(Root(c, TOUCHPOINT, lambda1(c, alpha, xi)))
    touch = [rt.y for rt in found]
    for seg in segs:
        fa, fb = F(seg.a), F(seg.b)
        if fa * fb >= 0:
            continue
        y = bisect(F, seg.a, seg.b)
        if any(abs(y - t) < TOUCH_RADIUS for t in touch):
            continue
        found.append(Root(y, seg.kind, lambda1(y, alpha, xi)))
    found.sort(key=lambda rt: rt.y)
    return RootProfile(x, alpha, xi, found)


# ---------------------------------------------------------------- root curves

@dataclass
class Branch:
    """Zero curve carried by one monotone segment, psi_{index}(x)."""

    index: int          # 1-based, ordered by y
    kind: str           # stable or unstable (touchpoints sit at the domain ends)
    y_range: tuple[float, float]
    domain: tuple[float, float]
    values: np.ndarray  # on the report grid, NaN outside the domain

    @property
    def empty(self) -> bool:
        return self.domain[0] > self.domain[1]

    def covers(self, x: float) -> bool:
        return self.domain[0] <= x <= self.domain[1]


def _segment_curve(seg: Segment, dom: tuple[float, float], alpha: float, xi, xs: np.ndarray) -> np.ndarray:
    out = np.full(xs.shape, np.nan)
    inside = (xs >= dom[0]) & (xs <= dom[1])
    if not inside.any():
        return out
    xin = xs[inside]
    lo = np.full(xin.shape, seg.a)
    hi = np.full(xin.shape, seg.b)
    out[inside] = _bisect_many(lambda y: np.asarray(f1(y, xin, alpha, xi)), lo, hi)
    return out


def root_curves(alpha: float, xi, x_grid=None) -> list[Branch]:
    """Continuous zero curves over ``x_grid``; exact domain ends from critical values."""
    xi = check_xi(xi)
    alpha = check_alpha(alpha)
    xs = default_x_grid() if x_grid is None else check_grid(x_grid)
    out = []
    for seg in segments(alpha, xi):
        dom = segment_domain(seg, alpha, xi)
        out.append(Branch(seg.index + 1, seg.kind, (seg.a, seg.b), dom,
                          _segment_curve(seg, dom, alpha, xi, xs)))
    return out


def default_x_grid(step: float = SCAN_STEP) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.arange(1, n) / n


def root_counts(branches: list[Branch]) -> np.ndarray:
    """Distinct zeros per grid point (branches meeting at a touchpoint count once)."""
    vals = np.stack([b.values for b in branches])
    counts = np.zeros(vals.shape[1], dtype=int)
    for col in range(vals.shape[1]):
        v = np.sort(vals[~np.isnan(vals[:, col]), col])
        if v.size:
            counts[col] = 1 + int(np.sum(np.diff(v) > TOUCH_RADIUS))
    return counts


# ---------------------------------------------------------------- 2-d stationary points

@dataclass(frozen=True)
class StationaryPoint:
    y: float
    d: float
    stable: bool
    eigenvalues: tuple[float, float]


def stationary_points(z: float, alpha: float, xi) -> list[StationaryPoint]:
    """Zeros ``(y_i, y_i - y_j)`` of the (Psi_n(z), D_n) drift with their stability."""
    prof = find_roots(z, alpha, xi)
    ys = prof.values
    pts = []
    for yi in ys:
        for yj in ys:
            if yj > yi:
                continue
            d = yi - yj
            l1 = lambda1(yi, alpha, prof.xi)
            l2 = lambda2(yi, d, alpha, prof.xi)
            pts.append(StationaryPoint(yi, d, bool(l1 < 0 and lambda1(yj, alpha, prof.xi) < 0), (l1, l2)))
    return pts


def mid3_delta_roots(psi: float, alpha: float) -> tuple[float, ...]:
    """Zeros in d of F2(psi, d) for the middle-of-three rule at a root psi of F1."""
    disc = -12.0 * psi * psi + 12.0 * psi - 7.0 - 8.0 * alpha
    if disc < 0:
        return (0.0,)
    c = 0.75 * (2.0 * psi - 1.0)
    w = 0.25 * sqrt(disc)
    return (0.0, c + w, c - w)


# ---------------------------------------------------------------- middle of three

def mid3_s(alpha: float, single_power: bool = False) -> float:
    """Half-width of the x-window with three zeros for the middle-of-three rule.

    ``sqrt(-(1+2a)^3 / (108 (1+a)^2))``.  ``single_power=True`` swaps in the
    denominator ``108 (1+a)`` for comparison; it does not match the root structure.
    """
    a = float(alpha)
    if not -1.0 < a < -0.5:
        raise ValidationError(f"s(alpha) is defined for -1 < alpha < -1/2, got {a!r}")
    denom = 108.0 * (1.0 + a) if single_power else 108.0 * (1.0 + a) ** 2
    return sqrt(-((1.0 + 2.0 * a) ** 3) / denom)


@dataclass(frozen=True)
class Mid3Phase:
    regime: str                                   # unique-limit | window-jump | full-support-jump
    interval: tuple[float, float] | None = None   # support of the jump location


def mid3_phase(alpha: float) -> Mid3Phase:
    a = check_alpha(alpha)
    if a >= -0.5:
        return Mid3Phase("unique-limit")
    if a > -0.875:
        s = mid3_s(a)
        return Mid3Phase("window-jump", (0.5 - s, 0.5 + s))
    return Mid3Phase("full-support-jump", (0.0, 1.0))


def multiroot_turning_equation(y, alpha: float, k: int, r: int):
    """``r C(r-1,k-1) y^(k-1) (1-y)^(r-k) - (2+alpha)``: zero where e_k^r's F1 turns."""
    y = np.asarray(y, dtype=float)
    v = r * comb(r - 1, k - 1) * y ** (k - 1) * (1.0 - y) ** (r - k) - (2.0 + alpha)
    return float(v) if v.ndim == 0 else v


# ---------------------------------------------------------------- second or sixth of seven

SEC6_ALPHA1 = (35.0 * sqrt(10.0) - 116.0) / 9.0
SEC6_DG_ARGMAX = 0.5 - sqrt(6.0 * sqrt(10.0) - 15.0) / 6.0


def sec6_extrema(alpha: float) -> tuple[float, float, float, float]:
    """eta_1 < eta_2 < eta_3 < eta_4: local min, max, min, max of F1 for alpha < alpha_1."""
    if not -1.0 < alpha < SEC6_ALPHA1:
        raise ValidationError("four extrema exist only for -1 < alpha < alpha_1")
    lam = lambda y: lambda1(y, alpha, SEC6_XI)
    m = SEC6_DG_ARGMAX
    brackets = [(0.0, m), (m, 0.5), (0.5, 1.0 - m), (1.0 - m, 1.0)]
    return tuple(bisect(lam, lo, hi) for lo, hi in brackets)


@dataclass(frozen=True)
class Sec6Thresholds:
    alpha1: float
    alpha2: float
    alpha3: float
    alpha4: float


def _golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Argmax of a unimodal function on [lo, hi]."""
    inv = (sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _alpha_crossing(phi: Callable[[float], float], lo: float, hi: float) -> float:
    return bisect(phi, lo, hi, tol=ALPHA_TOL)


def sec6_thresholds() -> Sec6Thresholds:
    """Phase-transition values of alpha for xi = (0, 1/2, 0, 0, 0, 1/2, 0)."""
    def G(y, a):
        return _G(y, a, SEC6_XI)

    def phi2(a):
        e = sec6_extrema(a)
        return G(e[1], a)

    def phi3(a):
        e = sec6_extrema(a)
        return G(e[3], a) - G(e[0], a)

    def phi4(a):
        e = sec6_extrema(a)
        return G(e[3], a)

    # below alpha1 the slope 2 + alpha drops under the peak of g', creating extra turns
    peak = _golden_max(lambda y: dg_dy(y, SEC6_XI), 0.0, 0.5)
    lo, hi = -1.0 + 1e-6, -0.6
    return Sec6Thresholds(
        alpha1=dg_dy(peak, SEC6_XI) - 2.0,
        alpha2=_alpha_crossing(phi2, lo, hi),
        alpha3=_alpha_crossing(phi3, lo, hi),
        alpha4=_alpha_crossing(phi4, lo, hi),
    )


# ---------------------------------------------------------------- condensation prediction

@dataclass
class JumpPath:
    branches: list[int]                        # 1-based stable branch indices visited
    intervals: list[tuple[float, float]]       # feasible x-range of each jump

    @property
    def jumps(self) -> int:
        return len(self.intervals)


@dataclass
class PhaseReport:
    alpha: float
    xi: ChoiceVector
    x_grid: np.ndarray
    branches: list[Branch]
    root_counts: np.ndarray
    stable_counts: np.ndarray
    paths: list[JumpPath]
    min_condensation: int
    max_condensation: int
    constants: dict = field(default_factory=dict)

    def branch(self, index: int) -> Branch:
        return self.branches[index - 1]

    @property
    def stable_branches(self) -> list[Branch]:
        return [b for b in self.branches if b.kind == STABLE and not b.empty]

    def to_dict(self) -> dict:
        def num(v):
            return None if isinstance(v, float) and math.isnan(v) else float(v)
        return {
            "alpha": self.alpha,
            "xi": list(self.xi.weights),
            "x": [float(v) for v in self.x_grid],
            "root_counts": [int(v) for v in self.root_counts],
            "stable_counts": [int(v) for v in self.stable_counts],
            "branches": [
                {
                    "index": b.index, "kind": b.kind,
                    "y_range": list(b.y_range),
                    "domain": None if b.empty else list(b.domain),
                    "values": [num(v) for v in b.values],
                }
                for b in self.branches
            ],
            "condensation": {
                "min": self.min_condensation,
                "max": self.max_condensation,
                "paths": [
                    {"branches": p.branches, "jump_intervals": [list(iv) for iv in p.intervals]}
                    for p in self.paths
                ],
            },
            "constants": self.constants,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _jump_paths(stable: list[Branch]) -> list[JumpPath]:
    """Feasible ways for a non-decreasing Psi to climb through the stable branches."""
    # Psi(0) = 0 is right-continuous, so when the zero curve through y = 0 is
    # stable Psi must start on it; otherwise the mass at 0 is forced.
    starts = [b for b in stable if b.y_range[0] == 0.0] or [b for b in stable if b.domain[0] <= 0.0]
    ends = [b for b in stable if b.y_range[1] == 1.0] or [b for b in stable if b.domain[1] >= 1.0]
    paths = []
    for size in range(1, len(stable) + 1):
        for seq in combinations(stable, size):
            if seq[0] not in starts or seq[-1] not in ends:
                continue
            x_prev = 0.0
            intervals = []
            ok = True
            for prev, nxt in zip(seq, seq[1:]):
                x_jump = max(x_prev, nxt.domain[0])
                if x_jump > min(prev.domain[1], nxt.domain[1]):
                    ok = False
                    break
                intervals.append((max(prev.domain[0], nxt.domain[0]), min(prev.domain[1], nxt.domain[1])))
                x_prev = x_jump
            if not ok:
                continue
            # Psi(0) = 0 and Psi(1) = 1: leaving the endpoint branches is a jump too
            if seq[0].y_range[0] > 0.0:
                intervals.insert(0, (0.0, 0.0))
            if seq[-1].y_range[1] < 1.0:
                intervals.append((1.0, 1.0))
            paths.append(JumpPath([b.index for b in seq], intervals))
    return paths


def _special_constants(alpha: float, xi: ChoiceVector, branches: list[Branch]) -> dict:
    out: dict = {}
    if xi == MID3_XI:
        out["phase"] = asdict(mid3_phase(alpha))
        if -1.0 < alpha < -0.5:
            s = mid3_s(alpha)
            out["s"] = s
            out["three_root_window"] = [0.5 - s, 0.5 + s]
    elif xi == SEC6_XI:
        th = sec6_thresholds()
        out["thresholds"] = asdict(th)
        stable = {b.index: b for b in branches if b.kind == STABLE and not b.empty}
        if len(stable) == 3:
            b1, b3, b5 = (stable[i] for i in sorted(stable))
            if b3.domain[0] > 0.0:
                out["beta1"] = b3.domain[0]
                out["beta2"] = b1.domain[1]
            else:
                out["beta"] = b5.domain[0]
    if xi.basis_rank is not None:
        out["turning_points"] = critical_points(alpha, xi)
    return out


def condensation_predict(alpha: float, xi, x_grid=None) -> PhaseReport:
    """Root structure and the number of condensation points it forces or allows."""
    xi = check_xi(xi)
    alpha = check_alpha(alpha)
    xs = default_x_grid() if x_grid is None else check_grid(x_grid, open_interval=True)
    branches = root_curves(alpha, xi, xs)
    stable = [b for b in branches if b.kind == STABLE and not b.empty]
    paths = _jump_paths(stable)
    if not paths:
        raise RuntimeError("no admissible path through the stable branches")
    jumps = [p.jumps for p in paths]
    lo, hi = min(jumps), max(jumps)
    if xi.basis_rank is not None:
        # a single-rank rule has at most two stable branches
        lo, hi = min(lo, 1), min(hi, 1)
    stable_only = [b for b in branches if b.kind == STABLE]
    stable_counts = np.sum([~np.isnan(b.values) for b in stable_only], axis=0) if stable_only else np.zeros(len(xs), int)
    return PhaseReport(
        alpha=alpha, xi=xi, x_grid=xs, branches=branches,
        root_counts=root_counts(branches), stable_counts=np.asarray(stable_counts, dtype=int),
        paths=paths, min_condensation=lo, max_condensation=hi,
        constants=_special_constants(alpha, xi, branches),
    )


__all__ = [
    "Branch", "ConvergenceError", "JumpPath", "MID3_XI", "Mid3Phase", "PhaseReport", "Root",
    "RootProfile", "SEC6_ALPHA1", "SEC6_XI", "Sec6Thresholds", "Segment", "StationaryPoint",
    "bisect", "condensation_predict", "critical_points", "default_x_grid", "find_roots",
    "mid3_delta_roots", "mid3_phase", "mid3_s", "multiroot_turning_equation", "root_counts",
    "root_curves", "sec6_extrema", "sec6_thresholds", "segment_domain", "segments",
    "stationary_points",
]
