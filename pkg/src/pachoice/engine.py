"""Growth simulator for preferential attachment with location-based choice.

At every step a new vertex with a Uniform[0,1] location joins the tree.  It
draws ``r`` existing vertices with replacement, each with probability
proportional to degree + alpha, ranks them by location (ties by draw order)
and attaches to the rank-k draw with probability ``xi[k]``.

Randomness is consumed in a fixed layout so that the Python-level
:func:`step` and the compiled loop behind :func:`run` produce the same
graph from the same generator: per step one row of ``r + 2`` uniforms,
``[location, draw_1 .. draw_r, rank]``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _fenwick
from ._validation import ChoiceVector, check_unit, check_xi
from .config import ModelConfig
from .trajectory import Trajectory

RNG_ALGORITHM = "numpy.random.PCG64"
_CHUNK_ROWS = 1 << 16


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


class GraphState:
    """Evolving tree: locations, degrees, parent pointers and the weight index."""

    def __init__(self, alpha: float, locations: Sequence[float], capacity: int | None = None):
        n0 = len(locations)
        capacity = max(int(capacity or 0), n0)
        self.alpha = float(alpha)
        self.n0 = n0
        self.loc = np.zeros(capacity)
        self.deg = np.zeros(capacity, dtype=np.int64)
        self.parent = np.full(capacity, -1, dtype=np.int64)
        self.loc[:n0] = locations
        # initial tree is the path 0 - 1 - ... - (n0-1)
        self.deg[:n0] = 2
        self.deg[0] = 1
        self.deg[n0 - 1] = 1
        self.parent[1:n0] = np.arange(n0 - 1)
        self.tree = np.zeros(capacity + 1, dtype=np.int64)
        _fenwick.fenwick_build(self.tree, self.deg, n0)
        top = int(np.argmax(self.deg[:n0]))
        # [count, max_id, max_degree]
        self.counters = np.array([n0, top, self.deg[top]], dtype=np.int64)

    @property
    def count(self) -> int:
        return int(self.counters[0])

    @property
    def n(self) -> int:
        """Number of growth steps taken."""
        return self.count - self.n0

    @property
    def capacity(self) -> int:
        return self.loc.shape[0]

    @property
    def locations(self) -> np.ndarray:
        return self.loc[:self.count]

    @property
    def degrees(self) -> np.ndarray:
        return self.deg[:self.count]

    @property
    def edge_count(self) -> int:
        return int(self.degrees.sum()) // 2

    @property
    def total_weight(self) -> float:
        """``(n + n0 - 1)(2 + alpha) + alpha``, i.e. the sum of degree + alpha."""
        c = self.count
        return 2.0 * (c - 1) + self.alpha * c

    @property
    def max_degree_vertex(self) -> tuple[int, int]:
        return int(self.counters[1]), int(self.counters[2])

    def weights(self) -> np.ndarray:
        return self.degrees + self.alpha

    def edges(self) -> list[tuple[int, int]]:
        return [(int(self.parent[v]), v) for v in range(1, self.count) if self.parent[v] >= 0]

    def reserve(self, capacity: int) -> None:
        if capacity <= self.capacity:
            return
        c = self.count
        for name, fill in (("loc", 0.0), ("deg", 0), ("parent", -1)):
            old = getattr(self, name)
            new = np.full(capacity, fill, dtype=old.dtype)
            new[:c] = old[:c]
            setattr(self, name, new)
        self.tree = np.zeros(capacity + 1, dtype=np.int64)
        _fenwick.fenwick_build(self.tree, self.deg, c)


def init(config: ModelConfig, rng: np.random.Generator | None = None, capacity: int | None = None) -> GraphState:
    """Path graph on ``n0`` vertices with explicit or freshly drawn locations."""
    if isinstance(config.initial_locations, str):
        rng = make_rng(config.seed) if rng is None else rng
        while True:
            locs = rng.random(config.n0)
            if len(np.unique(locs)) == config.n0 and np.all(locs > 0):
                break
    else:
        locs = np.asarray(config.initial_locations, dtype=float)
    return GraphState(config.alpha, locs, capacity or config.n0 + config.steps)


def sample_vertex(state: GraphState, rng: np.random.Generator, u: float | None = None) -> int:
    """Draw a vertex with probability (deg + alpha) / total weight."""
    u = rng.random() if u is None else u
    return int(_fenwick.fenwick_find(state.tree, state.count, state.alpha, u * state.total_weight))


def _rank_from_uniform(xi: ChoiceVector, u: float) -> int:
    c = xi.cumulative()
    for k in range(xi.r):
        if c[k + 1] > u:
            return k
    return max(k for k, w in enumerate(xi.weights) if w > 0)


def select_rank(samples: Sequence[tuple[int, float, int]], xi, rng: np.random.Generator | None = None,
                u: float | None = None) -> int:
    """Pick among ``(vertex, location, draw_index)`` samples by location rank.

    Sorted by location, ties by draw index; rank k (0-based) is taken with
    probability ``xi[k]``.
    """
    xi = check_xi(xi)
    if len(samples) != xi.r:
        raise ValueError(f"expected {xi.r} samples, got {len(samples)}")
    ordered = sorted(samples, key=lambda s: (s[1], s[2]))
    u = rng.random() if u is None else u
    return int(ordered[_rank_from_uniform(xi, u)][0])


@dataclass(frozen=True)
class StepRecord:
    vertex: int
    location: float
    target: int


def step(state: GraphState, config: ModelConfig, rng: np.random.Generator) -> StepRecord:
    """One growth step, driven from Python."""
    r = config.r
    u = rng.random(r + 2)
    if state.count == state.capacity:
        state.reserve(2 * state.capacity)
    draws = [(sample_vertex(state, rng, u[1 + s]), s) for s in range(r)]
    samples = [(v, float(state.loc[v]), s) for v, s in draws]
    target = select_rank(samples, config.xi, u=u[r + 1])
    new = state.count
    state.loc[new] = u[0]
    state.deg[new] = 1
    state.parent[new] = target
    state.deg[target] += 1
    _fenwick.fenwick_add(state.tree, new, 1)
    _fenwick.fenwick_add(state.tree, target, 1)
    state.counters[0] += 1
    if state.deg[target] > state.counters[2]:
        state.counters[1] = target
        state.counters[2] = state.deg[target]
    return StepRecord(new, float(u[0]), target)


def advance(state: GraphState, config: ModelConfig, rng: np.random.Generator, steps: int) -> None:
    """Run ``steps`` growth steps through the compiled loop."""
    state.reserve(state.count + steps)
    cum = config.xi.cumulative()
    last = max(k for k, w in enumerate(config.xi.weights) if w > 0)
    left = steps
    while left > 0:
        m = min(left, _CHUNK_ROWS)
        u = rng.random((m, config.r + 2))
        _fenwick.grow(state.loc, state.deg, state.tree, state.parent, state.counters,
                      state.alpha, cum, last, u)
        left -= m


def psi(state: GraphState, x: float) -> float:
    """Normalised weight of vertices located at or below ``x``."""
    x = check_unit(x)
    mask = state.locations <= x
    num = int(state.degrees[mask].sum()) + state.alpha * int(mask.sum())
    return num / state.total_weight


def psi_grid(state: GraphState, grid: np.ndarray) -> np.ndarray:
    """:func:`psi` on a sorted grid in one pass; exact integer bin sums."""
    idx = np.searchsorted(grid, state.locations, side="left")
    m = len(grid) + 1
    degsum = np.bincount(idx, weights=state.degrees, minlength=m).astype(np.int64)
    cnt = np.bincount(idx, minlength=m).astype(np.int64)
    num = np.cumsum(degsum)[:-1] + state.alpha * np.cumsum(cnt)[:-1]
    return num / state.total_weight


def run(config: ModelConfig, return_state: bool = False):
    """Simulate ``config.steps`` steps, recording each checkpoint.

    With ``return_state`` the final :class:`GraphState` is returned as well.
    """
    t0 = time.perf_counter()
    rng = make_rng(config.seed)
    state = init(config, rng)
    initial = [float(v) for v in state.locations]
    tracked = np.asarray(config.tracked, dtype=np.int64)
    cps = list(config.checkpoints)
    rows = len(cps)
    n_arr = np.zeros(rows, dtype=np.int64)
    psi_arr = np.zeros((rows, len(config.grid)))
    d_arr = np.zeros((rows, len(tracked)))
    max_id = np.zeros(rows, dtype=np.int64)
    max_deg = np.zeros(rows, dtype=np.int64)
    seen: dict[int, float] = {}
    done = 0
    for i, cp in enumerate(cps):
        advance(state, config, rng, cp - done)
        done = cp
        n_arr[i] = state.n
        psi_arr[i] = psi_grid(state, config.grid)
        d_arr[i] = (state.deg[tracked] + state.alpha) / state.total_weight
        max_id[i], max_deg[i] = state.max_degree_vertex
        seen.setdefault(int(max_id[i]), float(state.loc[max_id[i]]))
    advance(state, config, rng, config.steps - done)
    traj = Trajectory(
        config=config, n=n_arr, psi=psi_arr, D=d_arr, max_id=max_id, max_degree=max_deg,
        rng_algorithm=RNG_ALGORITHM, initial_locations=initial, locations=seen,
        wall_time=time.perf_counter() - t0,
    )
    return (traj, state) if return_state else traj


__all__ = [
    "GraphState", "RNG_ALGORITHM", "StepRecord", "advance", "init", "make_rng", "psi",
    "psi_grid", "run", "sample_vertex", "select_rank", "step",
]
