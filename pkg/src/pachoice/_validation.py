"""Input validation helpers shared by the library, the estimators and the CLI."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

XI_SUM_TOL = 1e-12
MAX_R = 60

_RANK_SHORTHAND = re.compile(r"^\s*rank\s+(\d+)\s+of\s+(\d+)\s*$", re.IGNORECASE)


class ValidationError(ValueError):
    """Raised when a parameter violates the model's constraints."""


@dataclass(frozen=True)
class ChoiceVector:
    """Probabilities over the ``r`` rank positions of a sample.

    ``weights[k]`` is the chance of attaching to the sampled vertex with the
    (k+1)-th smallest location.
    """

    weights: tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "weights", w)
        if len(w) < 2:
            raise ValidationError(f"choice vector needs r >= 2 entries, got {len(w)}")
        if len(w) > MAX_R:
            raise ValidationError(f"r={len(w)} exceeds the supported maximum {MAX_R}")
        for k, v in enumerate(w):
            if not (0.0 <= v <= 1.0) or math.isnan(v):
                raise ValidationError(f"xi[{k}]={v!r} is outside [0, 1]")
        total = math.fsum(w)
        if abs(total - 1.0) > XI_SUM_TOL:
            raise ValidationError(f"xi must sum to 1, got {total!r}")

    @classmethod
    def basis(cls, k: int, r: int) -> "ChoiceVector":
        """Deterministic choice of rank ``k`` (1-based) out of ``r``."""
        if not 1 <= k <= r:
            raise ValidationError(f"rank k={k} must lie in 1..{r}")
        w = [0.0] * r
        w[k - 1] = 1.0
        return cls(tuple(w))

    @property
    def r(self) -> int:
        return len(self.weights)

    @property
    def basis_rank(self) -> int | None:
        """1-based rank if this is a basis vector, else ``None``."""
        nz = [k for k, v in enumerate(self.weights) if v > 0]
        if len(nz) == 1 and self.weights[nz[0]] == 1.0:
            return nz[0] + 1
        return None

    def cumulative(self) -> np.ndarray:
        """``c[m] = sum(weights[:m])`` for m = 0..r."""
        c = np.zeros(self.r + 1)
        acc = 0.0
        for m, v in enumerate(self.weights, start=1):
            acc += v
            c[m] = acc
        return c

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)

    def __str__(self):
        k = self.basis_rank
        if k is not None:
            return f"rank {k} of {self.r}"
        return "(" + ", ".join(repr(v) for v in self.weights) + ")"


def check_xi(xi, r: int | None = None) -> ChoiceVector:
    """Coerce ``xi`` (vector, ``ChoiceVector`` or ``"rank k of r"``) to a ``ChoiceVector``."""
    if isinstance(xi, ChoiceVector):
        cv = xi
    elif isinstance(xi, str):
        m = _RANK_SHORTHAND.match(xi)
        if m:
            cv = ChoiceVector.basis(int(m.group(1)), int(m.group(2)))
        else:
            try:
                parts = [float(p) for p in xi.strip().strip("()[]").split(",") if p.strip()]
            except ValueError:
                raise ValidationError(f"cannot parse choice vector {xi!r}") from None
            cv = ChoiceVector(tuple(parts))
    else:
        cv = ChoiceVector(tuple(np.asarray(xi, dtype=float).ravel()))
    if r is not None and cv.r != r:
        raise ValidationError(f"xi has {cv.r} entries but r={r}")
    return cv


def check_xi_rows(xi) -> np.ndarray:
    """Validate an ``(n, r)`` array with one choice vector per row."""
    w = np.asarray(xi, dtype=float)
    if w.ndim != 2:
        raise ValidationError(f"expected a 2-d array of choice vectors, got shape {w.shape}")
    if not 2 <= w.shape[1] <= MAX_R:
        raise ValidationError(f"choice vectors need 2..{MAX_R} entries, got {w.shape[1]}")
    if np.any(~((w >= 0.0) & (w <= 1.0))):
        raise ValidationError("choice vector entries must lie in [0, 1]")
    bad = np.abs(w.sum(axis=1) - 1.0) > XI_SUM_TOL
    if bad.any():
        raise ValidationError(f"choice vector row {int(np.argmax(bad))} does not sum to 1")
    return w


def check_alpha(alpha) -> float:
    a = float(alpha)
    if not a > -1.0 or math.isnan(a):
        raise ValidationError(f"alpha must exceed -1, got {a!r}")
    return a


def check_unit(value, name: str = "x", *, open_interval: bool = False) -> float:
    v = float(value)
    ok = 0.0 < v < 1.0 if open_interval else 0.0 <= v <= 1.0
    if not ok:
        bounds = "(0, 1)" if open_interval else "[0, 1]"
        raise ValidationError(f"{name}={v!r} must lie in {bounds}")
    return v


def check_grid(grid: Sequence[float] | np.ndarray, *, open_interval: bool = False) -> np.ndarray:
    g = np.asarray(grid, dtype=float).ravel()
    if g.size == 0:
        raise ValidationError("grid is empty")
    if np.any(np.diff(g) <= 0):
        raise ValidationError("grid must be strictly increasing")
    lo_ok = g[0] > 0 if open_interval else g[0] >= 0
    hi_ok = g[-1] < 1 if open_interval else g[-1] <= 1
    if not (lo_ok and hi_ok):
        raise ValidationError("grid points must lie in " + ("(0, 1)" if open_interval else "[0, 1]"))
    return g
