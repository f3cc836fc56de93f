"""Closed-form selection kernels and drift functions.

All functions accept scalars or numpy arrays for the real arguments and
broadcast them; a scalar in gives a Python float out.  The choice vector is
a :class:`~pachoice._validation.ChoiceVector` (or anything ``check_xi``
accepts), or an ``(n, r)`` array holding one choice vector per row, which
broadcasts against the real arguments like a length-n axis.

Notation: ``y`` is the weighted mass at locations <= x, ``d`` the share of a
tracked vertex at location z (``0 <= d <= y``), ``alpha`` the additive
attachment constant.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from ._validation import ChoiceVector, check_xi, check_xi_rows


@lru_cache(maxsize=256)
def _g_terms(weights: tuple[float, ...]) -> tuple[tuple[int, float], ...]:
    # (i, c_i C(r, i)) for the nonzero cumulative weights
    r = len(weights)
    c = ChoiceVector(weights).cumulative()
    return tuple((i, float(c[i]) * comb(r, i)) for i in range(1, r + 1) if c[i] != 0.0)


@lru_cache(maxsize=256)
def _h_terms(weights: tuple[float, ...]) -> tuple[tuple[int, int, float], ...]:
    # (i, j, (c_i - c_j) C(r, i) C(i, j)); rank l picks the tracked vertex iff j < l <= i
    r = len(weights)
    c = ChoiceVector(weights).cumulative()
    return tuple((i, j, float(c[i] - c[j]) * comb(r, i) * comb(i, j))
                 for i in range(1, r + 1) for j in range(i) if c[i] != c[j])


@lru_cache(maxsize=256)
def _dg_terms(weights: tuple[float, ...]) -> tuple[tuple[int, float], ...]:
    r = len(weights)
    return tuple((l, w * r * comb(r - 1, l - 1)) for l, w in enumerate(weights, start=1) if w != 0.0)


@dataclass(frozen=True)
class _Terms:
    r: int
    g: tuple
    h: tuple
    dg: tuple


def _terms(xi) -> _Terms:
    if isinstance(xi, np.ndarray) and xi.ndim == 2:
        w = check_xi_rows(xi)
        r = w.shape[1]
        c = np.concatenate([np.zeros((w.shape[0], 1)), np.cumsum(w, axis=1)], axis=1)
        return _Terms(
            r,
            tuple((i, c[:, i] * comb(r, i)) for i in range(1, r + 1)),
            tuple((i, j, (c[:, i] - c[:, j]) * (comb(r, i) * comb(i, j))) for i in range(1, r + 1) for j in range(i)),
            tuple((l, w[:, l - 1] * (r * comb(r - 1, l - 1))) for l in range(1, r + 1)),
        )
    cv = check_xi(xi)
    return _Terms(cv.r, _g_terms(cv.weights), _h_terms(cv.weights), _dg_terms(cv.weights))


def _arg(v):
    """Python float for scalars (much cheaper than 0-d arrays), float array otherwise."""
    if np.ndim(v) == 0:
        return float(v)
    return np.asarray(v, dtype=float)


def _pair(y, d):
    if np.ndim(y) == 0 and np.ndim(d) == 0:
        return float(y), float(d)
    return np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(d, dtype=float))


def _powers(base, top: int) -> list:
    # repeated multiplication, so scalar and array inputs round identically
    out = [base * 0.0 + 1.0]
    for _ in range(top):
        out.append(out[-1] * base)
    return out


def g(y, xi) -> float | np.ndarray:
    """Probability that the attached vertex has location <= x when Psi_n(x) = y.

    Mixture over ranks of binomial upper tails:
    ``sum_l xi_l * P(Bin(r, y) >= l)``.
    """
    t = _terms(xi)
    y = _arg(y)
    r = t.r
    ypow = _powers(y, r)
    qpow = _powers(1.0 - y, r)
    total = y * 0.0
    for i, w in t.g:
        total = total + w * ypow[i] * qpow[r - i]
    return total


def _check_yd(y, d):
    if isinstance(y, float):
        bad_order, bad_sign = d > y, d < 0
    else:
        bad_order, bad_sign = np.any(d > y), np.any(d < 0)
    if bad_order:
        raise ValueError("h requires d <= y")
    if bad_sign:
        raise ValueError("h requires d >= 0")


def h(y, d, xi) -> float | np.ndarray:
    """Probability of attaching to the tracked vertex.

    ``y`` is the mass at locations <= z (tracked vertex included), ``d`` the
    tracked vertex's own share.
    """
    t = _terms(xi)
    y, d = _pair(y, d)
    _check_yd(y, d)
    r = t.r
    bpow = _powers(y - d, r)
    dpow = _powers(d, r)
    qpow = _powers(1.0 - y, r)
    total = y * 0.0
    for i, j, w in t.h:
        total = total + w * bpow[j] * dpow[i - j] * qpow[r - i]
    return total


def f1(y, x, alpha, xi) -> float | np.ndarray:
    """Drift of Psi_n(x): ``g(y) - (2+alpha) y + x (1+alpha)``."""
    y = _arg(y)
    return g(y, xi) - (2.0 + alpha) * y + _arg(x) * (1.0 + alpha)


def f2(y, d, alpha, xi) -> float | np.ndarray:
    """Drift of the tracked vertex share: ``h(y, d) - (2+alpha) d``."""
    y, d = _pair(y, d)
    return h(y, d, xi) - (2.0 + alpha) * d


def dg_dy(y, xi) -> float | np.ndarray:
    """Derivative of ``g``: ``sum_l xi_l r C(r-1,l-1) y^(l-1) (1-y)^(r-l)``."""
    t = _terms(xi)
    y = _arg(y)
    r = t.r
    ypow = _powers(y, r)
    qpow = _powers(1.0 - y, r)
    total = y * 0.0
    for l, w in t.dg:
        total = total + w * ypow[l - 1] * qpow[r - l]
    return total


def lambda1(y, alpha, xi) -> float | np.ndarray:
    """First Jacobian eigenvalue, dF1/dy. Does not depend on x."""
    return dg_dy(y, xi) - (2.0 + alpha)


def dh_dd(y, d, xi) -> float | np.ndarray:
    """Partial derivative of ``h`` in ``d`` at fixed ``y``, term by term."""
    t = _terms(xi)
    y, d = _pair(y, d)
    _check_yd(y, d)
    r = t.r
    bpow = _powers(y - d, r)
    dpow = _powers(d, r)
    qpow = _powers(1.0 - y, r)
    total = y * 0.0
    for i, j, w in t.h:
        # d/dd [(y-d)^j d^(i-j)] = (i-j)(y-d)^j d^(i-j-1) - j (y-d)^(j-1) d^(i-j)
        term = (i - j) * bpow[j] * dpow[i - j - 1]
        if j > 0:
            term = term - j * bpow[j - 1] * dpow[i - j]
        total = total + w * term * qpow[r - i]
    return total


def lambda2(y, d, alpha, xi) -> float | np.ndarray:
    """Second Jacobian eigenvalue, dF2/dd. Equals ``lambda1(y - d)``."""
    return dh_dd(y, d, xi) - (2.0 + alpha)


@dataclass(frozen=True)
class DriftEvaluation:
    y: float
    x: float
    d: float
    alpha: float
    g: float
    h: float
    f1: float
    f2: float
    lambda1: float
    lambda2: float


def evaluate(y: float, x: float, d: float, alpha: float, xi) -> DriftEvaluation:
    """Evaluate every kernel at one point."""
    xi = check_xi(xi)
    return DriftEvaluation(
        y=float(y), x=float(x), d=float(d), alpha=float(alpha),
        g=g(y, xi), h=h(y, d, xi),
        f1=f1(y, x, alpha, xi), f2=f2(y, d, alpha, xi),
        lambda1=lambda1(y, alpha, xi), lambda2=lambda2(y, d, alpha, xi),
    )


__all__ = [
    "ChoiceVector", "DriftEvaluation", "dg_dy", "dh_dd", "evaluate",
    "f1", "f2", "g", "h", "lambda1", "lambda2",
]
