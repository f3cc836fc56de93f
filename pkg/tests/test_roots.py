import json
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pachoice import ChoiceVector, ValidationError
from pachoice.kernels import f1, f2, lambda1
from pachoice.roots import (MID3_XI, SEC6_ALPHA1, SEC6_XI, STABLE, TOUCHPOINT, UNSTABLE, bisect,
                            condensation_predict, critical_points, find_roots, mid3_delta_roots, mid3_phase,
                            mid3_s, multiroot_turning_equation, root_curves, sec6_extrema, sec6_thresholds,
                            stationary_points)
from oracles import mid3_window_lower

A = -0.75
S = sqrt(6) / 18


def test_bisect_basic():
    assert bisect(lambda y: y * y - 2, 0, 2) == pytest.approx(sqrt(2), abs=1e-12)
    with pytest.raises(ValueError):
        bisect(lambda y: y * y + 1, 0, 1)


def test_mid3_roots_at_half():
    prof = find_roots(0.5, A, MID3_XI)
    expected = [(2 - sqrt(2)) / 4, 0.5, (2 + sqrt(2)) / 4]
    assert np.max(np.abs(np.array(prof.values) - expected)) < 1e-10
    assert prof.kinds == [STABLE, UNSTABLE, STABLE]


def test_mid3_touchpoints_at_window_edges():
    lo = find_roots(0.5 - S, A, MID3_XI)
    assert TOUCHPOINT in lo.kinds
    t = lo.roots[lo.kinds.index(TOUCHPOINT)].y
    assert t == pytest.approx(0.5 + sqrt(1 / 24), abs=1e-8)
    hi = find_roots(0.5 + S, A, MID3_XI)
    t = hi.roots[hi.kinds.index(TOUCHPOINT)].y
    assert t == pytest.approx(0.5 - sqrt(1 / 24), abs=1e-8)


def test_mid3_single_root_outside_window():
    for x in (0.1, 0.3, 0.7, 0.9):
        prof = find_roots(x, A, MID3_XI)
        assert len(prof.values) == 1 and prof.kinds == [STABLE]
        assert abs(f1(prof.values[0], x, A, MID3_XI)) < 1e-12


def test_window_endpoints_from_branch_domains():
    rep = condensation_predict(A, MID3_XI)
    b1, b3 = rep.stable_branches
    assert b1.domain[1] == pytest.approx((9 + sqrt(6)) / 18, abs=1e-8)
    assert b3.domain[0] == pytest.approx((9 - sqrt(6)) / 18, abs=1e-8)
    assert rep.constants["three_root_window"] == pytest.approx([(9 - sqrt(6)) / 18, (9 + sqrt(6)) / 18], abs=1e-12)
    assert rep.min_condensation == rep.max_condensation == 1
    assert rep.paths[0].intervals[0] == pytest.approx((b3.domain[0], b1.domain[1]))


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(-0.87, -0.51))
def test_mid3_s_against_discriminant_oracle(alpha):
    assert 0.5 - mid3_s(alpha) == pytest.approx(mid3_window_lower(alpha), abs=1e-8)


def test_mid3_s_literal_denominator_differs():
    assert mid3_s(A, single_power=True) != pytest.approx(mid3_s(A))
    with pytest.raises(ValidationError):
        mid3_s(-0.4)


def test_mid3_phases():
    assert mid3_phase(0.0).regime == "unique-limit"
    assert mid3_phase(-0.5).regime == "unique-limit"
    assert mid3_phase(A).interval == pytest.approx((0.5 - S, 0.5 + S))
    assert mid3_phase(-0.9).regime == "full-support-jump"


def test_stationary_point_and_eigenvalues():
    pts = stationary_points(0.5, A, MID3_XI)
    y, d = (2 + sqrt(2)) / 4, sqrt(2) / 2
    hit = [p for p in pts if abs(p.y - y) < 1e-10 and abs(p.d - d) < 1e-10]
    assert len(hit) == 1 and hit[0].stable
    assert abs(f1(y, 0.5, A, MID3_XI)) < 1e-10 and abs(f2(y, d, A, MID3_XI)) < 1e-10
    assert all(ev < 0 for ev in hit[0].eigenvalues)
    # pairing with the unstable middle zero is not stable
    assert not [p for p in pts if abs(p.d - (y - 0.5)) < 1e-10][0].stable


def test_delta_formula_reproduces_d_roots():
    for y in find_roots(0.5, A, MID3_XI).values:
        for d in mid3_delta_roots(y, A):
            if 0 <= d <= y:
                assert abs(f2(y, d, A, MID3_XI)) < 1e-10


def test_root_curves_continuous_and_monotone():
    rep = condensation_predict(A, MID3_XI)
    for b in rep.branches:
        v = b.values[~np.isnan(b.values)]
        steps = np.diff(v)
        assert np.max(np.abs(steps)) < 0.05
        assert np.all(steps > 0) if b.kind == STABLE else np.all(steps < 0)
    assert np.all(np.isin(rep.root_counts, [1, 2, 3]))


def test_unique_root_for_alpha_zero():
    rep = condensation_predict(0.0, MID3_XI)
    assert len(rep.branches) == 1
    assert rep.min_condensation == rep.max_condensation == 0
    assert np.all(rep.root_counts == 1)


def test_smaller_of_two_capped_at_one_point():
    rep = condensation_predict(-0.5, ChoiceVector.basis(1, 2))
    assert rep.max_condensation == 1


def test_turning_equation_zeros_are_critical_points():
    for y in critical_points(A, MID3_XI):
        assert abs(multiroot_turning_equation(y, A, 2, 3)) < 1e-10
        assert abs(lambda1(y, A, MID3_XI)) < 1e-10


def test_sec6_thresholds():
    t = sec6_thresholds()
    assert t.alpha1 == pytest.approx((35 * sqrt(10) - 116) / 9, abs=1e-9)
    assert t.alpha2 == pytest.approx(-0.87562, abs=5e-5)
    assert t.alpha3 == pytest.approx(-0.93144, abs=5e-5)
    assert t.alpha4 == pytest.approx(-0.96842, abs=5e-5)
    assert SEC6_ALPHA1 == pytest.approx(t.alpha1, abs=1e-12)


def test_sec6_extrema_symmetric():
    e = sec6_extrema(-0.85)
    assert e[0] + e[3] == pytest.approx(1, abs=1e-10)
    assert e[1] + e[2] == pytest.approx(1, abs=1e-10)
    with pytest.raises(ValidationError):
        sec6_extrema(-0.5)


def test_sec6_two_point_prediction():
    rep = condensation_predict(-0.85, SEC6_XI)
    c = rep.constants
    assert c["beta1"] == pytest.approx(0.0492, abs=5e-4)
    assert c["beta2"] == pytest.approx(0.2721, abs=5e-4)
    assert rep.min_condensation == rep.max_condensation == 2
    (path,) = rep.paths
    assert path.branches == [1, 3, 5]
    assert path.intervals[0] == pytest.approx((c["beta1"], c["beta2"]), abs=1e-9)
    assert path.intervals[1] == pytest.approx((1 - c["beta2"], 1 - c["beta1"]), abs=1e-9)


def test_sec6_one_or_two_points():
    rep = condensation_predict(-0.95, SEC6_XI)
    assert rep.constants["beta"] == pytest.approx(0.3420, abs=5e-4)
    assert (rep.min_condensation, rep.max_condensation) == (1, 2)
    assert sorted(p.branches for p in rep.paths) == [[1, 3, 5], [1, 5]]


def test_report_json_round_trip():
    rep = condensation_predict(A, MID3_XI, x_grid=np.linspace(0.01, 0.99, 99))
    d = json.loads(rep.to_json())
    assert d["condensation"]["min"] == 1
    assert len(d["branches"]) == 3 and len(d["x"]) == 99
    assert d["branches"][1]["kind"] == UNSTABLE


def test_curves_match_pointwise_roots():
    xs = np.array([0.2, 0.45, 0.5, 0.62, 0.8])
    branches = root_curves(-0.85, SEC6_XI, xs)
    for i, x in enumerate(xs):
        on_curves = sorted(b.values[i] for b in branches if not np.isnan(b.values[i]))
        assert np.allclose(on_curves, find_roots(x, -0.85, SEC6_XI).values, atol=1e-10)
