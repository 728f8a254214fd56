import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from coaxwave.errors import BelowTurningPoint, DomainError, OverflowRegime, UnsupportedIndex
from coaxwave.specialfn import (ProductKind, ZeroIndex, ZeroKind, airy_zero, cyl_arrays,
                                eval_airy, eval_cyl, gap_constant, j_zero, jp_zero,
                                merged_bessel_zeros, oscillatory_residual, phase,
                                phase_inverse, product_bound_scan, quwong_bracket,
                                small_r_limit_jy, transition_residual)

# frozen from a 30-digit mpmath evaluation of 2 j / (2 j + 1), j = j_{1,0}
GAP_CONSTANT = 0.8278726243387157


@pytest.mark.parametrize("m, n", [(0, 1), (0, 37), (1, 1), (3, 12), (10, 1), (25, 60), (64, 100)])
def test_bessel_zeros_against_mpmath(m, n):
    assert j_zero(n, m) == pytest.approx(float(mp.besseljzero(m, n)), abs=1e-11)
    # mpmath counts the zero of J'_0 at the origin
    ref = mp.besseljzero(m, n + (m == 0), derivative=1)
    assert jp_zero(n, m) == pytest.approx(float(ref), abs=1e-11)


@pytest.mark.parametrize("n", [1, 2, 7, 30])
def test_airy_zeros_against_mpmath(n):
    assert airy_zero(ZeroIndex(ZeroKind.AiryA, n)) == pytest.approx(
        -float(mp.airyaizero(n)), abs=1e-11)
    assert airy_zero(ZeroIndex(ZeroKind.AiryAprime, n)) == pytest.approx(
        -float(mp.airyaizero(n, derivative=1)), abs=1e-11)


def test_gap_constant_frozen():
    j10 = float(mp.besseljzero(0, 1))
    assert gap_constant() == pytest.approx(2 * j10 / (2 * j10 + 1), abs=1e-14)
    assert gap_constant() == pytest.approx(GAP_CONSTANT, abs=1e-14)


@given(st.integers(0, 300), st.floats(0.1, 500.0))
def test_wronskian(m, x):
    try:
        c = eval_cyl(m, x)
    except OverflowRegime:
        return
    w = 2 / (math.pi * x)
    scale = max(abs(c.j * c.yp), abs(c.jp * c.y), w)
    assert abs(c.wronskian() - w) <= 1e-12 * scale


@given(st.floats(-30.0, 30.0))
def test_airy_wronskian(t):
    a = eval_airy(t)
    assert a.wronskian() == pytest.approx(1 / math.pi, rel=1e-9)


def test_derivative_recurrence_matches_mpmath():
    j, jp, y, yp = (float(v) for v in cyl_arrays(4, 7.3))
    assert jp == pytest.approx(float(mp.besselj(4, 7.3, derivative=1)), rel=1e-13)
    assert yp == pytest.approx(float(mp.diff(lambda t: mp.bessely(4, t), 7.3)), rel=1e-10)


@pytest.mark.parametrize("call, exc", [
    (lambda: eval_cyl(-1, 1.0), UnsupportedIndex),
    (lambda: eval_cyl(3000, 1.0), UnsupportedIndex),
    (lambda: eval_cyl(2, 0.0), DomainError),
    (lambda: eval_cyl(400, 1.0), OverflowRegime),
    (lambda: eval_airy(150.0), DomainError),
    (lambda: oscillatory_residual(10, 5.0), BelowTurningPoint),
    (lambda: transition_residual(0, 1.0), UnsupportedIndex),
])
def test_domain_errors(call, exc):
    with pytest.raises(exc):
        call()


@given(st.integers(0, 80), st.integers(1, 40))
def test_merged_zeros_interlace(m, count):
    z = merged_bessel_zeros(m, 2 * count)
    vals = [v for v, _ in z]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    # J' zeros come first (the one at the origin excluded for m = 0 flips this) and alternate
    first = "Jp" if m >= 1 else "J"
    assert [k for _, k in z] == [first, "J" if first == "Jp" else "Jp"] * count


@given(st.integers(0, 64), st.integers(1, 120))
def test_merged_gap_floor(m, count):
    z = [v for v, _ in merged_bessel_zeros(m, count + 1)]
    assert z[0] >= gap_constant() - 1e-15
    assert np.min(np.diff(z)) >= gap_constant() - 1e-12


@given(st.integers(1, 200), st.integers(1, 30))
def test_quwong_bracket_contains_zero(m, n):
    lo, hi = quwong_bracket(n, m)
    assert lo < j_zero(n, m) < hi


@given(st.integers(0, 50), st.floats(0.0, 200.0))
def test_phase_inverse_round_trip(m, extra):
    r = math.sqrt(abs(m * m - 0.25)) + 0.01 + extra
    assert phase_inverse(m, phase(m, r).value) == pytest.approx(r, rel=1e-10)


@given(st.integers(10, 2000), st.floats(-2.0, 1.0))
def test_transition_residual_scaled_bounded(m, t):
    # the scaled residuals level off near 210 as m grows (Y at t = -2 dominates)
    res = transition_residual(m, t)
    assert max(res.scaled) < 1000.0


@given(st.integers(1, 40), st.floats(1.5, 50.0))
def test_oscillatory_residual_within_bounds(m, s):
    r = math.sqrt(abs(m * m - 0.25)) + s
    res = oscillatory_residual(m, r)
    assert all(res.ok)
    if res.scaled_ok is not None:
        assert all(res.scaled_ok)


def test_product_scans_small_orders_finite():
    for kind in ProductKind:
        scan = product_bound_scan(kind, 6)
        assert math.isfinite(scan.value) and scan.value > 0
        assert len(scan.rows) == 7


def test_jy_product_limit_for_positive_orders():
    for m in (1, 2, 7):
        assert small_r_limit_jy(m) == pytest.approx(1 / math.pi, abs=1e-6)
    # J'_0 Y_0 r behaves like r^2 log r near the axis
    assert small_r_limit_jy(0) < 1e-10


def test_oscillatory_bound_does_not_cover_order_zero():
    # with mu_0 = |0 - 1/4| the J_0 estimate fails just above the turning point
    assert not oscillatory_residual(0, 2.5).ok[0]
