"""Acceptance criteria, one block per criterion.

Each check records a PASS/FAIL line; the terminal summary folds them into
one line per criterion.  Sub-checks that cannot hold are marked
xfail(strict=True): they run unchanged and report FAIL.
"""
import math
import time

import mpmath as mp
import numpy as np
import pytest
from scipy.special import jn_zeros, jnp_zeros

from coaxwave.discrete_oracle import (RadialGrid, bform_scaling, coupled_spectrum,
                                      richardson_order, scalar_spectrum)
from coaxwave.dispersion import BcKind, direct_scaled_det, main_term, scaled_det_values
from coaxwave.modes import coefficients, norms_and_traces, reconstruct_fields
from coaxwave.profile import FiberProfile, deviation
from coaxwave.rootfind import C_GAP, certified_roots, gap_report, merged_sequence
from coaxwave.spectra import (WaveClass, backward_check, full_spectrum, gram_conditioning,
                              lowest_modes, min_separation, root_wavenumbers, strip_check,
                              coupled_wavenumbers)
from coaxwave.specialfn import ProductKind, product_bound_scan, small_r_limit_jy

TWO_LAYER = FiberProfile.two_layer(0.5, 1.05, 1.0)          # delta = 0.05
HOMOGENEOUS = FiberProfile.homogeneous()
# eps mu = eps0 mu0 layer by layer: delta > 0, delta_tilde = 0
MATCHED = FiberProfile((0.0, 0.4, 0.7, 1.0), (1.2, 1 / 1.1, 1.0), (1 / 1.2, 1.1, 1.0))
GAP_FLOOR = 0.827929


# 1. homogeneous reduction

def test_c1_homogeneous_reduction(record):
    t0 = time.perf_counter()
    z = np.linspace(0.3, 400.0, 3001)
    red = 0.0
    for m in range(0, 65):
        for bc in BcKind:
            zz = z[z > m / 3]
            red = max(red, float(np.max(np.abs(scaled_det_values(HOMOGENEOUS, bc, m, zz)
                                               - main_term(bc, m, zz)))))
    worst = 0.0
    for m in range(0, 65):
        ref = {BcKind.Dirichlet: jn_zeros(m, 100), BcKind.Neumann: jnp_zeros(m, 100)}
        for bc in BcKind:
            vals = np.array([c.value for c in certified_roots(HOMOGENEOUS, bc, m, 100,
                                                               with_hethcote=False)])
            worst = max(worst, float(np.max(np.abs(vals - ref[bc]))))
    # a second, arbitrary-precision oracle on a sample of orders
    mp_worst = 0.0
    for m in (0, 1, 17, 40, 64):
        vals = [c.value for c in certified_roots(HOMOGENEOUS, BcKind.Dirichlet, m, 100,
                                                 with_hethcote=False)]
        for n in (1, 2, 50, 100):
            mp_worst = max(mp_worst, abs(vals[n - 1] - float(mp.besseljzero(m, n))))
    elapsed = time.perf_counter() - t0
    ok = red == 0.0 and worst <= 1e-10 and mp_worst <= 1e-10 and elapsed < 60
    record(1, "homogeneous reduction", "roots vs Bessel zeros", ok,
           f"det - J = {red:.1e}, max|root - scipy zero| = {worst:.2e}, "
           f"vs mpmath = {mp_worst:.2e}, {elapsed:.1f} s")
    assert ok


# 2. determinant recursion

def test_c2_recursion_vs_direct(record):
    rng = np.random.default_rng(20240611)
    worst, count = 0.0, 0
    while count < 240:
        n = int(rng.integers(2, 5))
        radii = np.sort(rng.uniform(0.05, 0.95, n - 1))
        if np.min(np.diff(np.concatenate([[0.0], radii, [1.0]]))) < 0.02:
            continue
        p = FiberProfile((0.0, *radii, 1.0), rng.uniform(0.55, 1.9, n), rng.uniform(0.55, 1.9, n))
        bc = BcKind.Dirichlet if rng.random() < 0.5 else BcKind.Neumann
        m, z = int(rng.integers(0, 9)), float(rng.uniform(0.5, 40.0))
        a = float(scaled_det_values(p, bc, m, z))
        b = direct_scaled_det(p, bc, m, z)
        worst = max(worst, abs(a - b) / abs(b))
        count += 1
    ok = worst <= 1e-10
    record(2, "determinant recursion", "random triples", ok,
           f"{count} triples, max relative difference {worst:.2e}")
    assert ok


# 3. gap claims

def test_c3_gaps_homogeneous(record):
    rep = gap_report(merged_sequence(HOMOGENEOUS, m, 200) for m in range(0, 65))
    ok = rep.global_min_first >= GAP_FLOOR and rep.global_min_gap >= GAP_FLOOR
    record(3, "gap claims", "homogeneous", ok,
           f"first {rep.global_min_first:.5f}, min gap {rep.global_min_gap:.5f} "
           f"(floor {GAP_FLOOR}, m <= 64, n <= 200)")
    assert ok


def test_c3_gaps_perturbed(record):
    profiles = [TWO_LAYER,
                FiberProfile((0.0, 0.3, 0.65, 1.0), (1.05, 0.97, 1.0), (0.98, 1.02, 1.0))]
    worst = min(gap_report(merged_sequence(p, m, 30) for m in range(0, 17)).global_min_gap
                for p in profiles)
    ok = worst >= 0.4
    record(3, "gap claims", "delta = 0.05", ok, f"measured min gap {worst:.4f} (floor 0.4)")
    assert ok


# 4. scalar oracle agreement

def test_c4_scalar_oracle(record):
    t0 = time.perf_counter()
    worst_err, orders = 0.0, []
    for m in range(0, 6):
        for bc in BcKind:
            ref = np.array([c.value for c in certified_roots(TWO_LAYER, bc, m, 10)]) ** 2
            vals = [scalar_spectrum(TWO_LAYER, bc, m, RadialGrid.uniform(TWO_LAYER, per, 2),
                                    10, check=False).eigenvalues.real
                    for per in (40, 80, 160, 320)]
            worst_err = max(worst_err, float(np.max(np.abs(vals[-1] / ref - 1))))
            orders += [richardson_order(vals[1][i], vals[2][i], vals[3][i]) for i in range(10)]
    elapsed = time.perf_counter() - t0
    lo, hi = min(orders), max(orders)
    # continuous P2 elements: eigenvalue error O(h^4)
    ok = abs(lo - 4) <= 0.6 and abs(hi - 4) <= 0.6 and worst_err <= 1e-6 and elapsed < 120
    record(4, "oracle agreement", "P2 scalar FEM", ok,
           f"Richardson order {lo:.3f}..{hi:.3f} (nominal 4), final rel error "
           f"{worst_err:.2e}, {elapsed:.1f} s")
    assert ok


# 5. uniform Bessel bounds

@pytest.fixture(scope="module")
def scans():
    return {k: {r[1]: r[4] for r in product_bound_scan(k, 200, m_min=1).rows}
            for k in ProductKind}


def _window(rows):
    lo = max(v for m, v in rows.items() if 1 <= m <= 100)
    hi = max(v for m, v in rows.items() if 100 <= m <= 200)
    return lo, hi, hi / lo


def test_c5_scans_finite(record, scans):
    ok = all(math.isfinite(v) for rows in scans.values() for v in rows.values())
    record(5, "uniform Bessel bounds", "scans finite", ok,
           ", ".join(f"C_{k.value} = {max(rows.values()):.4f}" for k, rows in scans.items()))
    assert ok


def test_c5_jy_window(record, scans):
    lo, hi, q = _window(scans[ProductKind.JY])
    ok = abs(q - 1) <= 0.05
    record(5, "uniform Bessel bounds", "JY window", ok,
           f"max[1,100] = {lo:.4f}, max[100,200] = {hi:.4f}, ratio {q:.4f}")
    assert ok


@pytest.mark.xfail(strict=True, reason="max |r J' J| falls from 0.385 at m = 1 toward 0.351")
def test_c5_jj_window(record, scans):
    lo, hi, q = _window(scans[ProductKind.JJ])
    ok = abs(q - 1) <= 0.05
    record(5, "uniform Bessel bounds", "JJ window", ok,
           f"max[1,100] = {lo:.4f}, max[100,200] = {hi:.4f}, ratio {q:.4f}")
    assert ok


@pytest.mark.xfail(strict=True, reason="the JJYY product peaks at small orders")
def test_c5_jjyy_window(record, scans):
    lo, hi, q = _window(scans[ProductKind.JJYY])
    ok = abs(q - 1) <= 0.05
    record(5, "uniform Bessel bounds", "JJYY window", ok,
           f"max[1,100] = {lo:.4f}, max[100,200] = {hi:.4f}, ratio {q:.4f}")
    assert ok


def test_c5_one_sided_bound(record, scans):
    # the large orders never exceed the small-order maximum by more than 5 %
    worst = max(_window(rows)[2] for rows in scans.values())
    ok = worst <= 1.05
    record(5, "uniform Bessel bounds", "large orders bounded by small", ok,
           f"max ratio {worst:.4f}")
    assert ok


@pytest.mark.xfail(strict=True, reason="r J'_0 Y_0 ~ (r^2 / pi) log r tends to 0")
def test_c5_small_r_limit_order_zero(record):
    v = small_r_limit_jy(0)
    ok = abs(v - 1 / math.pi) <= 1e-6
    record(5, "uniform Bessel bounds", "r -> 0 limit m = 0", ok,
           f"|r J'_0 Y_0| at r = 1e-8 is {v:.3e}, 1/pi = {1 / math.pi:.6f}")
    assert ok


def test_c5_small_r_limit_positive_orders(record):
    vals = {m: small_r_limit_jy(m) for m in (1, 2, 5, 20)}
    worst = max(abs(v - 1 / math.pi) for v in vals.values())
    ok = worst <= 1e-6
    record(5, "uniform Bessel bounds", "r -> 0 limit m >= 1", ok,
           f"max |limit - 1/pi| = {worst:.1e} over m = 1, 2, 5, 20")
    assert ok


# 6. Maxwell residual at delta_tilde = 0

FLIP = (("E_r", 1), ("E_theta", 1), ("E_z", -1), ("H_r", -1), ("H_theta", -1), ("H_z", 1))


def test_c6_maxwell_residual(record):
    r = np.linspace(0.0, 1.0, 201)
    worst_res, worst_sym, count = 0.0, 0.0, 0
    for p in (HOMOGENEOUS, MATCHED):
        assert deviation(p).delta_tilde < 1e-15
        for omega in (2.9, 7.3):
            for m in range(0, 6):
                for bc in BcKind:
                    for c in certified_roots(p, bc, m, 8, with_hethcote=False):
                        plus = reconstruct_fields(p, omega, c)
                        minus = reconstruct_fields(p, omega, c, branch=-1)
                        worst_res = max(worst_res, plus.maxwell_residual(r[1:]),
                                        minus.maxwell_residual(r[1:]))
                        fp, fm = plus.components(r), minus.components(r)
                        for k, s in FLIP:
                            worst_sym = max(worst_sym, float(np.max(np.abs(fp[k] - s * fm[k]))))
                        count += 1
    ok = worst_res < 1e-8 and worst_sym == 0.0
    record(6, "Maxwell residual", "TE/TM fields", ok,
           f"{count} modes, max residual {worst_res:.2e}, branch symmetry defect {worst_sym:.1e}")
    assert ok


# 7. coupled oracle at delta = 0.05

@pytest.fixture(scope="module")
def coupled_report():
    grid = RadialGrid.uniform(TWO_LAYER, 30, 3)
    return grid, full_spectrum(TWO_LAYER, 7.3, range(0, 9), 6, coupled_grid=grid)


def test_c7_realness(record, coupled_report):
    grid, _ = coupled_report
    worst = 0.0
    for m in range(0, 9):
        s = coupled_spectrum(TWO_LAYER, 7.3, m, grid, 12)
        worst = max(worst, float(np.max(np.abs(s.eigenvalues.imag) / np.abs(s.eigenvalues))))
    ok = worst <= 1e-8
    record(7, "non-selfadjoint claims", "nu^2 real", ok, f"max |Im nu^2| / |nu^2| = {worst:.1e}")
    assert ok


def test_c7_separation(record, coupled_report):
    grid, _ = coupled_report
    worst = min(min_separation(coupled_spectrum(TWO_LAYER, 7.3, m, grid, 12))
                for m in range(0, 9))
    ok = worst > 0
    record(7, "non-selfadjoint claims", "separated", ok,
           f"min gap / (c_gap 2 nu) = {worst:.3f} (c_gap = {C_GAP:.7f})")
    assert ok


def test_c7_no_backward_waves(record, coupled_report):
    grid, rep = coupled_report
    props = [w for w in rep.wavenumbers
             if w.source == "coupled" and w.branch == 1
             and w.classification is WaveClass.propagating]
    results = [backward_check(TWO_LAYER, 7.3, w, grid=grid) for w in props]
    lo = min(r.ratio for r in results)
    inside = all(r.in_bracket for r in results)
    ok = rep.backward_free and lo > 0 and len(props) > 0
    record(7, "non-selfadjoint claims", "forward waves", ok,
           f"{len(props)} propagating coupled modes, min (beta/omega) dbeta/domega = {lo:.4f}, "
           f"all in bracket: {inside}")
    assert ok


# 8. Riesz evidence

@pytest.fixture(scope="module")
def gram():
    omega = 2.9
    out = {}
    for name, p in (("zero", HOMOGENEOUS), ("full", TWO_LAYER),
                    ("half", TWO_LAYER.scaled_contrast(0.5))):
        out[name] = gram_conditioning(lowest_modes(p, omega, 50)).condition
    out["plateau"] = [gram_conditioning(lowest_modes(TWO_LAYER, omega, k)).condition
                      for k in (25, 50, 100, 200)]
    return out


def test_c8_gram_conditioning(record, gram):
    c0, c1, c2 = gram["zero"], gram["full"], gram["half"]
    trend = (c1 - 1) / (c2 - 1) / 2
    ok = abs(c0 - 1) <= 1e-8 and c1 <= 2 and abs(trend - 1) <= 0.3
    record(8, "Riesz evidence", "K = 50", ok,
           f"cond at delta 0 / 0.05 / 0.025: {c0:.10f} / {c1:.4f} / {c2:.4f}, "
           f"halving ratio / 2 = {trend:.3f}")
    assert ok


def test_c8_plateau(record, gram):
    seq = gram["plateau"]
    growth = max(b / a - 1 for a, b in zip(seq, seq[1:]))
    ok = growth <= 0.1
    record(8, "Riesz evidence", "plateau in K", ok,
           "K = 25, 50, 100, 200: " + ", ".join(f"{c:.4f}" for c in seq)
           + f", max increase per doubling {growth:.3%}")
    assert ok


def test_c8_bform_scaling(record):
    grid = RadialGrid.uniform(MATCHED, 40)
    zero = max(bform_scaling(MATCHED, 2.9, m, grid).max_abs_form for m in (0, 1, 4))
    ok = zero < 1e-10
    record(8, "Riesz evidence", "perturbation form", ok,
           f"max |b(v, v')| at delta_tilde = 0: {zero:.1e}")
    assert ok


# 9. strip localisation

STRIP_PROFILES = [TWO_LAYER,
                  FiberProfile.two_layer(0.6, 1.0, 1.095),
                  FiberProfile((0.0, 0.3, 0.65, 1.0), (1.04, 0.97, 1.0), (0.98, 1.02, 1.0)),
                  FiberProfile((0.0, 0.25, 0.5, 0.75, 1.0), (1.06, 0.96, 1.03, 1.0),
                               (1.0, 1.02, 0.97, 1.0))]


def test_c9_strip(record):
    worst, count = math.inf, 0
    for p in STRIP_PROFILES:
        assert deviation(p).delta <= 0.1
        grid = RadialGrid.uniform(p, 20, 2)
        for omega in (2.9, 5.1, 7.3):
            waves = root_wavenumbers(p, omega, range(0, 6), 6)
            for m in range(0, 6):
                waves += coupled_wavenumbers(p, omega, m, grid, 12)[0]
            res = strip_check(waves, p, omega)
            worst = min(worst, res.margin)
            count += len(waves)
    ok = worst >= 0
    record(9, "strip localisation", "4 profiles x 3 frequencies", ok,
           f"{count} wavenumbers, min margin {worst:.4f}")
    assert ok


# 10. trace growth

def test_c10_trace_growth(record):
    best = {}
    for m in range(0, 33):
        for bc in BcKind:
            for c in certified_roots(TWO_LAYER, bc, m, 100, with_hethcote=False):
                nt = norms_and_traces(coefficients(TWO_LAYER, bc, m, c.value), c.n, check=False)
                best[m] = max(best.get(m, 0.0), nt.ratio)
    lo = max(best[m] for m in range(1, 17))
    hi = max(best[m] for m in range(17, 33))
    overall = max(best.values())
    ok = math.isfinite(overall) and abs(hi / lo - 1) <= 0.1
    record(10, "trace growth", "n <= 100, m <= 32", ok,
           f"sup ratio {overall:.4f}, max[1,16] = {lo:.4f}, max[17,32] = {hi:.4f}, "
           f"quotient {hi / lo:.4f}")
    assert ok
