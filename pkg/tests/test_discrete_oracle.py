import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coaxwave.discrete_oracle import (RadialGrid, bform_scaling, coupled_matrices,
                                      coupled_spectrum, match_roots, richardson_extrapolate,
                                      richardson_order, scalar_matrices, scalar_spectrum)
from coaxwave.dispersion import BcKind
from coaxwave.errors import CutoffCollision, GridTooCoarse
from coaxwave.profile import FiberProfile
from coaxwave.rootfind import C_GAP, certified_roots
from coaxwave.specialfn import j_zero

OMEGA = 3.3


def _root_squares(p, bc, m, k):
    return np.array([c.value ** 2 for c in certified_roots(p, bc, m, k, with_hethcote=False)])


def _union(p, m, k):
    both = np.concatenate([_root_squares(p, bc, m, k) for bc in BcKind])
    return np.sort(both)[:k]


def test_grid_contains_interfaces(two_layer):
    g = RadialGrid.uniform(two_layer, 20)
    g.check(two_layer)
    assert 0.5 in g.nodes and g.nodes[0] == 0.0 and g.nodes[-1] == 1.0
    assert g.refined().n_elements == 2 * g.n_elements
    with pytest.raises(ValueError):
        RadialGrid(tuple(np.linspace(0, 1, 40)[:-1].tolist()) + (1.0,)).check(
            FiberProfile.two_layer(0.51, 1.05, 1.0))


def test_scalar_matrices_symmetric(three_layer):
    g = RadialGrid.uniform(three_layer, 20)
    for bc in BcKind:
        k, m = scalar_matrices(three_layer, bc, 2, g)
        assert abs(k - k.T).max() < 1e-12 and abs(m - m.T).max() < 1e-14


@pytest.mark.parametrize("bc", list(BcKind))
@pytest.mark.parametrize("m", [0, 1, 3])
def test_scalar_spectrum_converges(two_layer, bc, m):
    ref = _root_squares(two_layer, bc, m, 6)
    errs = []
    for per in (20, 40, 80):
        s = scalar_spectrum(two_layer, bc, m, RadialGrid.uniform(two_layer, per), 6)
        errs.append(np.max(np.abs(s.eigenvalues.real - ref) / ref))
    assert errs[-1] < 1e-5
    assert math.log2(errs[1] / errs[2]) > 3.4


def test_scalar_homogeneous_bessel(homogeneous):
    s = scalar_spectrum(homogeneous, BcKind.Dirichlet, 0, RadialGrid.uniform(homogeneous, 80), 3)
    assert s.eigenvalues[0].real == pytest.approx(j_zero(1, 0) ** 2, rel=1e-7)


def test_scalar_too_many_eigenvalues(two_layer):
    with pytest.raises(GridTooCoarse):
        scalar_spectrum(two_layer, BcKind.Dirichlet, 0, RadialGrid.uniform(two_layer, 20), 40)


@given(st.floats(0.5, 3.0), st.floats(1e-3, 1.0), st.floats(1.0, 6.0))
def test_richardson_recovers_order(exact, c, p):
    h = np.array([0.1, 0.05, 0.025])
    v = exact + c * h ** p
    assert richardson_order(*v) == pytest.approx(p, rel=1e-6)
    assert richardson_extrapolate(v[1], v[2], p) == pytest.approx(exact, abs=1e-10)


@pytest.mark.parametrize("profile_name", ["homogeneous", "matched"])
def test_coupled_decouples_when_delta_tilde_zero(request, profile_name):
    p = request.getfixturevalue(profile_name)
    g = RadialGrid.uniform(p, 30, 3)
    for m in (0, 1, 3):
        s = coupled_spectrum(p, OMEGA, m, g, 10)
        assert np.max(np.abs(s.eigenvalues - _union(p, m, 10)) / _union(p, m, 10)) < 1e-5
        # the companion vectors carry the rounding of a pencil twice the size
        assert np.max(s.mixing) < 1e-7
        assert np.max(coupled_spectrum(p, OMEGA, m, g, 10, method="schur").mixing) < 1e-8
        assert np.max(np.abs(s.eigenvalues.imag)) == 0.0 or \
            np.max(np.abs(s.eigenvalues.imag) / np.abs(s.eigenvalues)) < 1e-10


def test_companion_and_schur_agree(two_layer):
    g = RadialGrid.uniform(two_layer, 20, 2)
    for m in (0, 2, 5):
        a = coupled_spectrum(two_layer, OMEGA, m, g, 12)
        b = coupled_spectrum(two_layer, OMEGA, m, g, 12, method="schur")
        assert np.max(np.abs(a.eigenvalues - b.eigenvalues) / np.abs(b.eigenvalues)) < 1e-8
        assert np.max(np.abs(a.mixing - b.mixing)) < 1e-8
        assert a.info["branch_mismatch"] < 1e-8


def test_coupled_is_close_to_scalar_union(two_layer):
    g = RadialGrid.uniform(two_layer, 30, 3)
    s = coupled_spectrum(two_layer, OMEGA, 2, g, 10)
    roots = np.sqrt(_union(two_layer, 2, 10))
    matched = match_roots(s, roots, C_GAP)
    assert all(z is not None for z in matched)


def test_coupled_rejects_cutoff(homogeneous):
    with pytest.raises(CutoffCollision):
        coupled_spectrum(homogeneous, j_zero(1, 0), 0, RadialGrid.uniform(homogeneous, 20), 4)


def test_coupled_forms_symmetric(three_layer):
    mats = coupled_matrices(three_layer, 2, RadialGrid.uniform(three_layer, 20))
    for a in (mats.curl, mats.mass_eps, mats.mass_mu, mats.stiff3, mats.mass3, mats.bweight):
        assert abs(a - a.T).max() <= 1e-12 * abs(a).max()


def test_bform_vanishes_when_delta_tilde_zero(matched):
    g = RadialGrid.uniform(matched, 20)
    for m in (0, 1, 4):
        bf = bform_scaling(matched, OMEGA, m, g)
        assert bf.max_abs_form < 1e-10 and math.isnan(bf.max_ratio)


def test_bform_ratio_grid_and_order_stable(two_layer):
    vals = [bform_scaling(two_layer, OMEGA, m, RadialGrid.uniform(two_layer, per)).max_ratio
            for per in (20, 40, 80) for m in (0, 2, 7)]
    assert max(vals) / min(vals) < 1.001


@given(st.floats(0.05, 1.0))
def test_bform_ratio_independent_of_contrast(factor):
    base = FiberProfile.two_layer(0.5, 1.05, 1.0)
    g = RadialGrid.uniform(base, 20)
    a = bform_scaling(base, OMEGA, 1, g).max_ratio
    b = bform_scaling(base.scaled_contrast(factor), OMEGA, 1, g).max_ratio
    # eps - eps0 mu0 / mu is linear in the contrast when mu is fixed
    assert b == pytest.approx(a, rel=1e-9)
