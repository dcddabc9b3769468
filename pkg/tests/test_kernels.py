import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sbp_minimizer import kernels as K
from sbp_minimizer.constants import random_smooth_field
from sbp_minimizer.field import (ModelParams, RadialField, from_function, interpolator,
                                 make_gaussian, make_grid, mass, zeros)

from oracles import gaussian_H, lattice_zeta


@pytest.fixture(scope="module")
def narrow(grid):
    return make_gaussian(1.0, 0.05, grid)


def at(field, r):
    return float(interpolator(field)(np.array([r]))[0])


def test_zero_field_gives_zero_everywhere(grid):
    z = zeros(grid)
    for pot in (K.coulomb_potential(z), K.yukawa_potential(z, 1.0), K.bp_potential(z)):
        assert not pot.values.any()
    assert K.bp_energy(z) == K.coulomb_energy(z) == K.exp_double_energy(z) == 0.0


def test_point_charge_limits(narrow):
    assert at(K.coulomb_potential(narrow), 5.0) == pytest.approx(1 / 5, rel=1e-3)
    assert at(K.yukawa_potential(narrow, 1.0), 5.0) == pytest.approx(math.exp(-5) / 5, rel=1e-3)
    phi = (1 - math.exp(-5)) / (4 * math.pi * 5)
    assert at(K.bp_potential(narrow), 5.0) == pytest.approx(phi, rel=1e-3)


def test_newton_exterior_limit(grid):
    u = from_function(grid, lambda r: (1 + r) * np.exp(-r**2 / 2))
    v = K.coulomb_potential(u)
    assert grid.r_max * v.values[-1] == pytest.approx(mass(u), rel=1e-10)


def test_small_screening_recovers_coulomb(grid):
    u = make_gaussian(1.0, 1.0, grid)
    vy = K.yukawa_potential(u, 1e-4).values
    vc = K.coulomb_potential(u).values
    sel = grid.nodes < 10
    assert np.max(np.abs(vy[sel] / vc[sel] - 1)) < 1e-3


def test_screening_rate_must_be_positive(grid):
    u = make_gaussian(1.0, 1.0, grid)
    with pytest.raises(ValueError):
        K.yukawa_potential(u, 0.0)
    with pytest.raises(ValueError):
        K.yukawa(-1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_potential_nonnegative_and_coulomb_dominates(seed):
    g = make_grid(512, 30.0)
    u = random_smooth_field(g, np.random.default_rng(seed))
    assert K.bp_potential(u).values.min() >= -1e-12
    assert K.coulomb_energy(u) >= K.bp_energy(u)
    assert K.bp_energy(u) == pytest.approx(K.coulomb_energy(u) - K.yukawa_energy(u, 1.0),
                                           rel=1e-10, abs=1e-15)


def test_gaussian_coulomb_energy_closed_form(grid):
    for c, s, tol in ((1.0, 1.0, 2e-6), (2.0, 0.7, 1e-5)):
        assert K.coulomb_energy(make_gaussian(c, s, grid)) == pytest.approx(gaussian_H(c, s),
                                                                            rel=tol)


def test_concentrated_exponential_limit(grid):
    u = make_gaussian(2.0, 0.01, grid)
    assert K.exp_double_energy(u) == pytest.approx(4.0 / (16 * math.pi), rel=1e-2)


def test_exponential_energy_scales_raw_integral(grid):
    u = make_gaussian(1.0, 1.0, grid)
    assert K.exp_double_energy(u) * 16 * math.pi == pytest.approx(K.exp_double_integral(u),
                                                                  rel=1e-15)


def test_lattice_constants_match_ewald_sums():
    assert K.LATTICE_COULOMB == pytest.approx(-lattice_zeta(1.0), rel=1e-13)
    assert K.LATTICE_LINEAR == pytest.approx(-lattice_zeta(-1.0), rel=1e-12)


# ---------------------------------------------------------------------------
# 3D oracle


@pytest.fixture(scope="module")
def gauss3d(grid):
    u = make_gaussian(1.0, 1.0, grid)
    return u, K.embed_radial(u, 8.0, 40)


def test_oracle_matches_radial_gaussian(gauss3d):
    u, f3 = gauss3d
    o = K.oracle_energies(f3)
    assert o["B"] == pytest.approx(K.bp_energy(u), rel=2e-3)
    assert o["H"] == pytest.approx(K.coulomb_energy(u), rel=2e-3)
    assert o["E"] == pytest.approx(K.exp_double_energy(u), rel=2e-3)
    assert o["Y1"] == pytest.approx(K.yukawa_energy(u, 1.0), rel=2e-3)
    assert f3.mass() == pytest.approx(1.0, rel=1e-6)


def test_oracle_potential_at_cell_centre(gauss3d):
    u, f3 = gauss3d
    p = np.array([[f3.axis[22]] * 3])
    r = float(np.linalg.norm(p))
    got = K.brute_force_potential(f3, K.COULOMB, p)[0]
    assert got == pytest.approx(at(K.coulomb_potential(u), r), rel=2e-3)


def test_translation_equivariance():
    f3 = K.field3d_from_function(lambda r: np.exp(-r**2), 6.0, 32)
    moved = f3.shifted((1, 0, -1))
    for kern in (K.COULOMB, K.BP, K.PURE_EXP, K.yukawa(0.5)):
        a = K.brute_force_double(f3, kern)
        assert K.brute_force_double(moved, kern) == pytest.approx(a, rel=1e-12)


def test_oracle_guards():
    f3 = K.field3d_from_function(lambda r: np.exp(-r**2), 4.0, 16)
    z = K.Field3D(4.0, 16, np.zeros((16,) * 3))
    assert K.brute_force_double(z, K.PURE_EXP) == 0.0
    with pytest.raises(ValueError):
        K.field3d_from_function(lambda r: r, 4.0, K.MAX_ORACLE_N + 2)
    with pytest.raises(ValueError):
        K.brute_force_double(f3, K.COULOMB, K.field3d_from_function(lambda r: r, 5.0, 16))
    with pytest.raises(ValueError):
        K.KernelKind("gaussian")
    with pytest.raises(ValueError):
        K.Field3D(4.0, 16, np.zeros((16, 16, 15)))


def _bumps(d, extent=12.0, n=40):
    half = (d / 2, 0.0, 0.0)
    u1 = K.field3d_from_function(lambda r: np.exp(-r**2) / math.pi**0.75, extent, n,
                                 center=tuple(-x for x in half))
    u2 = K.field3d_from_function(lambda r: np.exp(-r**2) / math.pi**0.75, extent, n,
                                 center=half)
    return u1, u2


def test_cross_term_and_splitting_bounds():
    params = ModelParams(1.0, 2.5, 2.0)
    d1, d2 = 9.6, 19.2  # multiples of the cell size 0.6 keep both bumps on the lattice
    u1, u2 = _bumps(d1)
    cross = K.brute_force_double(u1, K.COULOMB, u2)
    assert cross <= u1.mass() * u2.mass() / d1 * (1 + 2e-3)
    defect1 = K.splitting_defect(u1, u2, params)
    assert abs(defect1) <= 4 * K.cross_term_budget(u1.mass(), u2.mass(), d1) / d1
    defect2 = K.splitting_defect(*_bumps(d2), params)
    assert 0.4 < defect2 / defect1 < 0.6
    zero = K.Field3D(u1.extent, u1.n, np.zeros_like(u1.values))
    assert K.splitting_defect(u1, zero, params) == 0.0
