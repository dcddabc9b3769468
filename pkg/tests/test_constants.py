import json
import math

import numpy as np
import pytest

from sbp_minimizer import constants as C
from sbp_minimizer.field import RadialField, make_gaussian, make_grid, zeros

from oracles import FROZEN_MU1_P25, S_EXACT


def test_sobolev_constant_matches_instanton_value():
    est = C.sobolev_constant()
    assert est.value == pytest.approx(S_EXACT, rel=1e-10)
    assert est.error < 1e-4


def test_sobolev_quotient_bounded_below_by_S(grid):
    S = C.sobolev_constant().value
    for u in C.trial_corpus(grid, seed=3, n_random=10):
        assert C.sobolev_quotient(u) >= S - 1e-6


@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_quotients_scale_invariant_under_similar_grids(lam):
    # a uniform grid stretched with the field makes the discrete problem exactly similar
    base = make_grid(1024, 40.0, "uniform")
    other = make_grid(1024, 40.0 * lam, "uniform")
    W = C._aubin_talenti(base)
    W_lam = C._aubin_talenti(other, scale=lam)
    assert C.sobolev_quotient(W_lam) == pytest.approx(C.sobolev_quotient(W), rel=1e-8)
    g1, g2 = make_gaussian(1.0, 1.0, base), make_gaussian(1.0, lam, other)
    assert C.gn_quotient(g2, 2.5) == pytest.approx(C.gn_quotient(g1, 2.5), rel=1e-8)
    assert C.hls_quotient(g2) == pytest.approx(C.hls_quotient(g1), rel=1e-8)


def test_gn_quotient_collapses_to_one_at_p2(grid):
    assert C.gn_quotient(make_gaussian(0.7, 1.3, grid), 2.0) == pytest.approx(1.0, rel=1e-14)


def test_hls_rejects_zero_field(grid):
    with pytest.raises(ValueError):
        C.hls_quotient(zeros(grid))


def test_constant_estimates_dominate_their_corpus():
    grid = make_grid(**C.ESTIMATE_GRID)
    kgn = C.kgn_estimate(2.5)
    kh = C.kh_estimate()
    assert kgn.raw == pytest.approx(FROZEN_MU1_P25["K_GN_raw"], rel=1e-9)
    assert kh.raw == pytest.approx(FROZEN_MU1_P25["K_H_raw"], rel=1e-9)
    assert kgn.raw >= kgn.trial_max and kh.raw >= kh.trial_max
    for u in C.trial_corpus(grid, 0):
        assert C.gn_quotient(u, 2.5) <= kgn.inflated
        assert C.hls_quotient(u) <= kh.inflated
    with pytest.raises(ValueError):
        C.kgn_estimate(6.5)


def test_thresholds_closed_form(consts):
    base = -3 * (3 * 2.5 - 10) * consts.mu * consts.K_GN * consts.S**3 / (4 * 2.5)
    K = (consts.K_GN / 2.5 * base ** ((3 * 2.5 - 10) / (3 * 3.5))
         + base ** (8 / (3 * 3.5)) / (6 * consts.S**3))
    assert consts.K == pytest.approx(K, rel=1e-14)
    assert consts.c0 == (1 / (2 * consts.K)) ** 1.5
    assert consts.rho0 == pytest.approx(base ** (4 / (3 * 3.5)) * consts.c0 ** (1 / 3), rel=1e-14)
    assert consts.c0 == pytest.approx(FROZEN_MU1_P25["c0"], rel=1e-9)
    assert consts.rho0 == pytest.approx(FROZEN_MU1_P25["rho0"], rel=1e-9)


@pytest.mark.parametrize("mu", [1.0, 5.0])
@pytest.mark.parametrize("p", [2.2, 2.5, 2.6, 3.2])
def test_barrier_vanishes_at_threshold(mu, p):
    k = C.thresholds(mu, p, K_GN=0.4, S=S_EXACT)
    assert abs(k.h_residual) <= 1e-10
    t = math.sqrt(k.rho0)
    assert k.h(t, 0.5 * k.c0) > 0
    assert k.h(t, 1.01 * k.c0) < 0


def test_barrier_shape(consts):
    assert C.h_c(1e-6, 1.0, consts) < 0
    assert C.h_c(1e3, 1.0, consts) < -1e10
    ts = np.linspace(1e-3, math.sqrt(consts.rho0), 50)
    assert isinstance(C.h_c(ts, 1.0, consts), np.ndarray)


def test_monotone_transfer(consts):
    c2 = 0.5 * consts.c0
    for rho in np.linspace(0.5 * consts.rho0, consts.rho0, 10):
        assert C.h_c(math.sqrt(rho), c2, consts) >= 0


def test_thresholds_guard_ranges():
    with pytest.raises(ValueError):
        C.thresholds(1.0, 10 / 3, 0.4, S_EXACT)
    with pytest.raises(ValueError):
        C.thresholds(0.0, 2.5, 0.4, S_EXACT)
    with pytest.raises(ValueError):
        C.estimate_constants(1.0, 3.0)


def test_threshold_json_round_trip(consts):
    d = json.loads(consts.to_json())
    assert d["h_residual"] == consts.h_residual
    assert d["provenance"]["inflation"] == C.INFLATION
    back = C.ThresholdConstants.from_dict(d)
    assert back == consts
    assert back.provenance == consts.provenance
