"""Inequality constants and the barrier thresholds built from them.

``K_GN`` and ``K_H`` have no closed form; they are estimated by maximizing
the (dilation invariant) quotients over a seeded trial family followed by
gradient ascent on the nodal values, then inflated by ``INFLATION``.  The
maximized quotient only bounds the optimal constant from below, which is
why the inflated value is the one that enters ``h_c``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .field import (FOUR_PI, RadialField, RadialGrid, grad_norm_sq, lp_power, make_gaussian,
                    make_grid, mass, neg_laplacian)

INFLATION = 1.05

# grid used for the constant estimates; quotients are dilation invariant so
# only the shape needs resolving
ESTIMATE_GRID = dict(node_count=1024, r_max=40.0, scheme="graded")


def sobolev_quotient(u: RadialField) -> float:
    """``||grad u||_2^2 / ||u||_6^2``."""
    return grad_norm_sq(u) / lp_power(u, 6.0) ** (1.0 / 3.0)


def _aubin_talenti(grid: RadialGrid, scale: float = 1.0) -> RadialField:
    r = grid.nodes / scale
    return RadialField(grid, 3.0**0.25 * (1.0 + r**2) ** -0.5)


def _aubin_talenti_tails(r_max: float) -> tuple[float, float]:
    """Exact contributions of ``r > r_max`` to ``int |grad W|^2`` and ``int W^6``."""
    grad_tail = FOUR_PI * np.sqrt(3.0) * _tail_integral(r_max, 4)
    six_tail = FOUR_PI * 3.0**1.5 * _tail_integral(r_max, 2)
    return grad_tail, six_tail


def _tail_integral(R: float, k: int) -> float:
    """``int_R^inf s^k / (1+s^2)^3 ds`` for k in {2, 4}, via s = tan(a)."""
    a = np.arctan(R)
    b = np.pi / 2
    if k == 2:
        # sin^2 cos^2 = (a/8 - sin(4a)/32)'
        F = lambda t: t / 8.0 - np.sin(4 * t) / 32.0
    else:
        # sin^4 = 3a/8 - sin(2a)/4 + sin(4a)/32
        F = lambda t: 3 * t / 8.0 - np.sin(2 * t) / 4.0 + np.sin(4 * t) / 32.0
    return float(F(b) - F(a))


@dataclass(frozen=True)
class SobolevEstimate:
    value: float
    error: float
    grids: tuple


def sobolev_constant(r_max: float = 200.0, node_counts=(4096, 8192)) -> SobolevEstimate:
    """Best Sobolev constant from the Aubin-Talenti profile.

    The quotient is evaluated on two graded grids, each completed with the
    exact tail beyond ``r_max``, and Richardson-extrapolated assuming second
    order convergence; ``error`` is the size of that correction.
    """
    vals = []
    for n in node_counts:
        grid = make_grid(n, r_max, "graded")
        w = _aubin_talenti(grid)
        gt, st = _aubin_talenti_tails(r_max)
        vals.append((grad_norm_sq(w) + gt) / (lp_power(w, 6.0) + st) ** (1.0 / 3.0))
    ratio = node_counts[1] / node_counts[0]
    extrap = vals[1] + (vals[1] - vals[0]) / (ratio**2 - 1.0)
    return SobolevEstimate(float(extrap), float(abs(extrap - vals[1])),
                           tuple((n, float(v)) for n, v in zip(node_counts, vals)))


# ---------------------------------------------------------------------------
# trial-family maximization


def gn_quotient(u: RadialField, p: float) -> float:
    """``C(u) / (A^{3(p-2)/4} M^{(6-p)/4})``; at ``p = 2`` this is ``||u||_2^2 / M = 1``."""
    return lp_power(u, p) / (grad_norm_sq(u) ** (3 * (p - 2) / 4) * mass(u) ** ((6 - p) / 4))


def hls_quotient(u: RadialField) -> float:
    """``iint u^2 u^2 / |x-y| / (||grad u||_2 M^{3/2})``."""
    m = mass(u)
    a = grad_norm_sq(u)
    if not (m > 0 and a > 0):
        raise ValueError("quotient undefined for the zero field")
    return FOUR_PI * kernels.coulomb_energy(u) / (np.sqrt(a) * m**1.5)


def _log_gn(values, grid, p):
    u = RadialField(grid, values)
    vw = grid.volume_weights
    c = lp_power(u, p)
    a = grad_norm_sq(u)
    m = mass(u)
    f = np.log(c) - 3 * (p - 2) / 4 * np.log(a) - (6 - p) / 4 * np.log(m)
    dc = p * np.abs(values) ** (p - 2) * values * vw
    da = 2.0 * vw * neg_laplacian(u).values
    dm = 2.0 * values * vw
    g = dc / c - 3 * (p - 2) / 4 * da / a - (6 - p) / 4 * dm / m
    return -f, -g


def _log_hls(values, grid):
    u = RadialField(grid, values)
    vw = grid.volume_weights
    h = kernels.coulomb_energy(u)
    a = grad_norm_sq(u)
    m = mass(u)
    f = np.log(h) - 0.5 * np.log(a) - 1.5 * np.log(m)
    dh = vw * values * kernels.coulomb_potential(u).values / np.pi
    da = 2.0 * vw * neg_laplacian(u).values
    dm = 2.0 * values * vw
    g = dh / h - 0.5 * da / a - 1.5 * dm / m
    return -f, -g


def trial_corpus(grid: RadialGrid, seed: int = 0, n_random: int = 24) -> list[RadialField]:
    """Shapes spanning Gaussian, exponential, algebraic and random smooth profiles."""
    rng = np.random.default_rng(seed)
    r = grid.nodes
    out = [make_gaussian(1.0, s, grid) for s in (0.7, 1.0, 1.5)]
    out += [RadialField(grid, np.exp(-r / s)) for s in (0.7, 1.2)]
    out += [RadialField(grid, 1.0 / np.cosh(r / s)) for s in (0.8, 1.5)]
    out += [RadialField(grid, (1.0 + (r / s) ** 2) ** -k) for s, k in ((1.0, 2.0), (1.5, 3.0))]
    for _ in range(n_random):
        out.append(random_smooth_field(grid, rng))
    return out


def random_smooth_field(grid: RadialGrid, rng: np.random.Generator, n_bumps: int = 4) -> RadialField:
    """A sum of a few Gaussian shells with random centres, widths and signs."""
    r = grid.nodes
    v = np.zeros_like(r)
    for _ in range(n_bumps):
        centre = rng.uniform(0.0, 3.0)
        width = rng.uniform(0.5, 1.5)
        amp = rng.uniform(0.2, 1.0) * rng.choice([-1.0, 1.0], p=[0.2, 0.8])
        v += amp * (np.exp(-((r - centre) / width) ** 2) + np.exp(-((r + centre) / width) ** 2))
    return RadialField(grid, v)


@dataclass(frozen=True)
class ConstantEstimate:
    """A maximized quotient and the inflated constant used downstream."""

    raw: float
    inflated: float
    inflation: float
    corpus_size: int
    seed: int
    grid: dict
    trial_max: float


def _maximize(objective, grid, corpus, quotient) -> tuple[float, float]:
    vals = [quotient(u) for u in corpus]
    best = int(np.argmax(vals))
    res = minimize(objective, corpus[best].values, jac=True, method="L-BFGS-B",
                   options=dict(maxiter=500, gtol=1e-10, ftol=1e-14))
    polished = quotient(RadialField(grid, res.x))
    return float(max(vals)), float(max(polished, max(vals)))


def kgn_estimate(p: float, seed: int = 0, grid: Optional[RadialGrid] = None,
                 inflation: float = INFLATION) -> ConstantEstimate:
    """Gagliardo-Nirenberg constant, ``||u||_p^p <= K A^{3(p-2)/4} M^{(6-p)/4}``."""
    if not 2.0 < p < 6.0:
        raise ValueError(f"p must lie in (2, 6), got {p}")
    grid = grid or make_grid(**ESTIMATE_GRID)
    corpus = trial_corpus(grid, seed)
    trial_max, raw = _maximize(lambda v: _log_gn(v, grid, p), grid, corpus,
                               lambda u: gn_quotient(u, p))
    return ConstantEstimate(raw, raw * inflation, inflation, len(corpus), seed,
                            _grid_desc(grid), trial_max)


def kh_estimate(seed: int = 0, grid: Optional[RadialGrid] = None,
                inflation: float = INFLATION) -> ConstantEstimate:
    """HLS-derived constant, ``iint u^2u^2/|x-y| <= K_H ||grad u||_2 M^{3/2}``."""
    grid = grid or make_grid(**ESTIMATE_GRID)
    corpus = trial_corpus(grid, seed)
    trial_max, raw = _maximize(lambda v: _log_hls(v, grid), grid, corpus, hls_quotient)
    return ConstantEstimate(raw, raw * inflation, inflation, len(corpus), seed,
                            _grid_desc(grid), trial_max)


def _grid_desc(grid: RadialGrid) -> dict:
    return dict(node_count=grid.node_count, r_max=grid.r_max, scheme=grid.scheme)


# ---------------------------------------------------------------------------
# thresholds


@dataclass(frozen=True)
class ThresholdConstants:
    K_GN: float
    K_H: float
    S: float
    K: float
    c0: float
    rho0: float
    p: float
    mu: float
    provenance: dict = field(default_factory=dict, compare=False)

    def h(self, t, c: float):
        return h_c(t, c, self)

    @property
    def h_residual(self) -> float:
        """``h_{c0}(sqrt(rho0))`` relative to the size of its largest term."""
        t = np.sqrt(self.rho0)
        return float(h_c(t, self.c0, self) / _h_scale(t, self.c0, self))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["h_residual"] = self.h_residual
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_dict(cls, d: dict) -> "ThresholdConstants":
        names = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in names})


def _base(mu: float, p: float, K_GN: float, S: float) -> float:
    return -3.0 * (3.0 * p - 10.0) * mu * K_GN * S**3 / (4.0 * p)


def thresholds(mu: float, p: float, K_GN: float, S: float, K_H: float = float("nan"),
               provenance: Optional[dict] = None) -> ThresholdConstants:
    """Closed-form ``K``, ``c0`` and ``rho0`` of the barrier ``h_c``."""
    if not 2.0 < p < 10.0 / 3.0:
        raise ValueError(f"thresholds need 2 < p < 10/3 (positive base), got p={p}")
    if not (mu > 0 and K_GN > 0 and S > 0):
        raise ValueError("mu, K_GN and S must be positive")
    base = _base(mu, p, K_GN, S)
    e = 3.0 * (6.0 - p)
    K = (mu / p) * K_GN * base ** ((3.0 * p - 10.0) / e) + base ** (8.0 / e) / (6.0 * S**3)
    c0 = (1.0 / (2.0 * K)) ** 1.5
    rho0 = base ** (4.0 / e) * c0 ** (1.0 / 3.0)
    return ThresholdConstants(K_GN=K_GN, K_H=K_H, S=S, K=K, c0=c0, rho0=rho0, p=p, mu=mu,
                              provenance=dict(provenance or {}))


def h_c(t, c: float, consts: ThresholdConstants):
    """Barrier ``t^2/2 - (mu K_GN/p) c^{(6-p)/4} t^{3(p-2)/2} - t^6/(6 S^3)``."""
    p, mu = consts.p, consts.mu
    t = np.asarray(t, dtype=float)
    out = (0.5 * t**2 - mu * consts.K_GN / p * c ** ((6 - p) / 4) * t ** (1.5 * (p - 2))
           - t**6 / (6.0 * consts.S**3))
    return float(out) if out.ndim == 0 else out


def _h_scale(t, c, consts):
    p = consts.p
    return max(0.5 * t**2, consts.mu * consts.K_GN / p * c ** ((6 - p) / 4) * t ** (1.5 * (p - 2)),
               t**6 / (6.0 * consts.S**3))


def estimate_constants(mu: float, p: float, seed: int = 0, relaxed: bool = False,
                       inflation: float = INFLATION) -> ThresholdConstants:
    """Estimate ``K_GN``, ``K_H``, ``S`` and derive the thresholds."""
    upper = 10.0 / 3.0 if relaxed else 8.0 / 3.0
    if not 2.0 < p < upper:
        raise ValueError(f"p must lie in (2, {upper:.6g}), got {p}")
    s = sobolev_constant()
    kgn = kgn_estimate(p, seed, inflation=inflation)
    kh = kh_estimate(seed, inflation=inflation)
    prov = dict(
        seed=seed, inflation=inflation, corpus_size=kgn.corpus_size, grid=kgn.grid,
        K_GN_raw=kgn.raw, K_H_raw=kh.raw, S_error=s.error, relaxed=relaxed,
        estimate="K_GN and K_H are inflated lower bounds from trial maximization",
    )
    return thresholds(mu, p, kgn.inflated, s.value, K_H=kh.inflated, provenance=prov)
