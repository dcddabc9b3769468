"""The property suite behind the ``verify`` command.

Each ``check_*`` function returns a list of check entries (see
:func:`sweep.check_entry`).  Counts default to the full suite; ``quick``
variants shrink the corpora, not the tolerances.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from . import fiber, kernels
from .constants import estimate_constants, h_c, random_smooth_field
from .field import (FOUR_PI, ModelParams, RadialField, RadialGrid, default_grid, grad_norm_sq,
                    inner, interpolator, lp_power, make_gaussian, make_grid, mass,
                    normalize_mass)
from .functional import energy, energy_value, gradient, pohozaev_Q
from .minimize import MinimizeConfig, ground_state_diagnostics, multi_start
from .sweep import check_entry

THRESHOLD_CASES = tuple((mu, p) for mu in (1.0, 5.0) for p in (2.2, 2.5, 2.6))


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


# ---------------------------------------------------------------------------
# thresholds


def check_thresholds(cases=THRESHOLD_CASES, n_c: int = 10, seed: int = 0) -> list:
    """``h_{c0}(sqrt(rho0)) = 0`` and ``h_c(sqrt(rho0)) > 0`` for sampled ``c < c0``."""
    out = []
    rng = np.random.default_rng(seed)
    for mu, p in cases:
        k = estimate_constants(mu, p, seed)
        out.append(check_entry(f"h_residual[mu={mu:g},p={p:g}]", k.h_residual, 1e-10,
                               _verdict(abs(k.h_residual) <= 1e-10),
                               "h_c0(sqrt(rho0)) = 0", mu=mu, p=p, c0=k.c0, rho0=k.rho0))
        cs = np.sort(rng.uniform(0.0, 1.0, n_c)) * k.c0
        hs = k.h(math.sqrt(k.rho0), cs)
        hs = np.atleast_1d(hs)
        worst = float(hs.min())
        out.append(check_entry(f"h_positive_below_c0[mu={mu:g},p={p:g}]", worst, 0.0,
                               _verdict(worst > 0), "h_c(sqrt(rho0)) > 0 for c < c0",
                               c=cs.tolist()))
    return out


# ---------------------------------------------------------------------------
# oracle equivalence

ORACLE_EXTENT = 8.0
ORACLE_N = 40
ORACLE_TOL = 2e-3


def oracle_fields(grid: RadialGrid) -> list[tuple[str, RadialField]]:
    """Five smooth (even in r) test fields, all negligible beyond the oracle box."""
    r = grid.nodes
    return [
        ("gaussian_1.0", make_gaussian(1.0, 1.0, grid)),
        ("gaussian_1.4", make_gaussian(2.0, 1.4, grid)),
        ("shell", RadialField(grid, (1.0 + r**2) * np.exp(-r**2 / 1.5))),
        ("two_scale", RadialField(grid, np.exp(-r**2) + 0.3 * np.exp(-r**2 / 4.0))),
        ("oscillating", RadialField(grid, np.cos(r) * np.exp(-r**2 / 2.0))),
    ]


def _radial_values(u: RadialField) -> dict:
    return dict(B=kernels.bp_energy(u), H=kernels.coulomb_energy(u),
                Y1=kernels.yukawa_energy(u, 1.0), E=kernels.exp_double_energy(u))


def check_oracle(n_fields: int = 5, n: int = ORACLE_N, extent: float = ORACLE_EXTENT,
                 tol: float = ORACLE_TOL) -> list:
    """Radial reductions against the 3D brute-force sums, energies and potentials."""
    grid = default_grid()
    out = []
    for name, u in oracle_fields(grid)[:n_fields]:
        f3 = kernels.embed_radial(u, extent, n)
        oracle = kernels.oracle_energies(f3)
        radial = _radial_values(u)
        for key in ("B", "H", "Y1", "E"):
            rel = abs(oracle[key] / radial[key] - 1.0)
            out.append(check_entry(f"oracle_{key}[{name}]", rel, tol, _verdict(rel <= tol),
                                   "radial reduction equals the 3D double integral",
                                   radial=radial[key], oracle=oracle[key]))
        # potentials at cell centres along the diagonal
        ax = f3.axis
        idx = np.array([n // 2, n // 2 + 2, n // 2 + 5])
        pts = np.stack([ax[idx]] * 3, axis=1)
        radii = np.linalg.norm(pts, axis=1)
        for label, kern, pot in (("V_C", kernels.COULOMB, kernels.coulomb_potential(u)),
                                 ("V_Y", kernels.yukawa(1.0), kernels.yukawa_potential(u, 1.0))):
            want = interpolator(pot)(radii)
            got = kernels.brute_force_potential(f3, kern, pts)
            rel = float(np.max(np.abs(got / want - 1.0)))
            out.append(check_entry(f"oracle_{label}[{name}]", rel, tol, _verdict(rel <= tol),
                                   "radial potential equals the 3D convolution",
                                   radii=radii.tolist()))
    return out


# ---------------------------------------------------------------------------
# finite-difference consistency

FD_TOL = 1e-5
BETAS = (-1.0, -0.5, 0.0, 0.5, 1.0)
# the identities are exact for the discrete functionals, so a light grid will do
FD_GRID = dict(node_count=1024, r_max=40.0, scheme="graded")


def derivative_fields(n: int, seed: int, grid: RadialGrid) -> list[RadialField]:
    """Seeded random smooth fields with masses in (0.5, 5)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        u = random_smooth_field(grid, rng)
        out.append(normalize_mass(u, rng.uniform(0.5, 5.0)))
    return out


def _central(f: Callable[[float], float], x: float, h: float) -> float:
    """Fourth-order central difference."""
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b))


def check_derivatives(n_fields: int = 20, seed: int = 0, params: ModelParams = None,
                      tol: float = FD_TOL) -> list:
    """Directional derivatives of ``I``, ``Q`` against the fiber slope, ``f'_theta(1)``."""
    params = params or ModelParams(1.0, 2.5, 1.0)
    grid = make_grid(**FD_GRID)
    rng = np.random.default_rng(seed + 1)
    worst = dict(gradient=0.0, pohozaev=0.0, scaling_path=0.0)
    for u in derivative_fields(n_fields, seed, grid):
        p = params.with_c(mass(u))
        v = random_smooth_field(grid, rng)
        v = v * (math.sqrt(mass(u) / mass(v)))
        fd = _central(lambda e: energy_value(u + e * v, p), 0.0, 1e-3)
        worst["gradient"] = max(worst["gradient"], _rel(inner(gradient(u, p), v), fd))
        fd = _central(lambda t: fiber.fiber_value(u, t, p), 1.0, 1e-3)
        worst["pohozaev"] = max(worst["pohozaev"], _rel(pohozaev_Q(u, p), fd))
        for beta in BETAS:
            fd = _central(lambda th: fiber.scaling_path_value(u, th, beta, p), 1.0, 1e-3)
            an = fiber.scaling_path_derivative_at_1(u, beta, p)
            worst["scaling_path"] = max(worst["scaling_path"], _rel(an, fd))
    anchors = dict(gradient="dI(u)[v] = <I'(u), v>", pohozaev="Q(u) = Phi_u'(1)",
                   scaling_path="f'_theta(1,u) closed form")
    return [check_entry(f"fd_{k}", v, tol, _verdict(v <= tol), anchors[k], n_fields=n_fields,
                        seed=seed) for k, v in worst.items()]


# ---------------------------------------------------------------------------
# inequality corpus


def inequality_corpus(n: int, seed: int, grid: RadialGrid) -> list[RadialField]:
    """Random smooth fields with random mass and width, independent of the estimation corpus."""
    rng = np.random.default_rng(seed + 10_000)
    out = []
    for _ in range(n):
        u = random_smooth_field(grid, rng, n_bumps=int(rng.integers(1, 6)))
        u = fiber.dilate(u, rng.uniform(0.5, 2.0))
        out.append(normalize_mass(u, rng.uniform(0.1, 10.0)))
    return out


def check_inequalities(n_fields: int = 100, seed: int = 0, mu: float = 1.0,
                       ps: Sequence[float] = (2.2, 2.5, 2.6)) -> list:
    """Coulomb and GN bounds, ``I >= h_c(||grad u||)`` and ``phi_u >= 0``."""
    grid = default_grid()
    corpus = inequality_corpus(n_fields, seed, grid)
    out = []
    phi_min = min(float(kernels.bp_potential(u).values.min()) for u in corpus)
    out.append(check_entry("phi_nonnegative", phi_min, -1e-12, _verdict(phi_min >= -1e-12),
                           "phi_u >= 0", n_fields=n_fields))
    for p in ps:
        k = estimate_constants(mu, p, seed)
        kh_ratio = gn_ratio = b_ratio = 0.0
        slack = math.inf
        for u in corpus:
            A, c = grad_norm_sq(u), mass(u)
            coul = FOUR_PI * kernels.coulomb_energy(u)
            bound = math.sqrt(A) * c**1.5
            kh_ratio = max(kh_ratio, coul / (k.K_H * bound))
            b_ratio = max(b_ratio, kernels.bp_energy(u) / (k.K_H * bound))
            gn_ratio = max(gn_ratio, lp_power(u, p) / (k.K_GN * A ** (0.75 * (p - 2))
                                                        * c ** ((6 - p) / 4)))
            par = ModelParams(mu, p, c)
            slack = min(slack, (energy_value(u, par) - h_c(math.sqrt(A), c, k))
                        / energy(u, par).scale)
        tag = f"[p={p:g}]"
        out += [
            check_entry("coulomb_bound" + tag, kh_ratio, 1.0, _verdict(kh_ratio <= 1.0),
                        "iint u^2u^2/|x-y| <= K_H ||grad u|| c^{3/2}", K_H=k.K_H),
            check_entry("bp_bound" + tag, b_ratio, 1.0, _verdict(b_ratio <= 1.0),
                        "B(u) <= K_H ||grad u|| c^{3/2}", K_H=k.K_H),
            check_entry("gn_bound" + tag, gn_ratio, 1.0, _verdict(gn_ratio <= 1.0),
                        "C(u) <= K_GN A^{3(p-2)/4} c^{(6-p)/4}", K_GN=k.K_GN),
            check_entry("energy_above_barrier" + tag, slack, -1e-10, _verdict(slack >= -1e-10),
                        "I(u) >= h_c(||grad u||)", mu=mu),
        ]
    return out


# ---------------------------------------------------------------------------
# minimizer at c0/2


def check_minimizer(mu: float = 1.0, p: float = 2.5, frac: float = 0.5, n_starts: int = 8,
                    seed: int = 0, grid: RadialGrid = None) -> list:
    """Multi-start at ``c = frac * c0``: negative level, interior, ``Q`` small, fiber minimum."""
    k = estimate_constants(mu, p, seed)
    params = ModelParams(mu, p, frac * k.c0)
    try:
        res = multi_start(params, k, MinimizeConfig(seed=seed), n_starts, grid)
    except RuntimeError as exc:
        return [check_entry("minimizer_converged", False, None, "fail",
                            "local minimizer exists in V(c)", message=str(exc))]
    d = ground_state_diagnostics(res, params, k)
    return [
        check_entry("minimizer_converged", res.converged, None, _verdict(res.converged),
                    "local minimizer exists in V(c)", iterations=res.iterations),
        check_entry("minimizer_negative_level", d["I"], 0.0, _verdict(d["I"] < 0),
                    "m(c) < 0"),
        check_entry("minimizer_interior", d["V_margin"], 0.0, _verdict(d["V_margin"] > 0),
                    "A(u) < rho0"),
        check_entry("minimizer_pohozaev", d["Q_rel"], 1e-4, _verdict(d["Q_rel"] <= 1e-4),
                    "Q(u) = 0 at critical points"),
        check_entry("minimizer_identities", max(d["nehari_rel"], d["pohozaev_rel"]), 1e-4,
                    _verdict(max(d["nehari_rel"], d["pohozaev_rel"]) <= 1e-4),
                    "Nehari and Pohozaev identities"),
        check_entry("minimizer_fiber_minimum", d["fiber_t1_is_discrete_min"], None,
                    _verdict(d["fiber_t1_is_discrete_min"]), "t = 1 minimizes Phi_u locally"),
    ]


def run_suite(quick: bool = False, seed: int = 0) -> list:
    if quick:
        return (check_thresholds(seed=seed) + check_oracle(n_fields=2)
                + check_derivatives(n_fields=5, seed=seed)
                + check_inequalities(n_fields=25, seed=seed))
    return (check_thresholds(seed=seed) + check_oracle() + check_derivatives(seed=seed)
            + check_inequalities(seed=seed) + check_minimizer(seed=seed))
