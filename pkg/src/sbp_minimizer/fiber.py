"""Dilations, the fiber map and the beta family of scaling paths.

``u^t(x) = t^{3/2} u(tx)`` keeps the mass; along it the local terms scale
as ``A t^2``, ``C t^{3(p-2)/2}``, ``D t^6`` and the nonlocal term becomes
``(t/4) (H - Y_{1/t})``.  The paths ``u_theta(x) = theta^{(1+3beta)/2}
u(theta^beta x)`` carry mass ``theta M``; ``f(theta, u) = I(u_theta) - theta
I(u)`` and its theta-derivative at 1 are evaluated from the same scaling
laws with a single Yukawa evaluation at rate ``theta^{-beta}``.

The raw exponential integral ``R = iint e^{-|x-y|} u^2 u^2`` enters ``Q``
as ``R / 16pi`` and ``f'(1)`` as ``R / 4pi`` inside a factor 1/4.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .field import FOUR_PI, ModelParams, RadialField, grad_norm_sq, interpolator, lp_power, mass
from .functional import energy_value, pohozaev_Q

ESCAPE_TOL = 1e-8


def _rescaled(u: RadialField, amplitude: float, rate: float) -> RadialField:
    """``amplitude * u(rate * r)`` resampled on the same grid."""
    if rate == 1.0:
        return amplitude * u
    if rate < 1.0:
        m = mass(u)
        lost = kernels.tail_mass(u, rate * u.grid.r_max)
        if m > 0 and lost > ESCAPE_TOL * m:
            raise ValueError(
                f"dilation by {rate:g} pushes {lost / m:.2e} of the mass beyond r_max")
    f = interpolator(u)
    return RadialField(u.grid, amplitude * f(rate * u.grid.nodes))


def dilate(u: RadialField, t: float) -> RadialField:
    """``u^t(r) = t^{3/2} u(t r)``."""
    if not t > 0:
        raise ValueError("t must be positive")
    if t == 1.0:
        return u
    return _rescaled(u, t**1.5, t)


def _scaled_terms(u: RadialField, params: ModelParams):
    return grad_norm_sq(u), lp_power(u, params.p), lp_power(u, 6.0)


def fiber_value(u: RadialField, t: float, params: ModelParams) -> float:
    """``Phi_u(t) = I(u^t)`` from the scaling laws."""
    if not t > 0:
        raise ValueError("t must be positive")
    A, C, D = _scaled_terms(u, params)
    p = params.p
    if t == 1.0:
        nonlocal_ = kernels.bp_energy(u)
    else:
        nonlocal_ = t * (kernels.coulomb_energy(u) - kernels.yukawa_energy(u, 1.0 / t))
    return (0.5 * t**2 * A + 0.25 * nonlocal_ - params.mu * t ** (1.5 * (p - 2)) * C / p
            - t**6 * D / 6.0)


def fiber_derivative_at_1(u: RadialField, params: ModelParams) -> float:
    return pohozaev_Q(u, params)


@dataclass(frozen=True)
class FiberScan:
    t_values: np.ndarray
    phi_values: np.ndarray
    q_at_1: float
    argmin_local: Optional[float]

    def to_csv(self, path) -> None:
        _write_csv(path, ("t", "phi"), zip(self.t_values, self.phi_values))
        Path(str(path) + ".json").write_text(json.dumps(
            {"q_at_1": self.q_at_1, "argmin_local": self.argmin_local}, indent=2))


def local_minimum(t: np.ndarray, phi: np.ndarray) -> Optional[float]:
    """First interior scan point where the discrete slope turns from negative to non-negative."""
    for i in range(1, len(t) - 1):
        if phi[i] - phi[i - 1] < 0 and phi[i + 1] - phi[i] >= 0:
            return float(t[i])
    return None


def fiber_scan(u: RadialField, params: ModelParams, t_values: Sequence[float]) -> FiberScan:
    t = np.asarray(t_values, dtype=float)
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ValueError("t values must be positive and strictly increasing")
    phi = np.array([fiber_value(u, ti, params) for ti in t])
    return FiberScan(t, phi, pohozaev_Q(u, params), local_minimum(t, phi))


def pohozaev_rescale(u: RadialField, params: ModelParams, bracket=(0.5, 2.0),
                     step: float = 1e-4) -> RadialField:
    """Dilate ``u`` onto ``{Q = 0}`` along its fiber (a diagnostic, not a solver mode)."""
    def dphi(t):
        return (fiber_value(u, t * (1 + step), params)
                - fiber_value(u, t * (1 - step), params)) / (2 * step * t)
    t_star = brentq(dphi, *bracket, xtol=1e-12)
    return dilate(u, t_star)


# ---------------------------------------------------------------------------
# scaling paths


def scaling_path_field(u: RadialField, theta: float, beta: float) -> RadialField:
    """``u_theta(r) = theta^{(1+3 beta)/2} u(theta^beta r)``; mass ``theta M``."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    if theta == 1.0:
        return u
    return _rescaled(u, theta ** ((1 + 3 * beta) / 2), theta**beta)


def scaling_path_value(u: RadialField, theta: float, beta: float,
                       params: ModelParams) -> float:
    """``f(theta, u) = I(u_theta) - theta I(u)``."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    if theta == 1.0:
        return 0.0
    A, C, D = _scaled_terms(u, params)
    B = kernels.bp_energy(u)
    H = kernels.coulomb_energy(u)
    Y = kernels.yukawa_energy(u, theta ** (-beta))
    p, mu = params.p, params.mu
    return (0.5 * (theta ** (1 + 2 * beta) - theta) * A
            + 0.25 * (theta ** (2 + beta) * (H - Y) - theta * B)
            - mu / p * (theta ** ((1 + 3 * beta) * p / 2 - 3 * beta) - theta) * C
            - (theta ** (3 * (1 + 2 * beta)) - theta) * D / 6.0)


def scaling_path_derivative_at_1(u: RadialField, beta: float, params: ModelParams) -> float:
    """``f'_theta(1, u)``, affine in ``beta``."""
    A, C, D = _scaled_terms(u, params)
    B = kernels.bp_energy(u)
    R = kernels.exp_double_integral(u)
    p, mu = params.p, params.mu
    return (beta * A + 0.25 * (-beta / FOUR_PI * R + (1 + beta) * B)
            - mu / p * ((1 + 3 * beta) * p / 2 - 3 * beta - 1) * C
            - (3 * (1 + 2 * beta) - 1) * D / 6.0)


def scaling_path_coefficients(u: RadialField, params: ModelParams) -> tuple[float, float]:
    """Intercept and slope of ``beta -> f'_theta(1, u)``."""
    f0 = scaling_path_derivative_at_1(u, 0.0, params)
    return f0, scaling_path_derivative_at_1(u, 1.0, params) - f0


@dataclass(frozen=True)
class ScalingPathProbe:
    beta: float
    theta_values: np.ndarray
    f_values: np.ndarray
    fprime_at_1: float

    def to_csv(self, path) -> None:
        _write_csv(path, ("theta", "f"), zip(self.theta_values, self.f_values))
        Path(str(path) + ".json").write_text(json.dumps(
            {"beta": self.beta, "fprime_at_1": self.fprime_at_1}, indent=2))


def scaling_path_probe(u: RadialField, beta: float, params: ModelParams,
                       theta_values: Sequence[float]) -> ScalingPathProbe:
    th = np.asarray(theta_values, dtype=float)
    f = np.array([scaling_path_value(u, t, beta, params) for t in th])
    return ScalingPathProbe(float(beta), th, f, scaling_path_derivative_at_1(u, beta, params))


def resampled_path_value(u: RadialField, theta: float, beta: float,
                         params: ModelParams) -> float:
    """``f(theta, u)`` by building ``u_theta`` on the grid; an independent check."""
    return energy_value(scaling_path_field(u, theta, beta), params) - theta * energy_value(u, params)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{x:.17g}" for x in row])
