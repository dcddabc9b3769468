"""Energy, gradient, Pohozaev functional and the identities at critical points.

With ``A = int |grad u|^2``, ``B = int phi_u u^2``, ``C = int |u|^p`` and
``D = int |u|^6`` the energy is ``I = A/2 + B/4 - mu C/p - D/6`` and
``T = I - A/2``.  The Pohozaev functional is the derivative of the energy
along the mass-preserving dilation at ``t = 1``:

    Q = A + B/4 - E - 3 mu (p-2)/(2p) C - D,     E = R / 16pi.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import kernels
from .constants import ThresholdConstants, h_c
from .field import ModelParams, RadialField, grad_norm_sq, lp_power, mass, neg_laplacian

BREAKDOWN_KEYS = ("A", "B", "C", "D", "H", "E", "T", "I", "Q", "lambda", "h_bound")


@dataclass(frozen=True)
class EnergyBreakdown:
    A: float
    B: float
    C: float
    D: float
    H: float
    E: float
    T: float
    I: float
    Q: float
    lam: float
    h_bound: Optional[float] = None

    @property
    def scale(self) -> float:
        """Magnitude of the terms, the yardstick for relative residuals."""
        return self.A + self.B + self.C + self.D

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return {k: d[k] for k in BREAKDOWN_KEYS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "EnergyBreakdown":
        d = dict(d)
        d["lam"] = d.pop("lambda")
        return cls(**d)


def _terms(u: RadialField, params: ModelParams) -> tuple[float, float, float, float]:
    return (grad_norm_sq(u), kernels.bp_energy(u), lp_power(u, params.p), lp_power(u, 6.0))


def assemble_energy(A, B, C, D, params: ModelParams) -> float:
    return 0.5 * A + 0.25 * B - params.mu * C / params.p - D / 6.0


def energy_value(u: RadialField, params: ModelParams) -> float:
    """``I(u)`` alone; cheaper than :func:`energy`."""
    return assemble_energy(*_terms(u, params), params)


def pohozaev_from_terms(A, B, C, E, D, params: ModelParams) -> float:
    p = params.p
    return A + 0.25 * B - E - 3.0 * params.mu * (p - 2.0) / (2.0 * p) * C - D


def energy(u: RadialField, params: ModelParams,
           consts: Optional[ThresholdConstants] = None) -> EnergyBreakdown:
    """All scalar functionals of ``u``.  ``h_bound`` needs the threshold constants."""
    A, B, C, D = _terms(u, params)
    H = kernels.coulomb_energy(u)
    E = kernels.exp_double_energy(u)
    I = assemble_energy(A, B, C, D, params)
    Q = pohozaev_from_terms(A, B, C, E, D, params)
    m = mass(u)
    lam = (A + B - params.mu * C - D) / m if m > 0 else 0.0
    hb = None
    if consts is not None and A > 0:
        hb = h_c(np.sqrt(A), params.c, consts)
    return EnergyBreakdown(A=A, B=B, C=C, D=D, H=H, E=E, T=I - 0.5 * A, I=I, Q=Q, lam=lam,
                           h_bound=hb)


def gradient(u: RadialField, params: ModelParams) -> RadialField:
    """L^2 gradient ``-Lap u + phi_u u - mu |u|^{p-2} u - |u|^4 u`` of the discrete energy."""
    v = u.values
    phi = kernels.bp_potential(u).values
    g = (neg_laplacian(u).values + phi * v - params.mu * np.abs(v) ** (params.p - 2.0) * v
         - v**5)
    return RadialField(u.grid, g)


def pohozaev_Q(u: RadialField, params: ModelParams) -> float:
    A, B, C, D = _terms(u, params)
    return pohozaev_from_terms(A, B, C, kernels.exp_double_energy(u), D, params)


def lagrange_lambda(u: RadialField, params: ModelParams) -> float:
    """Multiplier from the Nehari identity ``lambda c = A + B - mu C - D``."""
    m = mass(u)
    if not m > 0:
        raise ValueError("lambda is undefined for a zero-mass field")
    A, B, C, D = _terms(u, params)
    return (A + B - params.mu * C - D) / m


def identity_residuals(u: RadialField, params: ModelParams, lam: float) -> tuple[float, float]:
    """Signed residuals of the Nehari and Pohozaev identities.

    Nehari:   A + B - lambda M - mu C - D
    Pohozaev: A/2 + 5B/4 + E - 3 lambda M/2 - 3 mu C/p - D/2

    For every field and every ``lambda``, ``1.5 * nehari - pohozaev = Q``.
    """
    A, B, C, D = _terms(u, params)
    E = kernels.exp_double_energy(u)
    M = mass(u)
    mu, p = params.mu, params.p
    nehari = A + B - lam * M - mu * C - D
    pohozaev = 0.5 * A + 1.25 * B + E - 1.5 * lam * M - 3.0 * mu / p * C - 0.5 * D
    return nehari, pohozaev


def lower_bound_h(u: RadialField, params: ModelParams,
                  consts: ThresholdConstants) -> tuple[float, float]:
    """``h_c(||grad u||_2)`` and the slack ``I(u) - h_c(||grad u||_2)``."""
    m = mass(u)
    if abs(m - params.c) > 1e-8 * max(params.c, 1.0):
        raise ValueError(f"field mass {m!r} does not match c={params.c!r}")
    A, B, C, D = _terms(u, params)
    bound = h_c(np.sqrt(A), params.c, consts)
    return bound, assemble_energy(A, B, C, D, params) - bound
