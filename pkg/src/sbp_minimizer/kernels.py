"""Nonlocal terms of radial fields, and a brute-force 3D oracle.

Radial reductions use the exact spherical average of each kernel between
two shells of radii ``r`` and ``s``:

    <1/w>       = 1 / max(r, s)
    <e^{-mw}/w> = (e^{-m|r-s|} - e^{-m(r+s)}) / (2 m r s)
    <e^{-w}>    = ((1+|r-s|) e^{-|r-s|} - (1+r+s) e^{-(r+s)}) / (2 r s)

With ``rho = u^2`` the shell-pair sums are dense ``N x N`` products, cached per
grid.  Normalizations used throughout the package:

    B(u) = (1/4pi) iint (1 - e^{-|x-y|})/|x-y| rho rho   (= int phi_u u^2)
    H(u) = (1/4pi) iint rho rho / |x-y|
    Y_m(u) = (1/4pi) iint e^{-m|x-y|}/|x-y| rho rho
    R(u) = iint e^{-|x-y|} rho rho,   E(u) = R(u) / (16 pi)
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.signal import fftconvolve

from .field import FOUR_PI, ModelParams, RadialField, RadialGrid, interpolator

# ---------------------------------------------------------------------------
# radial pair matrices


@lru_cache(maxsize=4)
def _coulomb_matrix(grid: RadialGrid) -> np.ndarray:
    r = grid.nodes
    s = r[None, :]
    k = FOUR_PI * s**2 * grid.weights[None, :] / np.maximum(r[:, None], s)
    k.setflags(write=False)
    return k


def _yukawa_kernel(grid: RadialGrid, m: float) -> np.ndarray:
    r = grid.nodes[:, None]
    s = grid.nodes[None, :]
    near = -np.expm1(-2.0 * m * np.minimum(r, s))
    k = (2.0 * np.pi / m) * (s * grid.weights[None, :] / r) * np.exp(-m * np.abs(r - s)) * near
    return k


@lru_cache(maxsize=8)
def _yukawa_matrix(grid: RadialGrid, m: float) -> np.ndarray:
    k = _yukawa_kernel(grid, m)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=4)
def _bp_matrix(grid: RadialGrid) -> np.ndarray:
    # phi_u = K rho; the two kernels are subtracted pairwise so phi_u >= 0
    k = (_coulomb_matrix(grid) - _yukawa_matrix(grid, 1.0)) / FOUR_PI
    k.setflags(write=False)
    return k


@lru_cache(maxsize=4)
def _exp_matrix(grid: RadialGrid) -> np.ndarray:
    """Matrix ``M`` with ``R(u) = rho^T M rho``."""
    r = grid.nodes[:, None]
    s = grid.nodes[None, :]
    d = np.abs(r - s)
    t = r + s
    bracket = (1.0 + d) * np.exp(-d) - (1.0 + t) * np.exp(-t)
    wr = grid.weights * grid.nodes
    k = 8.0 * np.pi**2 * wr[:, None] * wr[None, :] * bracket
    k.setflags(write=False)
    return k


def _check_rate(m: float) -> float:
    m = float(m)
    if not (m > 0 and np.isfinite(m)):
        raise ValueError(f"screening rate must be positive, got {m}")
    return m


def coulomb_potential(u: RadialField) -> RadialField:
    """``V_C(x) = int u^2(y)/|x-y| dy`` by Newton's shell theorem."""
    return RadialField(u.grid, _coulomb_matrix(u.grid) @ u.values**2)


def yukawa_potential(u: RadialField, m: float) -> RadialField:
    """``V_Y(x) = int e^{-m|x-y|}/|x-y| u^2(y) dy``."""
    m = _check_rate(m)
    k = _yukawa_matrix(u.grid, m) if m == 1.0 else _yukawa_kernel(u.grid, m)
    return RadialField(u.grid, k @ u.values**2)


def bp_potential(u: RadialField) -> RadialField:
    """``phi_u = (V_C - V_Y[m=1]) / 4pi``, the Bopp-Podolsky potential."""
    return RadialField(u.grid, _bp_matrix(u.grid) @ u.values**2)


def _volume_dot(u: RadialField, pot: np.ndarray) -> float:
    return float(np.dot(u.grid.volume_weights, pot * u.values**2))


def bp_energy(u: RadialField) -> float:
    """``B(u) = int phi_u u^2``."""
    return _volume_dot(u, _bp_matrix(u.grid) @ u.values**2)


def coulomb_energy(u: RadialField) -> float:
    """``H(u) = (1/4pi) iint u^2 u^2 / |x-y|``."""
    return _volume_dot(u, _coulomb_matrix(u.grid) @ u.values**2) / FOUR_PI


def yukawa_energy(u: RadialField, m: float) -> float:
    """``Y_m(u) = (1/4pi) iint e^{-m|x-y|}/|x-y| u^2 u^2``."""
    return _volume_dot(u, yukawa_potential(u, m).values) / FOUR_PI


def exp_double_integral(u: RadialField) -> float:
    """Raw ``R(u) = iint e^{-|x-y|} u^2(x) u^2(y) dx dy``."""
    rho = u.values**2
    return float(rho @ _exp_matrix(u.grid) @ rho)


def exp_double_energy(u: RadialField) -> float:
    """``E(u) = R(u) / 16pi``, the exponential term of the Pohozaev functional."""
    return exp_double_integral(u) / (16.0 * np.pi)


def tail_mass(u: RadialField, radius: float) -> float:
    """Mass of ``u`` outside the ball of given radius (quadrature estimate)."""
    g = u.grid
    sel = g.nodes > radius
    return float(np.dot(g.volume_weights[sel], u.values[sel] ** 2))


# ---------------------------------------------------------------------------
# 3D oracle


MAX_ORACLE_N = 48


@dataclass(frozen=True)
class KernelKind:
    """One of ``coulomb``, ``yukawa`` (with rate ``m``), ``bp``, ``pure_exponential``."""

    tag: str
    m: float = 1.0

    def __post_init__(self):
        if self.tag not in ("coulomb", "yukawa", "bp", "pure_exponential"):
            raise ValueError(f"unknown kernel {self.tag!r}")
        if self.tag == "yukawa":
            _check_rate(self.m)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.tag == "coulomb":
                return 1.0 / w
            if self.tag == "yukawa":
                return np.exp(-self.m * w) / w
            if self.tag == "bp":
                return np.where(w > 0, -np.expm1(-w) / w, 1.0)
            return np.exp(-w)

    @property
    def singular(self) -> bool:
        return self.tag in ("coulomb", "yukawa")


COULOMB = KernelKind("coulomb")
BP = KernelKind("bp")
PURE_EXP = KernelKind("pure_exponential")


def yukawa(m: float) -> KernelKind:
    return KernelKind("yukawa", m)


# Z(s) = sum' |j|^-s over the simple cubic lattice, continued analytically.
# The punctured lattice sum of f(x) |x|^s misses -Z(-s) h^{3+s} f(0) at
# leading order; these are -Z(1) and -Z(-1).
LATTICE_COULOMB = 2.8372974794806196
LATTICE_LINEAR = 0.2665962787183934


def _near_zero(kernel: KernelKind) -> tuple[float, float, float]:
    """``(a, b, c)`` with ``kernel(w) = a/w + b + c w + O(w^2)``."""
    return {
        "coulomb": (1.0, 0.0, 0.0),
        "yukawa": (1.0, -kernel.m, 0.5 * kernel.m**2),
        "bp": (0.0, 1.0, -0.5),
        "pure_exponential": (0.0, 1.0, -1.0),
    }[kernel.tag]


def self_term(kernel: KernelKind, h: float) -> float:
    """Kernel value used for the coincident cell pair.

    The ``1/w`` and ``w`` parts get their lattice corrections and the
    constant part is kept.
    """
    a, b, c = _near_zero(kernel)
    return a * LATTICE_COULOMB / h + b + c * LATTICE_LINEAR * h


def correction_stencil(kernel: KernelKind, h: float) -> tuple[float, float]:
    """Kernel values at displacement 0 and at the six nearest neighbours.

    Besides :func:`self_term`, the ``1/w`` part misses ``-(h^4/6) Z(-1) Lap f(0)``;
    it is applied as a 7-point Laplacian, leaving an ``O(h^6)`` error for
    smooth fields.
    """
    a = _near_zero(kernel)[0]
    lap = a * LATTICE_LINEAR / (6.0 * h)
    return self_term(kernel, h) - 6.0 * lap, float(kernel(np.array(h))) + lap


@dataclass(frozen=True, eq=False)
class Field3D:
    """Cell-centred samples on the cube ``[-extent, extent]^3`` with ``n`` cells per axis."""

    extent: float
    n: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.n,) * 3:
            raise ValueError(f"expected shape {(self.n,) * 3}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def h(self) -> float:
        return 2.0 * self.extent / self.n

    @property
    def axis(self) -> np.ndarray:
        return -self.extent + (np.arange(self.n) + 0.5) * self.h

    def same_grid(self, other: "Field3D") -> bool:
        return self.n == other.n and self.extent == other.extent

    def __add__(self, other: "Field3D") -> "Field3D":
        if not self.same_grid(other):
            raise ValueError("fields live on different 3D grids")
        return Field3D(self.extent, self.n, self.values + other.values)

    def lp_power(self, q: float) -> float:
        return float(np.sum(np.abs(self.values) ** q) * self.h**3)

    def mass(self) -> float:
        return self.lp_power(2.0)

    def shifted(self, cells: tuple[int, int, int]) -> "Field3D":
        """Translate by whole cells, filling vacated cells with zeros."""
        out = np.zeros_like(self.values)
        src = []
        dst = []
        for k in cells:
            if k >= 0:
                src.append(slice(0, self.n - k))
                dst.append(slice(k, self.n))
            else:
                src.append(slice(-k, self.n))
                dst.append(slice(0, self.n + k))
        out[tuple(dst)] = self.values[tuple(src)]
        return Field3D(self.extent, self.n, out)


def _check_n(n: int) -> None:
    if n > MAX_ORACLE_N:
        raise ValueError(f"oracle grids are limited to n <= {MAX_ORACLE_N}, got {n}")


def field3d_from_function(f, extent: float, n: int, center=(0.0, 0.0, 0.0)) -> Field3D:
    """Sample ``f(|x - center|)`` at the cell centres."""
    _check_n(n)
    ax = -extent + (np.arange(n) + 0.5) * (2.0 * extent / n)
    X, Y, Z = np.meshgrid(ax - center[0], ax - center[1], ax - center[2], indexing="ij")
    return Field3D(extent, n, f(np.sqrt(X**2 + Y**2 + Z**2)))


def embed_radial(u: RadialField, extent: float, n: int, center=(0.0, 0.0, 0.0)) -> Field3D:
    """Sample a radial field on a Cartesian grid by spline interpolation."""
    return field3d_from_function(interpolator(u), extent, n, center)


def _kernel_on_displacements(kernel: KernelKind, n: int, h: float) -> np.ndarray:
    k = np.arange(-(n - 1), n) * h
    X, Y, Z = np.meshgrid(k, k, k, indexing="ij")
    w = np.sqrt(X**2 + Y**2 + Z**2)
    kv = kernel(w)
    centre, neighbour = correction_stencil(kernel, h)
    c = n - 1
    kv[c, c, c] = centre
    for axis in range(3):
        for step in (-1, 1):
            idx = [c, c, c]
            idx[axis] += step
            kv[tuple(idx)] = neighbour
    return kv


def brute_force_double(u: Field3D, kernel: KernelKind, v: Optional[Field3D] = None) -> float:
    """``iint K(|x-y|) u^2(x) v^2(y) dx dy`` as a sum over all cell pairs.

    The pair sum is regrouped by displacement: the displacement histogram of
    ``u^2`` against ``v^2`` is a full (non-periodic) correlation, after which
    every displacement is weighted by the kernel.  Cells at displacement 0
    and their nearest neighbours carry the lattice corrections of
    :func:`correction_stencil`.
    """
    _check_n(u.n)
    v = u if v is None else v
    if not u.same_grid(v):
        raise ValueError("fields live on different 3D grids")
    a = u.values**2
    b = v.values**2
    if not (a.any() and b.any()):
        return 0.0
    corr = fftconvolve(a, b[::-1, ::-1, ::-1], mode="full")
    kv = _kernel_on_displacements(kernel, u.n, u.h)
    return float(np.sum(kv * corr) * u.h**6)


def brute_force_potential(u: Field3D, kernel: KernelKind, points: np.ndarray) -> np.ndarray:
    """``int K(|x-y|) u^2(y) dy`` at arbitrary points by direct summation."""
    _check_n(u.n)
    ax = u.axis
    X, Y, Z = np.meshgrid(ax, ax, ax, indexing="ij")
    rho = (u.values**2).ravel()
    ys = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    out = []
    centre, neighbour = correction_stencil(kernel, u.h)
    for p in np.atleast_2d(points):
        w = np.linalg.norm(ys - p, axis=1)
        hit = w < 1e-9 * u.h
        kv = np.where(hit, centre, kernel(np.where(hit, 1.0, w)))
        # the stencil only applies when p sits on a cell centre
        if hit.any():
            kv[np.abs(w - u.h) < 1e-9 * u.h] = neighbour
        out.append(np.dot(kv, rho) * u.h**3)
    return np.array(out)


def oracle_energies(u: Field3D) -> dict:
    """B, H, E and ``Y_1`` of a 3D field under the package normalizations."""
    return {
        "B": brute_force_double(u, BP) / FOUR_PI,
        "H": brute_force_double(u, COULOMB) / FOUR_PI,
        "Y1": brute_force_double(u, yukawa(1.0)) / FOUR_PI,
        "E": brute_force_double(u, PURE_EXP) / (16.0 * np.pi),
    }


def combined_term(u: Field3D, params: ModelParams) -> float:
    """``T(u) = B/4 - mu C/p - D/6`` evaluated with the oracle."""
    b = brute_force_double(u, BP) / FOUR_PI
    return 0.25 * b - params.mu * u.lp_power(params.p) / params.p - u.lp_power(6.0) / 6.0


def splitting_defect(u1: Field3D, u2: Field3D, params: ModelParams) -> float:
    """``T(u1 + u2) - T(u1) - T(u2)``."""
    if not u1.same_grid(u2):
        raise ValueError("fields live on different 3D grids")
    if not u2.values.any():
        return 0.0
    if not u1.values.any():
        return 0.0
    return combined_term(u1 + u2, params) - combined_term(u1, params) - combined_term(u2, params)


def cross_term_budget(c1: float, c2: float, d: float) -> float:
    """Upper budget for the splitting defect of two bumps ``d`` apart."""
    c = c1 + c2
    return (c1 * c2 + c1 * c + c2 * c + c**2) / d
