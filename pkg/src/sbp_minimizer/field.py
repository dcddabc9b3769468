"""Radial fields on a truncated half-line.

A radial function ``u(|x|)`` on R^3 is stored by its samples on nodes
``0 < r_1 < ... < r_N = r_max``.  Every volume integral is reduced to
``4*pi * int_0^rmax f(r) r^2 dr`` and evaluated with node weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial
from pathlib import Path
from typing import Union

import numpy as np
from scipy.special import bernoulli

FOUR_PI = 4.0 * np.pi

SCHEMES = ("uniform", "graded")

# length scale below which the graded grid is roughly uniform
GRADED_CORE = 1.0


def _end_block(size: int, degree: int, first: int) -> np.ndarray:
    """Corrections to unit weights on ``size`` end nodes ``first, first+1, ...``.

    Chosen (minimum norm) so that unit spacing quadrature on nodes
    ``first, first+1, ...`` integrates polynomials of the given degree exactly
    over ``[0, inf)``; ``first=1`` leaves the endpoint itself out of the rule.
    The unit-weight tail from the junction node onward is accounted for by
    its Euler-Maclaurin expansion.
    """
    junction = size + first
    nodes = np.arange(first, first + size, dtype=float) / junction
    rows, rhs = [], []
    for k in range(degree + 1):
        # monomials in x / junction keep the system well conditioned
        tail = 0.5
        for j in range(1, degree // 2 + 2):
            m = 2 * j - 1
            if m <= k:
                tail -= (bernoulli(2 * j)[-1] / factorial(2 * j)
                         * factorial(k) / factorial(k - m) / junction**m)
        rows.append(nodes**k)
        rhs.append(junction / (k + 1) - tail)
    A = np.array(rows)
    rhs = np.array(rhs)
    return np.linalg.lstsq(A, rhs - A.sum(axis=1), rcond=None)[0]


@lru_cache(maxsize=None)
def _unit_weights(n: int) -> np.ndarray:
    """Positive weights on nodes ``1..n`` for ``int_0^n g(x) dx``, high order at both ends."""
    if n >= 96:
        left, right = _end_block(32, 9, 1), _end_block(16, 9, 0)
    else:
        left, right = _end_block(6, 3, 1), _end_block(4, 3, 0)
    w = np.ones(n)
    w[: left.size] += left
    w[n - right.size:] += right[::-1]
    if not np.all(w > 0):
        raise AssertionError("end-corrected weights lost positivity")
    return w


@dataclass(frozen=True)
class RadialGrid:
    """Nodes and end-corrected trapezoid weights on ``(0, r_max]``.

    Two grids are the same grid when their descriptors agree; the arrays are
    derived and excluded from comparison and hashing.
    """

    node_count: int
    r_max: float
    scheme: str = "graded"
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)
    # midpoints and widths of the cells between consecutive nodes
    mid: np.ndarray = field(init=False, repr=False, compare=False)
    widths: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.node_count) != self.node_count or self.node_count < 16:
            raise ValueError(f"node_count must be an integer >= 16, got {self.node_count}")
        if not (np.isfinite(self.r_max) and self.r_max > 0):
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown grid scheme {self.scheme!r}")
        object.__setattr__(self, "node_count", int(self.node_count))
        object.__setattr__(self, "r_max", float(self.r_max))

        n = self.node_count
        x = np.arange(1, n + 1) / n
        if self.scheme == "uniform":
            r = self.r_max * x
            dr = np.full(n, self.r_max)
        else:
            a = min(GRADED_CORE, self.r_max / 8.0)
            b = np.arcsinh(self.r_max / a)
            r = a * np.sinh(b * x)
            r[-1] = self.r_max
            dr = a * b * np.cosh(b * x)
        # a rule in the map variable x, pulled back through dr/dx
        w = _unit_weights(n) * dr / n
        w *= self.r_max / w.sum()
        for name, arr in (("nodes", r), ("weights", w),
                          ("mid", 0.5 * (r[1:] + r[:-1])), ("widths", np.diff(r))):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def volume_weights(self) -> np.ndarray:
        """Weights for ``int_{R^3} f dx`` of a radial ``f``."""
        return FOUR_PI * self.nodes**2 * self.weights

    def integrate(self, f) -> float:
        """``int_0^rmax f(r) dr`` by the node quadrature."""
        return float(np.dot(self.weights, f))


def make_grid(node_count: int, r_max: float, scheme: str = "graded") -> RadialGrid:
    return RadialGrid(node_count, r_max, scheme)


DEFAULT_GRID = dict(node_count=2048, r_max=40.0, scheme="graded")


def default_grid() -> RadialGrid:
    return RadialGrid(**DEFAULT_GRID)


@dataclass(frozen=True, eq=False)
class RadialField:
    """Samples of a radial function.  Immutable; arithmetic returns new fields."""

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.node_count,):
            raise ValueError(f"expected {self.grid.node_count} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def _other(self, other):
        if isinstance(other, RadialField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return RadialField(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return RadialField(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return RadialField(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return RadialField(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return RadialField(self.grid, self.values / self._other(other))

    def __neg__(self):
        return RadialField(self.grid, -self.values)

    def allclose(self, other: "RadialField", rtol=1e-12, atol=0.0) -> bool:
        return np.allclose(self.values, self._other(other), rtol=rtol, atol=atol)


def zeros(grid: RadialGrid) -> RadialField:
    return RadialField(grid, np.zeros(grid.node_count))


def from_function(grid: RadialGrid, f) -> RadialField:
    return RadialField(grid, f(grid.nodes))


@dataclass(frozen=True)
class ModelParams:
    """Coefficient ``mu``, exponent ``p`` and prescribed mass ``c``.

    ``relaxed=True`` admits ``2 < p < 10/3``, the range on which the barrier
    thresholds still exist; solver runs use ``2 < p < 8/3``.
    """

    mu: float
    p: float
    c: float
    relaxed: bool = False

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        upper = 10.0 / 3.0 if self.relaxed else 8.0 / 3.0
        if not 2.0 < self.p < upper:
            raise ValueError(f"p must lie in (2, {upper:.6g}), got {self.p}")

    def with_c(self, c: float) -> "ModelParams":
        return ModelParams(self.mu, self.p, c, self.relaxed)


def make_gaussian(c: float, sigma: float, grid: RadialGrid) -> RadialField:
    """Gaussian of mass ``c`` and width ``sigma``; ``int |grad u|^2 = 3c/(2 sigma^2)``."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    amp = np.sqrt(c) * (np.pi * sigma**2) ** (-0.75)
    return RadialField(grid, amp * np.exp(-grid.nodes**2 / (2.0 * sigma**2)))


def mass(u: RadialField) -> float:
    return float(np.dot(u.grid.volume_weights, u.values**2))


def inner(u: RadialField, v: RadialField) -> float:
    """L^2(R^3) pairing of two radial fields."""
    return float(np.dot(u.grid.volume_weights, u.values * u._other(v)))


def lp_power(u: RadialField, q: float) -> float:
    """``int |u|^q dx``."""
    if q < 2:
        raise ValueError("exponent must be >= 2")
    return float(np.dot(u.grid.volume_weights, np.abs(u.values) ** q))


def cell_slopes(u: RadialField) -> np.ndarray:
    """Difference quotients on the cells between consecutive nodes."""
    return np.diff(u.values) / u.grid.widths


def grad_norm_sq(u: RadialField) -> float:
    """``int |grad u|^2 dx`` with staggered differences and the midpoint rule.

    The cell ``[0, r_1]`` carries no flux (even extension through the origin).
    """
    g = u.grid
    return float(FOUR_PI * np.sum(cell_slopes(u) ** 2 * g.mid**2 * g.widths))


def neg_laplacian(u: RadialField) -> RadialField:
    """The L^2 gradient of ``grad_norm_sq / 2``, i.e. a conservative ``-u'' - 2u'/r``."""
    g = u.grid
    flux = g.mid**2 * cell_slopes(u)
    out = np.zeros(g.node_count)
    out[:-1] -= flux
    out[1:] += flux
    return RadialField(g, out / (g.nodes**2 * g.weights))


def normalize_mass(u: RadialField, c: float) -> RadialField:
    """Rescale ``u`` onto the sphere ``{mass = c}``."""
    m = mass(u)
    if not m > 1e-14 * max(c, 1.0):
        raise ValueError(f"cannot normalize a field of mass {m:.3g}")
    return RadialField(u.grid, u.values * np.sqrt(c / m))


def interpolator(u: RadialField):
    """Even cubic spline through the samples; zero beyond ``r_max``."""
    from scipy.interpolate import CubicSpline

    r = u.grid.nodes
    spline = CubicSpline(np.concatenate((-r[::-1], r)),
                         np.concatenate((u.values[::-1], u.values)),
                         bc_type="not-a-knot")
    r_max = u.grid.r_max

    def f(s):
        s = np.abs(np.asarray(s, dtype=float))
        return np.where(s <= r_max, spline(np.minimum(s, r_max)), 0.0)

    return f


def resample(u: RadialField, grid: RadialGrid) -> RadialField:
    if grid == u.grid:
        return u
    return RadialField(grid, interpolator(u)(grid.nodes))


def save_field(u: RadialField, path: Union[str, Path]) -> None:
    """Write ``r u(r)`` columns at 17 significant digits under a descriptor header."""
    g = u.grid
    lines = [f"# node_count={g.node_count} r_max={g.r_max!r} scheme={g.scheme}"]
    lines += [f"{r:.17g} {v:.17g}" for r, v in zip(g.nodes, u.values)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_field(path: Union[str, Path]) -> RadialField:
    text = Path(path).read_text().splitlines()
    header = text[0].lstrip("#").split()
    meta = dict(item.split("=", 1) for item in header)
    grid = RadialGrid(int(meta["node_count"]), float(meta["r_max"]), meta["scheme"])
    data = np.loadtxt(text[1:], ndmin=2)
    if not np.array_equal(data[:, 0], grid.nodes):
        raise ValueError("stored nodes do not match the header grid")
    return RadialField(grid, data[:, 1])
