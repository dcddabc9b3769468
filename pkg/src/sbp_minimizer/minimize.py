"""Projected descent on the mass sphere inside the ball ``{A < rho0}``.

Each step moves along the tangent direction built from the Sobolev (H^1)
gradient ``(-Lap + alpha)^{-1} g`` and retracts by mass renormalization.
Step lengths come from Armijo backtracking on the directional derivative;
steps that would leave ``V(c) = {A < rho0}`` are shrunk or rejected per
``rho0_policy``.
"""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.linalg import solveh_banded

from . import fiber
from .constants import ThresholdConstants
from .field import (ModelParams, RadialField, RadialGrid, default_grid, grad_norm_sq, inner,
                    make_gaussian, mass, normalize_mass, save_field)
from .functional import EnergyBreakdown, energy, energy_value, gradient, identity_residuals

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MinimizeConfig:
    max_iter: int = 4000
    grad_tol: float = 1e-8
    step_init: Optional[float] = None  # None: 1 / (1 + A(u0))
    # the preconditioned Hessian tends to 1 on high frequencies; steps above 2 amplify them
    step_max: float = 1.5
    armijo: float = 1e-4
    shrink: float = 0.5
    rho0_policy: str = "shrink_step"
    seed: int = 0
    # None: track -lambda, clipped to SHIFT_RANGE
    precond_shift: Optional[float] = None
    max_backtracks: int = 60
    checkpoint_every: int = 0
    checkpoint_dir: Optional[str] = None

    def __post_init__(self):
        if not 0 < self.armijo < 1:
            raise ValueError("armijo must lie in (0, 1)")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.rho0_policy not in ("reject", "shrink_step"):
            raise ValueError(f"unknown rho0_policy {self.rho0_policy!r}")


@dataclass
class MinimizeResult:
    field: RadialField
    breakdown: EnergyBreakdown
    iterations: int
    converged: bool
    grad_norm: float
    in_V: bool
    history: list = field(default_factory=list)
    message: str = ""
    start_index: int = 0

    @property
    def energy(self) -> float:
        return self.breakdown.I

    def to_dict(self) -> dict:
        return dict(
            I=self.breakdown.I, iterations=self.iterations, converged=self.converged,
            grad_norm=self.grad_norm, in_V=self.in_V, message=self.message,
            start_index=self.start_index, breakdown=self.breakdown.to_dict(),
            history=[list(h) for h in self.history],
        )

    def save(self, stem) -> None:
        """Write ``<stem>.json`` and the field to ``<stem>.field``."""
        stem = Path(stem)
        Path(str(stem) + ".json").write_text(json.dumps(self.to_dict(), indent=1))
        save_field(self.field, str(stem) + ".field")


class BoundaryEvent(RuntimeError):
    """A descent step tried to leave ``V(c)`` under the ``reject`` policy."""


def in_V(u: RadialField, consts: ThresholdConstants) -> bool:
    return grad_norm_sq(u) < consts.rho0


def project_tangent(g: RadialField, u: RadialField, c: float) -> RadialField:
    """Remove the component of ``g`` along ``u``; ``inner(g, u)/c`` is the running multiplier."""
    return g - (inner(g, u) / c) * u


SHIFT_RANGE = (1e-2, 1.0)


class SobolevPreconditioner:
    """Applies ``(-Lap_h + alpha)^{-1}`` with the discrete Laplacian of the energy."""

    def __init__(self, grid: RadialGrid, alpha: float):
        m = grid.nodes**2 * grid.weights
        k = grid.mid**2 / grid.widths
        diag = alpha * m
        diag[:-1] += k
        diag[1:] += k
        ab = np.zeros((2, grid.node_count))
        ab[0, 1:] = -k
        ab[1] = diag
        self._ab = ab
        self._m = m
        self.grid = grid

    def __call__(self, g: RadialField) -> RadialField:
        return RadialField(self.grid, solveh_banded(self._ab, self._m * g.values))


def _descent_direction(g: RadialField, u: RadialField, P: SobolevPreconditioner) -> RadialField:
    pg = P(g)
    pu = P(u)
    return -(pg - (inner(u, pg) / inner(u, pu)) * pu)


def _check_start(u0: RadialField, params: ModelParams, consts: ThresholdConstants) -> RadialField:
    if params.c >= consts.c0:
        raise ValueError(
            f"c = {params.c:.6g} is not below the threshold c0 = {consts.c0:.6g}; "
            "the local-minimum geometry is only guaranteed for c < c0")
    u = normalize_mass(u0, params.c)
    A = grad_norm_sq(u)
    if not A < consts.rho0:
        raise ValueError(f"start has A = {A:.6g} >= rho0 = {consts.rho0:.6g}; it is not in V(c)")
    return u


def minimize_local(u0: RadialField, params: ModelParams, consts: ThresholdConstants,
                   cfg: MinimizeConfig = MinimizeConfig()) -> MinimizeResult:
    u = _check_start(u0, params, consts)
    c = params.c
    I = energy_value(u, params)
    A = grad_norm_sq(u)
    step = cfg.step_init if cfg.step_init is not None else 1.0 / (1.0 + A)
    history = []
    converged = False
    message = "iteration cap reached"
    it = 0
    gnorm = math.inf
    for it in range(cfg.max_iter + 1):
        g = gradient(u, params)
        gnorm = math.sqrt(max(mass(project_tangent(g, u, c)), 0.0))
        history.append((I, A, gnorm))
        if cfg.checkpoint_every and cfg.checkpoint_dir and it % cfg.checkpoint_every == 0:
            Path(cfg.checkpoint_dir).mkdir(parents=True, exist_ok=True)
            save_field(u, Path(cfg.checkpoint_dir) / f"iter_{it:06d}.field")
        if gnorm <= cfg.grad_tol:
            converged = True
            message = "projected gradient below tolerance"
            break
        if it == cfg.max_iter:
            break
        if cfg.precond_shift is None:
            shift = float(np.clip(-inner(g, u) / c, *SHIFT_RANGE))
        else:
            shift = cfg.precond_shift
        d = _descent_direction(g, u, SobolevPreconditioner(u.grid, shift))
        slope = inner(g, d)
        if not slope < 0:
            message = "no descent direction"
            break
        s = step
        accepted = False
        for _ in range(cfg.max_backtracks):
            trial = normalize_mass(u + s * d, c)
            A_new = grad_norm_sq(trial)
            if not A_new < consts.rho0:
                if cfg.rho0_policy == "reject":
                    raise BoundaryEvent(
                        f"step {s:.3g} at iteration {it} reaches A = {A_new:.6g} >= rho0")
                log.info("iteration %d: step %.3g would leave V(c); shrinking", it, s)
                s *= cfg.shrink
                continue
            I_new = energy_value(trial, params)
            if I_new <= I + cfg.armijo * s * slope:
                accepted = True
                break
            s *= cfg.shrink
        if not accepted:
            # at round-off level the energy can no longer resolve descent
            message = "line search failed"
            break
        u, I, A = trial, I_new, A_new
        step = min(2.0 * s, cfg.step_max)
    res = MinimizeResult(
        field=u, breakdown=energy(u, params, consts), iterations=it, converged=converged,
        grad_norm=gnorm, in_V=A < consts.rho0, history=history, message=message,
    )
    return res


# ---------------------------------------------------------------------------
# multi-start

# ratios A(u0)/rho0 of the Gaussian start ladder, inside (1/16, 1/2)
LADDER = (1 / 4, 1 / 8, 1 / 3, 1 / 12, 1 / 5, 1 / 16, 1 / 2.5, 1 / 6)


def start_fields(params: ModelParams, consts: ThresholdConstants, n_starts: int,
                 grid: RadialGrid, seed: int = 0) -> list[RadialField]:
    """Gaussians with ``A`` on a ladder below ``rho0``; odd starts carry a seeded perturbation."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n_starts):
        target = LADDER[(k // 2) % len(LADDER)] * consts.rho0
        sigma = math.sqrt(1.5 * params.c / target)
        u = make_gaussian(params.c, sigma, grid)
        if k % 2 == 1:
            r = grid.nodes
            bump = np.exp(-((r - rng.uniform(0.3, 1.5) * sigma) / sigma) ** 2)
            u = u * (1.0 + rng.uniform(-0.3, 0.3) * bump / (1.0 + bump))
        u = normalize_mass(u, params.c)
        # the ladder aims below rho0; perturbations may overshoot, so pull back in
        while grad_norm_sq(u) >= 0.5 * consts.rho0:
            u = normalize_mass(fiber.dilate(u, 0.8), params.c)
        out.append(u)
    return out


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BP_THREADS", "1")))
    except ValueError:
        return 1


def multi_start(params: ModelParams, consts: ThresholdConstants,
                cfg: MinimizeConfig = MinimizeConfig(), n_starts: int = 8,
                grid: Optional[RadialGrid] = None,
                extra_starts: Optional[list[RadialField]] = None) -> MinimizeResult:
    """Best converged result over a deterministic set of starts.

    Ties in energy are broken by start index, so the outcome does not depend
    on the order in which parallel workers finish.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    grid = grid or default_grid()
    starts = start_fields(params, consts, n_starts, grid, cfg.seed)
    starts += list(extra_starts or [])

    def run(k):
        local = cfg
        if cfg.checkpoint_dir:
            local = replace(cfg, checkpoint_dir=str(Path(cfg.checkpoint_dir) / f"start_{k:02d}"))
        res = minimize_local(starts[k], params, consts, local)
        res.start_index = k
        return res

    n = len(starts)
    workers = min(_threads(), n)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, range(n)))
    else:
        results = [run(k) for k in range(n)]
    good = [r for r in results if r.converged and r.in_V]
    if not good:
        raise RuntimeError("all starts failed: " + "; ".join(
            f"start {r.start_index}: {r.message} (|g|={r.grad_norm:.2e})" for r in results))
    return min(good, key=lambda r: (r.breakdown.I, r.start_index))


# ---------------------------------------------------------------------------
# diagnostics

SCAN_T = np.linspace(0.8, 1.2, 41)


def ground_state_diagnostics(res: MinimizeResult, params: ModelParams,
                             consts: ThresholdConstants) -> dict:
    """Pohozaev, Nehari and fiber-map evidence for a converged minimizer.

    The result is a local minimizer candidate; whether it is a ground state
    (least energy among all constrained critical points) is not decided here.
    """
    u = res.field
    b = energy(u, params, consts)
    scale = b.scale
    nehari, pohozaev = identity_residuals(u, params, b.lam)
    scan = fiber.fiber_scan(u, params, SCAN_T)
    i1 = int(np.argmin(np.abs(scan.t_values - 1.0)))
    t1_is_min = bool(np.argmin(scan.phi_values) == i1)
    return dict(
        status="local minimizer found" if res.converged else "not converged",
        ground_state_certified=False,
        I=b.I,
        Q=b.Q,
        Q_rel=abs(b.Q) / scale,
        nehari_rel=abs(nehari) / scale,
        pohozaev_rel=abs(pohozaev) / scale,
        **{"lambda": b.lam},
        lambda_negative=b.lam < 0,
        A=b.A,
        rho0=consts.rho0,
        V_margin=consts.rho0 - b.A,
        fiber_t=scan.t_values.tolist(),
        fiber_phi=scan.phi_values.tolist(),
        fiber_t1_is_discrete_min=t1_is_min,
        grad_norm=res.grad_norm,
        iterations=res.iterations,
    )
