"""Sweeps over the mass and the checks run on the resulting ``m(c)`` curve.

``m_est(c)`` is the best energy found in ``V(c)``; it bounds the true
infimum from above, so strict inequalities are reported as margins and only
sign failures of ``m_est < 0`` are hard failures.
"""
from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import os
import subprocess
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .constants import ThresholdConstants
from .fiber import scaling_path_derivative_at_1
from .field import ModelParams, RadialField, RadialGrid, grad_norm_sq, make_grid, normalize_mass
from .functional import energy
from .minimize import MinimizeConfig, MinimizeResult, minimize_local, multi_start

Q_SMALL = 1e-4
SWEEP_COLUMNS = ("c", "m", "lambda", "A", "B", "C", "D", "Q", "converged", "n_starts", "wall_time")

# sweeps resolve slowly decaying small-mass minimizers, so they use a wider box
SWEEP_GRID = dict(node_count=2048, r_max=80.0, scheme="graded")


@dataclass
class SweepRecord:
    c: float
    m_est: float
    lam: float
    A: float
    B: float
    C: float
    D: float
    Q: float
    converged: bool
    n_starts: int
    wall_time: float = 0.0
    source: str = "cold"
    message: str = ""

    @property
    def scale(self) -> float:
        return self.A + self.B + self.C + self.D

    @property
    def m_bar(self) -> float:
        """Level restricted to ``{Q = 0}``: ``m_est`` when ``|Q|`` is negligible, else NaN."""
        if self.converged and abs(self.Q) <= Q_SMALL * self.scale:
            return self.m_est
        return float("nan")

    def csv_row(self, timing: bool) -> list[str]:
        vals = (self.c, self.m_est, self.lam, self.A, self.B, self.C, self.D, self.Q)
        return ([f"{v:.17g}" for v in vals] + [str(int(self.converged)), str(self.n_starts),
                f"{self.wall_time if timing else 0.0:.17g}"])


def check_entry(name: str, value, tolerance, verdict: str, anchor: str, **inputs) -> dict:
    """One named diagnostic; ``verdict`` is ``pass``, ``fail`` or ``margin``."""
    return dict(name=name, value=value, tolerance=tolerance, verdict=verdict, anchor=anchor,
                inputs=inputs)


@dataclass
class SweepReport:
    records: list
    checks: list
    constants: ThresholdConstants
    config_hash: str
    fields: dict = field(default_factory=dict, repr=False)

    @property
    def c(self) -> np.ndarray:
        return np.array([r.c for r in self.records])

    @property
    def m(self) -> np.ndarray:
        return np.array([r.m_est for r in self.records])

    def to_csv(self, timing: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in self.records:
            w.writerow(r.csv_row(timing))
        return buf.getvalue()

    def to_dict(self, timing: bool = False) -> dict:
        recs = []
        for r in self.records:
            d = asdict(r)
            d["lambda"] = d.pop("lam")
            d["m_bar"] = r.m_bar
            if not timing:
                d["wall_time"] = 0.0
            recs.append(d)
        return dict(records=recs, checks=self.checks, constants=self.constants.to_dict(),
                    config_hash=self.config_hash)

    @property
    def failed(self) -> list:
        return [c for c in self.checks if c["verdict"] == "fail"]


def dyadic_grid(c0: float, n: int) -> list[float]:
    """``c0 * 2^-k`` for ``k = n .. 1``, ascending."""
    if n < 1:
        raise ValueError("dyadic grid needs at least one point")
    return [c0 * 2.0**-k for k in range(n, 0, -1)]


def parse_c_grid(text: str, c0: float) -> list[float]:
    """``dyadic:N`` or a comma separated list of fractions of ``c0``."""
    if text.startswith("dyadic:"):
        return dyadic_grid(c0, int(text.split(":", 1)[1]))
    return sorted(float(x) * c0 for x in text.split(","))


def _record(res: MinimizeResult, c: float, n_starts: int, wall: float, source: str) -> SweepRecord:
    b = res.breakdown
    return SweepRecord(c=c, m_est=b.I, lam=b.lam, A=b.A, B=b.B, C=b.C, D=b.D, Q=b.Q,
                       converged=res.converged, n_starts=n_starts, wall_time=wall,
                       source=source, message=res.message)


def _failed_record(c: float, n_starts: int, wall: float, message: str) -> SweepRecord:
    nan = float("nan")
    return SweepRecord(c=c, m_est=nan, lam=nan, A=nan, B=nan, C=nan, D=nan, Q=nan,
                       converged=False, n_starts=n_starts, wall_time=wall, message=message)


def _better(a: Optional[MinimizeResult], b: Optional[MinimizeResult]) -> bool:
    """Is ``b`` a strict improvement on ``a``?"""
    if b is None or not (b.converged and b.in_V):
        return False
    return a is None or b.breakdown.I < a.breakdown.I


def sweep_mass(c_grid: Sequence[float], mu: float, p: float, consts: ThresholdConstants,
               cfg: MinimizeConfig = MinimizeConfig(), n_starts: int = 8,
               grid: Optional[RadialGrid] = None, warm_start: bool = True,
               relaxed: bool = False) -> SweepReport:
    """One record per mass: cold multi-start, then warm starts from both neighbours.

    Warm starts run as an ascending and a descending pass, each seeded with
    the current best field at the previous mass rescaled onto the new
    sphere; a warm result replaces the cold one only if it is lower.
    """
    cs = sorted(float(c) for c in c_grid)
    if len(cs) < 3:
        raise ValueError("a sweep needs at least 3 masses")
    if any(c >= consts.c0 for c in cs):
        raise ValueError(f"every mass must lie below c0 = {consts.c0:.6g}")
    grid = grid or make_grid(**SWEEP_GRID)
    best: dict[int, Optional[MinimizeResult]] = {}
    source: dict[int, str] = {}
    wall: dict[int, float] = {}
    errors: dict[int, str] = {}
    for i, c in enumerate(cs):
        t0 = time.perf_counter()
        params = ModelParams(mu, p, c, relaxed)
        try:
            best[i] = multi_start(params, consts, cfg, n_starts, grid)
            source[i] = "cold"
        except (RuntimeError, ValueError) as exc:
            best[i] = None
            errors[i] = str(exc)
        wall[i] = time.perf_counter() - t0

    if warm_start:
        order = list(range(len(cs)))
        for seq in (order, order[::-1]):
            for prev, i in zip(seq[:-1], seq[1:]):
                if best[prev] is None:
                    continue
                t0 = time.perf_counter()
                params = ModelParams(mu, p, cs[i], relaxed)
                u0 = normalize_mass(best[prev].field, cs[i])
                if grad_norm_sq(u0) < consts.rho0:
                    try:
                        res = minimize_local(u0, params, consts, cfg)
                    except ValueError:
                        res = None
                    if _better(best[i], res):
                        best[i] = res
                        source[i] = f"warm from c={cs[prev]:.17g}"
                wall[i] += time.perf_counter() - t0

    records = []
    fields = {}
    for i, c in enumerate(cs):
        if best[i] is None:
            records.append(_failed_record(c, n_starts, wall[i], errors.get(i, "failed")))
        else:
            records.append(_record(best[i], c, n_starts, wall[i], source[i]))
            fields[c] = best[i].field
    report = SweepReport(records, [], consts, config_hash(mu, p, cs, cfg, n_starts, grid,
                                                          warm_start))
    report.fields = fields
    report.checks = sign_checks(report)
    return report


def config_hash(mu, p, cs, cfg, n_starts, grid, warm_start) -> str:
    payload = json.dumps(dict(mu=mu, p=p, c=[repr(c) for c in cs], cfg=asdict(cfg),
                              n_starts=n_starts, grid=[grid.node_count, grid.r_max, grid.scheme],
                              warm_start=warm_start), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# checks


def sign_checks(report: SweepReport) -> list:
    out = []
    for r in report.records:
        if not r.converged:
            out.append(check_entry(f"converged[c={r.c:.6g}]", False, None, "fail",
                                   "local minimizer exists in V(c)", c=r.c, message=r.message))
            continue
        out.append(check_entry(f"m_negative[c={r.c:.6g}]", r.m_est, 0.0,
                               "pass" if r.m_est < 0 else "fail", "m(c) < 0 for c < c0", c=r.c))
    return out


def _index(cs: np.ndarray, value: float, rel: float = 1e-12) -> Optional[int]:
    hit = np.nonzero(np.abs(cs - value) <= rel * abs(value))[0]
    return int(hit[0]) if hit.size else None


def check_subadditivity(report: SweepReport, tol: float) -> dict:
    """Weak subadditivity ``m(c) <= m(a) + m(c - a)`` on every representable triple.

    Returns ``checks`` (one per triple, asserting the weak inequality within
    ``tol`` and carrying the strict margin) and ``skipped`` triples.
    """
    cs = report.c
    ms = report.m
    checks, skipped = [], []
    for k, c in enumerate(cs):
        for j, a in enumerate(cs):
            # a <= c - a lists each unordered split once
            if not a < c or a > (c - a) * (1 + 1e-12):
                continue
            i = _index(cs, c - a)
            if i is None:
                skipped.append((float(c), float(a)))
                continue
            defect = float(ms[k] - ms[j] - ms[i])
            checks.append(check_entry(
                f"subadditivity[c={c:.6g},a={a:.6g}]", defect, tol,
                "pass" if defect <= tol else "fail",
                "m(c) <= m(a) + m(c-a)", c=float(c), a=float(a),
                strict_margin=-defect))
    return dict(checks=checks, skipped=skipped)


def check_ratio_conditions(report: SweepReport, noise: float = 0.0) -> dict:
    """Monotone decrease of ``m/c`` and its approach to 0 at the small end.

    Decrease violations are listed with their size.  The small-``c`` trend is
    summarised by a power-law fit ``|m/c| ~ a c^k`` on the smallest points.
    """
    cs = report.c
    if cs.size < 4 or cs.max() / cs.min() < 10.0 * (1 - 1e-12):
        raise ValueError("ratio checks need >= 4 masses spanning a decade")
    ratios = report.m / cs
    violations = []
    for i in range(cs.size - 1):
        step = ratios[i + 1] - ratios[i]
        if not step < -noise:
            violations.append(dict(c_lo=float(cs[i]), c_hi=float(cs[i + 1]), increase=float(step)))
    entries = [check_entry("ratio_strictly_decreasing", len(violations), noise,
                           "margin" if violations else "pass",
                           "c -> m(c)/c strictly decreasing", violations=violations,
                           ratios=ratios.tolist())]
    small = slice(0, min(4, cs.size))
    with np.errstate(divide="ignore", invalid="ignore"):
        k, _ = np.polyfit(np.log(cs[small]), np.log(np.abs(ratios[small])), 1)
    closer = bool(abs(ratios[0]) < abs(ratios[-1]))
    entries.append(check_entry(
        "ratio_tends_to_zero", float(k), 0.0, "pass" if closer and k > 0 else "margin",
        "m(c)/c -> 0 as c -> 0", smallest_ratio=float(ratios[0]), largest_ratio=float(ratios[-1]),
        fitted_exponent=float(k)))
    return dict(checks=entries, violations=violations, ratios=ratios.tolist())


def check_scaling_paths(u: RadialField, params: ModelParams,
                        beta_set: Sequence[float] = (-1.0, 0.0, 1.0)) -> dict:
    """``f'_theta(1, u)`` over ``beta``; admissibility needs one value off the noise floor.

    The derivative is affine in ``beta``; the slope equals ``Q(u)``, so at a
    critical point the root ``beta*`` is pushed to infinity.
    """
    b = energy(u, params)
    if b.scale == 0.0:
        raise ValueError("scaling-path checks need a nonzero field")
    betas = [float(x) for x in beta_set]
    vals = [scaling_path_derivative_at_1(u, x, params) for x in betas]
    floor = 1e-6 * b.scale
    admissible = any(abs(v) > floor for v in vals)
    coef = np.polyfit(betas, vals, 1)
    collinear = float(np.max(np.abs(np.polyval(coef, betas) - vals))) / b.scale
    slope, intercept = float(coef[0]), float(coef[1])
    root = -intercept / slope if slope != 0.0 else math.inf
    dist = min(abs(root - x) for x in betas) if math.isfinite(root) else math.inf
    checks = [
        check_entry("scaling_path_admissible", max(abs(v) for v in vals), floor,
                    "pass" if admissible else "fail", "f'_theta(1,u) != 0 for some beta",
                    betas=betas, values=vals),
        check_entry("beta_affinity", collinear, 1e-10, "pass" if collinear <= 1e-10 else "fail",
                    "f'_theta(1,u) affine in beta"),
    ]
    return dict(checks=checks, values=dict(zip(betas, vals)), slope=slope, intercept=intercept,
                root=root, root_distance=dist)


# ---------------------------------------------------------------------------
# configuration and metadata


CONFIG_KEYS = {
    "model": {"mu": float, "p": float, "relaxed": "bool"},
    "grid": {"node_count": int, "r_max": float, "scheme": str},
    "optimizer": {"max_iter": int, "grad_tol": float, "armijo": float, "shrink": float,
                  "rho0_policy": str, "seed": int, "n_starts": int, "step_max": float},
    "sweep": {"grid": str, "warm_start": "bool", "timing": "bool", "subadditivity_tol": float},
}


def load_config(path) -> dict:
    """Read a sectioned ``key = value`` file; unknown sections or keys are errors."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    with open(path) as fh:
        cp.read_file(fh)
    out: dict = {}
    for section in cp.sections():
        if section not in CONFIG_KEYS:
            raise ValueError(f"unknown config section [{section}]")
        for key, raw in cp[section].items():
            kind = CONFIG_KEYS[section].get(key)
            if kind is None:
                raise ValueError(f"unknown config key {section}.{key}")
            if kind == "bool":
                value = cp[section].getboolean(key)
            else:
                value = kind(raw)
            out.setdefault(section, {})[key] = value
    return out


def apply_env(seed: int) -> int:
    """``BP_SEED`` overrides the configured seed."""
    env = os.environ.get("BP_SEED")
    return int(env) if env not in (None, "") else seed


def build_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=10)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{__version__}"


def metadata(command: str, seed: int, grid: Optional[RadialGrid],
             consts: Optional[ThresholdConstants], **extra) -> dict:
    return dict(
        schema_version=1,
        package_version=__version__,
        command=command,
        seed=seed,
        grid=None if grid is None else dict(node_count=grid.node_count, r_max=grid.r_max,
                                            scheme=grid.scheme),
        constants=None if consts is None else consts.to_dict(),
        build=build_describe(),
        ansatz="radial",
        **extra,
    )
