"""The level curve m(c) below the threshold.

A dyadic mass grid c0 * 2^-k makes every weak subadditivity triple
m(c) <= m(a) + m(c - a) with a = c/2 land on grid points.  The ratio m(c)/c
should decrease in c and tend to 0 as c shrinks.
"""
from sbp_minimizer.constants import estimate_constants
from sbp_minimizer.sweep import (check_ratio_conditions, check_subadditivity, dyadic_grid,
                                 sweep_mass)

k = estimate_constants(1.0, 2.5, seed=0)
report = sweep_mass(dyadic_grid(k.c0, 6), 1.0, 2.5, k, n_starts=4)

print(f"{'c':>10} {'m(c)':>14} {'m(c)/c':>10} {'lambda':>10}  source")
for r in report.records:
    print(f"{r.c:10.5f} {r.m_est:14.8f} {r.m_est / r.c:10.5f} {r.lam:10.5f}  {r.source}")

print("\nsubadditivity defects m(c) - m(a) - m(c-a), negative means strict:")
for c in check_subadditivity(report, 1e-6)["checks"]:
    print(f"  {c['name']:32s} {c['value']:+.6f}  {c['verdict']}")

ratio = check_ratio_conditions(report)
for c in ratio["checks"]:
    print(f"{c['name']}: {c['verdict']} ({c['value']:.4g})")
