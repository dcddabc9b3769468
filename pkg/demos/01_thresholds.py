"""Where does the local-minimum geometry live?

The energy is bounded below on the mass sphere by a one-variable barrier
h_c(t) of t = ||grad u||.  Below the threshold mass c0 the barrier is positive
at t = sqrt(rho0), which walls off the ball {A < rho0}.  This script estimates
the constants for a few (mu, p) and prints the barrier on both sides of c0.
"""
import math

import numpy as np

from sbp_minimizer.constants import estimate_constants

print(f"{'mu':>4} {'p':>5} {'K_GN':>10} {'rho0':>10} {'c0':>10} {'rel. residual':>14}")
for mu in (1.0, 5.0):
    for p in (2.2, 2.5, 2.6):
        k = estimate_constants(mu, p, seed=0)
        print(f"{mu:4g} {p:5g} {k.K_GN:10.5f} {k.rho0:10.5f} {k.c0:10.5f} {k.h_residual:14.1e}")

# The barrier changes sign exactly at c0.
k = estimate_constants(1.0, 2.5, seed=0)
t = math.sqrt(k.rho0)
print("\nh_c(sqrt(rho0)) for mu=1, p=2.5:")
for frac in (0.25, 0.5, 0.9, 1.0, 1.1):
    print(f"  c = {frac:4.2f} c0   h = {float(k.h(t, frac * k.c0)):+.6e}")

# For c < c0 the barrier dips below zero near t = 0 and rises above it at sqrt(rho0):
# any minimizing sequence starting in the ball stays there.
ts = np.linspace(0.01, 1.5 * t, 9)
print("\nh_c(t) at c = c0/2:")
for ti, hi in zip(ts, k.h(ts, 0.5 * k.c0)):
    mark = "  <- sqrt(rho0)" if abs(ti - t) < 0.1 * t else ""
    print(f"  t = {ti:7.4f}   h = {hi:+.5f}{mark}")
