"""A negative-energy local minimizer at half the threshold mass.

Multi-start projected descent runs inside {A < rho0}.  The winner is checked
against what any constrained critical point must satisfy: the Pohozaev
functional vanishes and t = 1 minimizes the energy along mass-preserving
dilations.
"""
from sbp_minimizer.constants import estimate_constants
from sbp_minimizer.field import ModelParams
from sbp_minimizer.minimize import MinimizeConfig, ground_state_diagnostics, multi_start

k = estimate_constants(1.0, 2.5, seed=0)
params = ModelParams(mu=1.0, p=2.5, c=0.5 * k.c0)
print(f"c0 = {k.c0:.6f}, rho0 = {k.rho0:.6f}; solving at c = {params.c:.6f}")

res = multi_start(params, k, MinimizeConfig(seed=0), n_starts=8)
d = ground_state_diagnostics(res, params, k)
print(f"start {res.start_index} won after {res.iterations} iterations")
print(f"I = {d['I']:.10f}   lambda = {d['lambda']:.8f}")
print(f"A = {d['A']:.6f} (rho0 - A = {d['V_margin']:.3f})")
print(f"|Q|/scale = {d['Q_rel']:.1e}, Nehari residual {d['nehari_rel']:.1e}")

# Energy along u^t(x) = t^{3/2} u(t x); the minimum should sit at t = 1.
print("\nfiber map near t = 1:")
for t, phi in list(zip(d["fiber_t"], d["fiber_phi"]))[10:31:4]:
    print(f"  t = {t:.2f}   Phi = {phi:.10f}")
print(f"t = 1 is the discrete minimum: {d['fiber_t1_is_discrete_min']}")
print(f"status: {d['status']} (ground-state certificate: {d['ground_state_certified']})")
