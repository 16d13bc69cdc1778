"""
Long-time behaviour of a confined flow
======================================

Energy gap, theta and the metric derivative for a flow that settles,
plus the identity residuals and the normalisation probe.
"""

from stickyflow import (
    energy_gap,
    identity_3_11_probe,
    identity_suite,
    inequality_suite,
    limit_profile,
    metric_derivative,
    simulate,
    theta,
)
from stickyflow.asymptotics import sample_times
from stickyflow.scenario import random_confined_scenario

scen = random_confined_scenario(seed=3)
log = simulate(scen.measure(), scen.domain)
prof = limit_profile(log)
print(f"{len(scen.atoms)} atoms settle at t = {prof.equilibrium_time}")
print("limit:", [(str(a.mass), str(a.position)) for a in prof.limit_measure.atoms])

print(f"\n{'t':>10} {'e(t)':>12} {'theta':>12} {'|rho_dot|':>10}")
for t in sample_times(log, 9):
    print(f"{float(t):10.5f} {float(energy_gap(log, prof, t)):12.3e} "
          f"{float(theta(log, t)):12.3e} {metric_derivative(log, t):10.5f}")

res = identity_suite(log, prof)
print("\nidentity residuals (exact arithmetic):")
for k in sorted(res):
    print(f"  {k:18s} {res[k]}")

bad = {k: v for k, v in inequality_suite(log, prof).items() if v > 1e-10}
print("inequality violations:", bad or "none")

p = identity_3_11_probe(log)
print(f"\nint |rho_dot|^2 = {p.integral}, <V0, N0> = {p.inner_product}")
print("normalisation that holds:", p.holds)
