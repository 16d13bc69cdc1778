"""
Two ways to the same sticky flow
================================

An event-driven particle simulation and the closed form
N(t) = projection of (N0 + t V0) onto the monotone cone.
"""

import random

from stickyflow import LagrangianSolution, quantile_at, simulate, solve_quantile
from stickyflow.lagrangian import dual_oracle_gap
from stickyflow.scenario import random_free_scenario

scen = random_free_scenario(seed=11, n=8)
mu = scen.measure()
log = simulate(mu)
print(f"{len(mu)} atoms, {len(log.events)} merge events, "
      f"last at t = {max(log.event_times, default=0):.4f}")

for ev in log.events[:5]:
    print(f"  t={ev.time:.4f}  x={ev.position:+.4f}  "
          f"{len(ev.participants)} clusters -> v={ev.resulting.velocity:+.4f}")

sol = LagrangianSolution.from_measure(mu)
T = 1.25 * max(log.event_times, default=1.0)
rng = random.Random(0)
gaps = [dual_oracle_gap(log, sol, rng.uniform(0, T)) for _ in range(100)]
print("largest L2 gap over 100 random times:", max(gaps))

# same picture at one time, cell by cell
t = T / 2
print("\nengine    ", [round(v, 6) for v in quantile_at(log, t).values])
print("projection", [round(v, 6) for v in solve_quantile(sol, t).simplify().values])
