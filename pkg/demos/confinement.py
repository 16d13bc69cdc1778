"""
Sticky walls from a free flow
=============================

Run the flow on the whole line, freeze every trajectory the first time
it reaches the boundary, and compare with a simulation that has the
walls built in.
"""

from fractions import Fraction as F

from stickyflow import Atom, DiscreteMeasure, Domain, confine_flow, simulate, state_at
from stickyflow.lagrangian import confinement_equivalence

box = Domain.interval(F(0), F(1))
mu = DiscreteMeasure((
    Atom(F(1, 4), F(1, 8), F(-1)),
    Atom(F(1, 4), F(3, 8), F(1, 2)),
    Atom(F(1, 4), F(5, 8), F(-1, 4)),
    Atom(F(1, 4), F(7, 8), F(3, 2)),
))

free = simulate(mu)
flow = confine_flow(free, box)
print("first boundary hits:", [str(h) for h in flow.hit_times])

native = simulate(mu, box)
for t in (F(0), F(1, 8), F(1, 4), F(1), F(4)):
    a = flow.state_at(t)
    b = state_at(native, t)
    print(f"t={str(t):>4}  confined {[str(x) for x in a.positions]}  "
          f"walls {[str(x) for x in b.positions]}")

rep = confinement_equivalence(mu, box)
print("\nmax W2 over", rep.n_times, "times:", rep.max_distance, "| ok:", rep.ok)
