"""
Equilibria are unstable
=======================

Half masses at 0 and 1 at rest stay put.  Nudge them inward to 1/n and
1 - 1/n with speed 1/n and they always meet in the middle.
"""

from fractions import Fraction as F

from stickyflow import Atom, DiscreteMeasure, Domain, limit_profile, simulate, wasserstein2

box = Domain.interval(F(0), F(1))
rest = DiscreteMeasure((Atom(F(1, 2), F(0)), Atom(F(1, 2), F(1))))
print("unperturbed limit:", [str(x) for x in limit_profile(simulate(rest, box)).limit_measure.positions])

for n in (2, 3, 5, 10, 100, 1000):
    mu = DiscreteMeasure.from_atoms([Atom(F(1, 2), F(1, n), F(1, n)),
                                     Atom(F(1, 2), 1 - F(1, n), -F(1, n))])
    prof = limit_profile(simulate(mu, box))
    print(f"n={n:5d}  start is {wasserstein2(mu, rest):.4f} from rest, "
          f"limit {[str(x) for x in prof.limit_measure.positions]}")
