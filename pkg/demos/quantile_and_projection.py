"""
Quantile maps and the monotone cone
===================================

Measures on the line become nondecreasing step functions on (0, 1).
Projecting any step function onto that cone is isotonic regression.
"""

from fractions import Fraction as F

from stickyflow import (
    Atom,
    DiscreteMeasure,
    StepFunction,
    antiderivative,
    cone_certificates,
    project_monotone,
    quantile_of,
    wasserstein2,
)

# two half masses at 1/4 and 3/4
mu = DiscreteMeasure((Atom(F(1, 2), F(1, 4)), Atom(F(1, 2), F(3, 4))))
N = quantile_of(mu)
print("quantile breakpoints", [str(b) for b in N.breakpoints])
print("quantile values     ", [str(v) for v in N.values])

# W2 is the L2 distance between quantile maps
print("W2(mu, delta_1/2) =", wasserstein2(mu, DiscreteMeasure.dirac(F(1, 2))))

# a decreasing profile gets pooled
f = StepFunction((F(0), F(1, 3), F(2, 3), F(1)), (F(3), F(1), F(2)))
r = project_monotone(f)
print("\nproject", [str(v) for v in f.values], "->", [str(v) for v in r.projection.values])

# second route: slope of the convex envelope of the primitive
print("primitive knots ", [(str(x), str(y)) for x, y in antiderivative(f).knots])
print("envelope knots  ", [(str(x), str(y)) for x, y in r.envelope.knots])
print("routes agree exactly:", r.routes_agree())

rep = cone_certificates(f, r)
print("largest pairing with a cone member:", rep.max_pairing, "| orthogonality:", rep.proj_pairing)
