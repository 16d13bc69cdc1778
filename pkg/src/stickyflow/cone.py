"""L2(0, 1) projection onto the cone of nondecreasing functions.

Two independent routes compute the same projection of a step function:

* weighted pool-adjacent-violators (:func:`pava`), the production path;
* the slope of the greatest convex minorant of the primitive
  (:func:`convex_envelope` of :func:`~stickyflow.quantile.antiderivative`).

:func:`project_monotone` runs both and packages the result; the cheap
redundancy is what the certificate and cross-check tests lean on.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .quantile import PiecewiseLinear, StepFunction, antiderivative, is_exact, l2_inner

__all__ = [
    "ConeProjectionResult",
    "CertificateReport",
    "Confinement",
    "pava",
    "convex_envelope",
    "project_monotone",
    "cone_certificates",
    "is_confinement_consistent",
]

#: allowed decrease between adjacent cells in binary64 mode
MONOTONE_TOL = 1e-12
CERT_TOL = 1e-10


def pava(values, weights) -> list:
    """Weighted isotonic regression by pool-adjacent-violators.

    Returns the fitted value for every input position.  Blocks with equal
    means are pooled eagerly, so the block structure is canonical.
    """
    # parallel stacks: block weight, weighted sum, number of cells
    ws: list = []
    ss: list = []
    ns: list = []
    for v, w in zip(values, weights):
        w_cur, s_cur, n_cur = w, w * v, 1
        while ws and ss[-1] * w_cur >= s_cur * ws[-1]:
            w_cur += ws.pop()
            s_cur += ss.pop()
            n_cur += ns.pop()
        ws.append(w_cur)
        ss.append(s_cur)
        ns.append(n_cur)
    out: list = []
    for w, s, n in zip(ws, ss, ns):
        out.extend([s / w] * n)
    return out


def convex_envelope(F: PiecewiseLinear) -> PiecewiseLinear:
    """Greatest convex minorant of ``F`` on [0, 1], sampled at F's knots.

    This is the lower convex hull of the knot set (monotone chain); the
    result keeps the input abscissae so it can be compared knot by knot.
    """
    xs, ys = F.xs, F.ys
    hull: list = []  # knot indices
    for j in range(len(xs)):
        x, y = xs[j], ys[j]
        # pop while the last hull point is not strictly below the chord
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            if (xs[b] - xs[a]) * (y - ys[a]) - (ys[b] - ys[a]) * (x - xs[a]) > 0:
                break
            hull.pop()
        hull.append(j)
    out = list(ys)
    for a, b in zip(hull, hull[1:]):
        if b - a > 1:
            x0, y0 = xs[a], ys[a]
            slope = (ys[b] - y0) / (xs[b] - x0)
            for k in range(a + 1, b):
                out[k] = y0 + slope * (xs[k] - x0)
    return PiecewiseLinear._trusted(xs, tuple(out))


@dataclass(frozen=True)
class ConeProjectionResult:
    projection: StepFunction
    envelope: PiecewiseLinear
    contact_set: tuple

    def routes_agree(self, tol: float = 0.0) -> bool:
        """PAVA values against slopes of the convex envelope, cell by cell."""
        return self.projection.equals(self.envelope.derivative(), tol)


def _contact_set(F: PiecewiseLinear, env: PiecewiseLinear, tol) -> tuple:
    xs = F.xs
    intervals = []
    start = None
    for k, (a, b) in enumerate(zip(F.ys, env.ys)):
        if abs(a - b) <= tol:
            if start is None:
                start = k
        elif start is not None:
            intervals.append((xs[start], xs[k - 1]))
            start = None
    if start is not None:
        intervals.append((xs[start], xs[-1]))
    return tuple(intervals)


def project_monotone(f: StepFunction) -> ConeProjectionResult:
    """Metric projection of ``f`` onto the nondecreasing cone."""
    proj = StepFunction._trusted(f.breakpoints, tuple(pava(f.values, f.widths)))
    F = antiderivative(f)
    env = convex_envelope(F)
    tol = 0 if is_exact(*F.ys) else 1e-12
    return ConeProjectionResult(proj, env, _contact_set(F, env, tol))


@dataclass(frozen=True)
class CertificateReport:
    max_pairing: float
    proj_pairing: float
    violations: tuple
    tolerance: float

    @property
    def ok(self) -> bool:
        return not self.violations


def _random_monotone(rng: random.Random, exact: bool) -> StepFunction:
    n = rng.randint(1, 8)
    if exact:
        cuts = sorted({Fraction(rng.randint(1, 255), 256) for _ in range(n - 1)})
        vals = sorted(Fraction(rng.randint(-512, 512), 64) for _ in range(len(cuts) + 1))
        return StepFunction((Fraction(0), *cuts, Fraction(1)), vals)
    cuts = sorted({rng.random() for _ in range(n - 1)} - {0.0})
    vals = sorted(rng.uniform(-8, 8) for _ in range(len(cuts) + 1))
    return StepFunction((0.0, *cuts, 1.0), vals)


def cone_certificates(f: StepFunction, r: ConeProjectionResult, n_random: int = 32,
                      seed: int = 0, tol: float = CERT_TOL) -> CertificateReport:
    """Check the variational characterisation of the projection.

    ``<f - P f, k> <= 0`` for members ``k`` of the cone (constants, negative
    indicators of ``[0, x]``, the projection itself, random monotone step
    functions) and ``<f - P f, P f> = 0``.  Any positive pairing above
    ``tol`` is reported as a violation.
    """
    resid = f - r.projection
    exact = is_exact(*f.values, *f.breakpoints)
    one = Fraction(1) if exact else 1.0
    family = [("+1", StepFunction.constant(one)), ("-1", StepFunction.constant(-one))]
    for x in f.breakpoints[1:-1]:
        family.append((f"-1[0,{x}]", StepFunction((0 * one, x, one), (-one, 0 * one))))
    family.append(("-1[0,1]", StepFunction.constant(-one)))
    family.append(("proj", r.projection))
    rng = random.Random(seed)
    family += [(f"random{k}", _random_monotone(rng, exact)) for k in range(n_random)]

    violations = []
    worst = None
    for name, kappa in family:
        pairing = l2_inner(resid, kappa)
        worst = pairing if worst is None else max(worst, pairing)
        if pairing > tol:
            violations.append((name, pairing))
    proj_pairing = l2_inner(resid, r.projection)
    if abs(proj_pairing) > tol:
        violations.append(("orthogonality", proj_pairing))
    return CertificateReport(worst, proj_pairing, tuple(violations), tol)


class Confinement(NamedTuple):
    ok: bool
    witness: object
    projection_zero: bool


def is_confinement_consistent(V0: StepFunction, tol: float = 1e-12) -> Confinement:
    """Whether the velocity profile has zero cone projection.

    Equivalent to ``F0 >= F0(1) = 0`` for the primitive ``F0`` of ``V0``;
    both forms are evaluated.  ``witness`` is the minimiser of ``F0`` when
    the condition fails.
    """
    F0 = antiderivative(V0)
    x_min, f_min = F0.argmin()
    ok = abs(F0.ys[-1]) <= tol and f_min >= -tol
    proj = project_monotone(V0).projection
    zero = max(abs(v) for v in proj.values) <= tol
    return Confinement(ok, None if ok else x_min, zero)
