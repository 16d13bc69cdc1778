"""Discrete probability measures on the line and their quantile calculus.

Measures are stored as sorted atoms. Their quantile functions live on the
mass coordinate ``x in (0, 1)`` as right-continuous step functions, which
makes every L2 quantity (inner products, Wasserstein distances, primitives)
an exact finite sum.  All routines are written against plain Python numbers
so they work unchanged with :class:`fractions.Fraction` (rational mode) or
``float`` (binary64 mode).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from numbers import Rational
from typing import Callable, Iterable, Sequence

__all__ = [
    "MERGE_TOL",
    "Atom",
    "DiscreteMeasure",
    "StepFunction",
    "PiecewiseLinear",
    "Domain",
    "CDF",
    "is_exact",
    "quantile_of",
    "cdf_of",
    "pushforward",
    "l2_inner",
    "l2_norm",
    "wasserstein2",
    "wasserstein2_squared",
    "antiderivative",
]

#: atoms closer than this (binary64 mode only) are merged at construction
MERGE_TOL = 1e-12
MASS_TOL = 1e-12

INF = math.inf


def is_exact(*values) -> bool:
    """True when every value is an exact rational (int or Fraction)."""
    for v in values:
        t = type(v)
        if t is float:
            return False
        if t is not Fraction and t is not int and not isinstance(v, Rational):
            return False
    return True


def _mean(weights, values):
    total = sum(weights)
    return sum(w * v for w, v in zip(weights, values)) / total


@dataclass(frozen=True)
class Atom:
    """A point mass with an attached velocity."""

    mass: object
    position: object
    velocity: object = 0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"atom mass must be positive, got {self.mass!r}")


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure, optionally carrying velocities.

    Use :meth:`from_atoms` to build one from unsorted data; the plain
    constructor only validates.
    """

    atoms: tuple

    def __post_init__(self):
        atoms = tuple(self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ValueError("a probability measure needs at least one atom")
        for left, right in zip(atoms, atoms[1:]):
            if not left.position < right.position:
                raise ValueError("atom positions must be strictly increasing")
        total = sum(a.mass for a in atoms)
        if is_exact(*(a.mass for a in atoms)):
            if total != 1:
                raise ValueError(f"masses sum to {total}, expected exactly 1")
        elif abs(total - 1) > MASS_TOL:
            raise ValueError(f"masses sum to {total!r}, expected 1")

    @classmethod
    def from_atoms(cls, atoms: Iterable, merge_tol: float = MERGE_TOL) -> "DiscreteMeasure":
        """Sort atoms and merge coincident ones.

        ``atoms`` may hold :class:`Atom` instances or ``(mass, position[,
        velocity])`` tuples.  Merged atoms keep the mass-weighted mean
        velocity (momentum is conserved).  In rational mode only exactly
        equal positions merge.
        """
        items = [a if isinstance(a, Atom) else Atom(*a) for a in atoms]
        items.sort(key=lambda a: a.position)
        exact = is_exact(*(a.position for a in items))
        tol = 0 if exact else merge_tol
        groups: list[list[Atom]] = []
        for atom in items:
            if groups and atom.position - groups[-1][0].position <= tol:
                groups[-1].append(atom)
            else:
                groups.append([atom])
        merged = []
        for g in groups:
            if len(g) == 1:
                merged.append(g[0])
                continue
            masses = [a.mass for a in g]
            merged.append(
                Atom(sum(masses), _mean(masses, [a.position for a in g]),
                     _mean(masses, [a.velocity for a in g]))
            )
        return cls(tuple(merged))

    @classmethod
    def dirac(cls, position, velocity=0) -> "DiscreteMeasure":
        return cls((Atom(Fraction(1) if is_exact(position) else 1.0, position, velocity),))

    def __len__(self):
        return len(self.atoms)

    @property
    def masses(self) -> tuple:
        return tuple(a.mass for a in self.atoms)

    @property
    def positions(self) -> tuple:
        return tuple(a.position for a in self.atoms)

    @property
    def velocities(self) -> tuple:
        return tuple(a.velocity for a in self.atoms)

    @property
    def exact(self) -> bool:
        return is_exact(*self.masses, *self.positions, *self.velocities)

    def mean(self):
        return sum(a.mass * a.position for a in self.atoms)

    def momentum(self):
        return sum(a.mass * a.velocity for a in self.atoms)

    def kinetic_energy(self):
        """Sum of m v^2 (no factor 1/2)."""
        return sum(a.mass * a.velocity * a.velocity for a in self.atoms)

    def velocity_step(self) -> "StepFunction":
        """Velocities laid out on the quantile cells, i.e. ``v o N``."""
        return StepFunction(_cumulative(self.masses), self.velocities)


def _cumulative(masses: Sequence) -> tuple:
    out = [0 * masses[0]]
    for m in masses:
        out.append(out[-1] + m)
    # the last breakpoint is 1 by definition; kill roundoff in float mode
    out[-1] = 1.0 if isinstance(out[-1], float) else Fraction(1)
    return tuple(out)


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant function on (0, 1).

    ``values[k]`` is the value on ``[breakpoints[k], breakpoints[k+1])``.
    """

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        bp, vals = tuple(self.breakpoints), tuple(self.values)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)
        if len(bp) != len(vals) + 1 or not vals:
            raise ValueError("need len(breakpoints) == len(values) + 1 >= 2")
        if bp[0] != 0 or bp[-1] != 1:
            raise ValueError("breakpoints must start at 0 and end at 1")
        for a, b in zip(bp, bp[1:]):
            if not a < b:
                raise ValueError("breakpoints must be strictly increasing")

    @classmethod
    def _trusted(cls, breakpoints: tuple, values: tuple) -> "StepFunction":
        """Skip validation; for partitions taken from an existing function."""
        f = object.__new__(cls)
        object.__setattr__(f, "breakpoints", breakpoints)
        object.__setattr__(f, "values", values)
        return f

    @classmethod
    def constant(cls, value, exact: bool | None = None) -> "StepFunction":
        if exact is None:
            exact = is_exact(value)
        one = Fraction(1) if exact else 1.0
        return cls((0 * one, one), (value,))

    @classmethod
    def from_widths(cls, widths: Sequence, values: Sequence) -> "StepFunction":
        return cls(_cumulative(list(widths)), tuple(values))

    def __len__(self):
        return len(self.values)

    @cached_property
    def widths(self) -> tuple:
        bp = self.breakpoints
        return tuple(b - a for a, b in zip(bp, bp[1:]))

    def __call__(self, x):
        if not 0 <= x < 1:
            if x == 1:
                return self.values[-1]
            raise ValueError(f"{x!r} outside [0, 1]")
        return self.values[bisect_right(self.breakpoints, x) - 1]

    def on(self, breakpoints: Sequence) -> tuple:
        """Cell values on a finer partition containing our breakpoints."""
        out = []
        k = 0
        own = self.breakpoints
        for left in breakpoints[:-1]:
            while own[k + 1] <= left:
                k += 1
            out.append(self.values[k])
        return tuple(out)

    def refine(self, other: "StepFunction") -> tuple:
        """Common partition of two step functions."""
        return tuple(sorted(set(self.breakpoints) | set(other.breakpoints)))

    def _combine(self, other, op):
        if isinstance(other, StepFunction):
            bp = self.refine(other)
            return StepFunction(bp, tuple(op(a, b) for a, b in zip(self.on(bp), other.on(bp))))
        return StepFunction(self.breakpoints, tuple(op(a, other) for a in self.values))

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __neg__(self):
        return StepFunction(self.breakpoints, tuple(-v for v in self.values))

    def __mul__(self, scalar):
        if isinstance(scalar, StepFunction):
            return self._combine(scalar, lambda a, b: a * b)
        return StepFunction(self.breakpoints, tuple(scalar * v for v in self.values))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return StepFunction(self.breakpoints, tuple(v / scalar for v in self.values))

    def integral(self):
        return sum(w * v for w, v in zip(self.widths, self.values))

    def is_nondecreasing(self, tol: float = 0.0) -> bool:
        return all(b - a >= -tol for a, b in zip(self.values, self.values[1:]))

    def simplify(self) -> "StepFunction":
        """Drop breakpoints between equal neighbouring values."""
        bp = [self.breakpoints[0]]
        vals = [self.values[0]]
        for x, v in zip(self.breakpoints[1:-1], self.values[1:]):
            if v != vals[-1]:
                bp.append(x)
                vals.append(v)
        bp.append(self.breakpoints[-1])
        return StepFunction(tuple(bp), tuple(vals))

    def max_abs_diff(self, other: "StepFunction"):
        bp = self.refine(other)
        return max(abs(a - b) for a, b in zip(self.on(bp), other.on(bp)))

    def equals(self, other: "StepFunction", tol: float = 0.0) -> bool:
        """Cell-wise comparison on the common partition."""
        return self.max_abs_diff(other) <= tol

    def to_measure(self) -> DiscreteMeasure:
        """Pushforward of Lebesgue measure on (0, 1); inverse of quantile_of."""
        if not self.is_nondecreasing():
            raise ValueError("only nondecreasing step functions are quantile maps")
        return DiscreteMeasure.from_atoms(
            [Atom(w, v) for w, v in zip(self.widths, self.values)], merge_tol=0.0
        )


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous piecewise-linear function on [0, 1] given by its knots."""

    xs: tuple
    ys: tuple

    def __post_init__(self):
        xs, ys = tuple(self.xs), tuple(self.ys)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if len(xs) != len(ys) or len(xs) < 2:
            raise ValueError("need at least two knots with one value each")
        if xs[0] != 0 or xs[-1] != 1:
            raise ValueError("knots must span [0, 1]")
        for a, b in zip(xs, xs[1:]):
            if not a < b:
                raise ValueError("knot abscissae must be strictly increasing")

    @classmethod
    def _trusted(cls, xs: tuple, ys: tuple) -> "PiecewiseLinear":
        g = object.__new__(cls)
        object.__setattr__(g, "xs", xs)
        object.__setattr__(g, "ys", ys)
        return g

    @property
    def knots(self) -> tuple:
        return tuple(zip(self.xs, self.ys))

    def __call__(self, x):
        if not 0 <= x <= 1:
            raise ValueError(f"{x!r} outside [0, 1]")
        k = min(bisect_right(self.xs, x) - 1, len(self.xs) - 2)
        x0, x1, y0, y1 = self.xs[k], self.xs[k + 1], self.ys[k], self.ys[k + 1]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    def slopes(self) -> tuple:
        return tuple(
            (y1 - y0) / (x1 - x0)
            for x0, x1, y0, y1 in zip(self.xs, self.xs[1:], self.ys, self.ys[1:])
        )

    def derivative(self) -> StepFunction:
        return StepFunction(self.xs, self.slopes())

    def is_convex(self, tol: float = 0.0) -> bool:
        s = self.slopes()
        return all(b - a >= -tol for a, b in zip(s, s[1:]))

    def argmin(self):
        """(x, value) of the minimum; attained at a knot."""
        k = min(range(len(self.ys)), key=lambda i: self.ys[i])
        return self.xs[k], self.ys[k]


@dataclass(frozen=True)
class Domain:
    """Closed subset of the line: a finite union of disjoint closed intervals.

    Each component is ``(lo, hi)`` with ``lo`` possibly ``-inf`` and ``hi``
    possibly ``+inf``.
    """

    components: tuple

    def __post_init__(self):
        comps = tuple(tuple(c) for c in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ValueError("domain must have at least one component")
        for lo, hi in comps:
            if not lo < hi:
                raise ValueError(f"degenerate component [{lo}, {hi}]")
        for (_, hi), (lo, _) in zip(comps, comps[1:]):
            if not hi < lo:
                raise ValueError("components must be sorted with disjoint closures")

    @classmethod
    def line(cls) -> "Domain":
        return cls(((-INF, INF),))

    @classmethod
    def interval(cls, a, b) -> "Domain":
        return cls(((a, b),))

    @classmethod
    def left_ray(cls, b) -> "Domain":
        return cls(((-INF, b),))

    @classmethod
    def right_ray(cls, a) -> "Domain":
        return cls(((a, INF),))

    @classmethod
    def union(cls, *domains: "Domain") -> "Domain":
        comps = sorted((c for d in domains for c in d.components), key=lambda c: c[0])
        return cls(tuple(comps))

    @property
    def is_line(self) -> bool:
        return self.components == ((-INF, INF),)

    @property
    def kind(self) -> str:
        if len(self.components) > 1:
            return "union"
        lo, hi = self.components[0]
        if lo == -INF and hi == INF:
            return "line"
        if lo == -INF:
            return "left_ray"
        if hi == INF:
            return "right_ray"
        return "interval"

    def component_of(self, y) -> int | None:
        for k, (lo, hi) in enumerate(self.components):
            if lo <= y <= hi:
                return k
        return None

    def contains(self, y) -> bool:
        return self.component_of(y) is not None

    def boundary_points(self) -> tuple:
        return tuple(e for c in self.components for e in c if e not in (-INF, INF))

    def on_boundary(self, y) -> bool:
        return y in self.boundary_points()


# ---------------------------------------------------------------------------
# operations


def quantile_of(measure: DiscreteMeasure) -> StepFunction:
    """Right-continuous quantile function of ``measure`` on (0, 1)."""
    return StepFunction(_cumulative(measure.masses), measure.positions)


class CDF:
    """Right-continuous cumulative distribution function of a discrete measure."""

    def __init__(self, measure: DiscreteMeasure):
        self.positions = measure.positions
        self.cumulative = _cumulative(measure.masses)

    def __call__(self, y):
        return self.cumulative[bisect_right(self.positions, y)]


def cdf_of(measure: DiscreteMeasure) -> CDF:
    return CDF(measure)


def pushforward(measure: DiscreteMeasure, mapping: Callable | Sequence,
                merge_tol: float = MERGE_TOL) -> DiscreteMeasure:
    """Image measure under ``mapping``.

    ``mapping`` is either a function of position or a sequence giving the new
    position of each atom.  Atoms landing together are merged; velocities are
    averaged with mass weights.
    """
    if callable(mapping):
        targets = [mapping(a.position) for a in measure.atoms]
    else:
        targets = list(mapping)
        if len(targets) != len(measure):
            raise ValueError("mapping must give one position per atom")
    return DiscreteMeasure.from_atoms(
        [Atom(a.mass, y, a.velocity) for a, y in zip(measure.atoms, targets)],
        merge_tol=merge_tol,
    )


def l2_inner(f: StepFunction, g: StepFunction):
    """Exact integral of ``f * g`` over (0, 1)."""
    bp = f.refine(g)
    widths = [b - a for a, b in zip(bp, bp[1:])]
    return sum(w * a * b for w, a, b in zip(widths, f.on(bp), g.on(bp)))


def l2_norm(f: StepFunction) -> float:
    return math.sqrt(l2_inner(f, f))


def wasserstein2_squared(mu: DiscreteMeasure, nu: DiscreteMeasure):
    d = quantile_of(mu) - quantile_of(nu)
    return l2_inner(d, d)


def wasserstein2(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Quadratic Wasserstein distance, via the L2 distance of quantiles."""
    return math.sqrt(wasserstein2_squared(mu, nu))


def antiderivative(f: StepFunction) -> PiecewiseLinear:
    """Primitive ``F(x) = int_0^x f``; continuous with slope f on each cell."""
    bp = f.breakpoints
    acc = 0 * f.values[0]
    ys = [acc]
    for a, b, v in zip(bp, bp[1:], f.values):
        acc = acc + (b - a) * v
        ys.append(acc)
    return PiecewiseLinear._trusted(bp, tuple(ys))
