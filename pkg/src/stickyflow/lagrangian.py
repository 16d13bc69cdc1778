"""Closed-form Lagrangian solutions and the checks built on them.

On the free line the quantile map of the sticky-particle solution at time
``t`` is the monotone projection of ``N0 + t V0``; :func:`solve_quantile`
evaluates it with one PAVA pass, independently for every ``t``.  The
confinement construction freezes free-flow trajectories at the first
boundary hit and is compared against the wall-aware event engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .cone import pava
from .engine import EventLog, atom_positions, clusters_at, quantile_at, simulate, state_at
from .quantile import (
    INF,
    Atom,
    DiscreteMeasure,
    Domain,
    StepFunction,
    is_exact,
    l2_inner,
    quantile_of,
    wasserstein2,
)

__all__ = [
    "LagrangianSolution",
    "ConfinedFlow",
    "solve_quantile",
    "dual_oracle_gap",
    "generic_decay_check",
    "confine_flow",
    "confinement_equivalence",
    "oleinik_check",
    "flow_identity_check",
]


@dataclass(frozen=True)
class LagrangianSolution:
    """Initial quantile map ``N0`` and velocity ``V0 = v0 o N0`` on shared cells."""

    N0: StepFunction
    V0: StepFunction
    domain: Domain = Domain.line()

    def __post_init__(self):
        if self.N0.breakpoints != self.V0.breakpoints:
            raise ValueError("N0 and V0 must share breakpoints")
        if not self.N0.is_nondecreasing():
            raise ValueError("N0 must be nondecreasing")
        for y in self.N0.values:
            if not self.domain.contains(y):
                raise ValueError(f"N0 takes value {y!r} outside the domain")

    @classmethod
    def from_measure(cls, measure: DiscreteMeasure, domain: Domain | None = None):
        return cls(quantile_of(measure), measure.velocity_step(), domain or Domain.line())


def solve_quantile(sol: LagrangianSolution, t) -> StepFunction:
    """Quantile map at time ``t`` as the monotone projection of ``N0 + t V0``."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    if not sol.domain.is_line:
        raise ValueError("the projection formula describes the free line; "
                         "use the wall-aware engine for confined domains")
    free = sol.N0 + sol.V0 * t
    return StepFunction(free.breakpoints, tuple(pava(free.values, free.widths)))


def dual_oracle_gap(log: EventLog, sol: LagrangianSolution, t) -> float:
    """L2 distance between the engine quantile and the projected one at ``t``."""
    d = quantile_at(log, t) - solve_quantile(sol, t)
    return math.sqrt(l2_inner(d, d))


@dataclass(frozen=True)
class DecayCheck:
    lhs: float
    rhs: float
    ok: bool


def generic_decay_check(sol: LagrangianSolution, t, tol: float = 1e-10) -> DecayCheck:
    """Compare ``||N(t)/t - P V0||`` with ``||N0|| / t``."""
    if not t > 0:
        raise ValueError("t must be positive")
    proj_v = StepFunction(sol.V0.breakpoints, tuple(pava(sol.V0.values, sol.V0.widths)))
    d = solve_quantile(sol, t) / t - proj_v
    lhs2 = l2_inner(d, d)
    rhs2 = l2_inner(sol.N0, sol.N0) / (t * t)
    lhs, rhs = math.sqrt(lhs2), math.sqrt(rhs2)
    return DecayCheck(lhs, rhs, lhs2 <= rhs2 if is_exact(lhs2, rhs2) else lhs <= rhs + tol)


# ---------------------------------------------------------------------------
# confinement


@dataclass(frozen=True)
class ConfinedFlow:
    """Free-line flow with every trajectory frozen at its first boundary hit."""

    free_log: EventLog
    domain: Domain
    hit_times: tuple
    hit_walls: tuple

    def positions(self, t) -> tuple:
        free = atom_positions(self.free_log, t)
        return tuple(
            w if t >= h else x for x, h, w in zip(free, self.hit_times, self.hit_walls)
        )

    def velocities(self, t) -> tuple:
        vel = [None] * len(self.free_log.initial)
        for c in clusters_at(self.free_log, t):
            for i in c.members:
                vel[i] = c.velocity
        return tuple(0 * v if t >= h else v for v, h in zip(vel, self.hit_times))

    def state_at(self, t) -> DiscreteMeasure:
        atoms = self.free_log.initial.atoms
        return DiscreteMeasure.from_atoms(
            [Atom(a.mass, y, v) for a, y, v in zip(atoms, self.positions(t), self.velocities(t))]
        )


def _first_hit(log: EventLog, member: int, lo, hi):
    """First time the free trajectory of ``member`` reaches ``lo`` or ``hi``."""
    snaps = log.snapshots
    for j, (t0, clusters) in enumerate(snaps):
        t1 = snaps[j + 1][0] if j + 1 < len(snaps) else INF
        c = next(c for c in clusters if member in c.members)
        y, v = c.position, c.velocity
        if y <= lo:
            return t0, lo
        if y >= hi:
            return t0, hi
        if v < 0 and lo != -INF:
            t = t0 + (y - lo) / -v
            if t <= t1:
                return t, lo
        elif v > 0 and hi != INF:
            t = t0 + (hi - y) / v
            if t <= t1:
                return t, hi
    return INF, None


def confine_flow(free: EventLog, domain: Domain) -> ConfinedFlow:
    """Freeze the trajectories of a free-line flow at the domain boundary.

    The free flow must come from data inside a single component, with zero
    velocity on any atom that starts on the boundary.
    """
    if not free.domain.is_line:
        raise ValueError("confine_flow expects a flow simulated on the whole line")
    comps = {domain.component_of(a.position) for a in free.initial.atoms}
    if None in comps or len(comps) != 1:
        raise ValueError("initial support must lie inside a single domain component")
    lo, hi = domain.components[comps.pop()]
    for i, a in enumerate(free.initial.atoms):
        if a.position in (lo, hi) and a.velocity != 0:
            raise ValueError(f"atom {i} starts on the boundary with nonzero velocity")
    hits = [_first_hit(free, i, lo, hi) for i in range(len(free.initial))]
    return ConfinedFlow(free, domain, tuple(h[0] for h in hits), tuple(h[1] for h in hits))


@dataclass(frozen=True)
class EquivalenceReport:
    max_distance: float
    max_velocity_gap: float
    first_failure: object
    n_times: int
    ok: bool


def _restrict(measure: DiscreteMeasure, idx):
    total = sum(measure.atoms[i].mass for i in idx)
    return DiscreteMeasure.from_atoms(
        [Atom(measure.atoms[i].mass / total, measure.atoms[i].position,
              measure.atoms[i].velocity) for i in idx], merge_tol=0.0)


def confinement_equivalence(initial: DiscreteMeasure, domain: Domain, n_times: int = 64,
                            tol: float = 1e-10) -> EquivalenceReport:
    """Confined free flow versus native sticky walls at ``n_times`` sample times.

    Atoms are split by domain component; each part is simulated freely on
    the line, confined to its component, and the union is compared with the
    wall-aware engine run on the full domain.
    """
    native = simulate(initial, domain)
    parts = {}
    for i, a in enumerate(initial.atoms):
        k = domain.component_of(a.position)
        if k is None:
            raise ValueError(f"atom {i} lies outside the domain")
        parts.setdefault(k, []).append(i)
    flows = []
    for k, idx in parts.items():
        sub = _restrict(initial, idx)
        flow = confine_flow(simulate(sub), Domain((domain.components[k],)))
        flows.append((idx, flow))

    horizon = max([t for t in native.event_times] +
                  [t for _, f in flows for t in f.hit_times if t != INF] +
                  [t for _, f in flows for t in f.free_log.event_times] + [0])
    horizon = (horizon or 1) * Fraction(3, 2) if is_exact(horizon) else (horizon or 1) * 1.5
    times = [horizon * k / (n_times - 1) for k in range(n_times)]

    # velocities jump at events; in binary64 the two routes may round an event
    # instant to opposite sides, so velocities are not compared right there
    marks = sorted(set(native.event_times) | {h for _, f in flows for h in f.hit_times
                                              if h != INF})
    exact = is_exact(horizon)

    def near_event(t):
        return not exact and any(abs(t - m) <= 1e-9 * max(1.0, abs(m)) for m in marks)

    worst, worst_v, first = 0.0, 0.0, None
    for t in times:
        atoms = []
        vel_confined = [None] * len(initial)
        for idx, f in flows:
            for i, y, v in zip(idx, f.positions(t), f.velocities(t)):
                atoms.append(Atom(initial.atoms[i].mass, y, v))
                vel_confined[i] = v
        confined = DiscreteMeasure.from_atoms(atoms)
        d = wasserstein2(confined, state_at(native, t))
        vel_native = [None] * len(initial)
        for c in clusters_at(native, t):
            for i in c.members:
                vel_native[i] = c.velocity
        dv = 0 if near_event(t) else max(abs(a - b) for a, b in zip(vel_confined, vel_native))
        worst, worst_v = max(worst, d), max(worst_v, float(dv))
        if first is None and (d > tol or dv > tol):
            first = t
    return EquivalenceReport(worst, worst_v, first, n_times, first is None)


# ---------------------------------------------------------------------------
# Oleinik and flow identities


@dataclass(frozen=True)
class OleinikReport:
    t: object
    max_quotient: float
    margin: float
    two_sided_margin: float
    uniform_margin: float
    ok: bool


def oleinik_check(source, t, bounds=None, tol: float = 1e-10) -> OleinikReport:
    """One-sided Lipschitz bound on the velocity at time ``t``.

    ``source`` is an :class:`EventLog` or a :class:`ConfinedFlow`.  The
    difference quotient of velocities is taken over all pairs of cluster
    positions within a component, with finite boundary points included as
    zero-velocity points.  For bounded components, or when ``bounds=(a, b)``
    is given for a flow known to stay in ``[a, b]``, the two-sided bound
    ``(y - b)/t <= v <= (y - a)/t`` and ``|v| <= (b - a)/t`` are checked too.
    Margins are ``measured - allowed``; nonpositive means satisfied.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if isinstance(source, ConfinedFlow):
        domain = source.domain
        state = source.state_at(t)
        points = [(a.position, a.velocity, domain.component_of(a.position)) for a in state.atoms]
    else:
        domain = source.domain
        points = [(c.position, c.velocity, c.component) for c in clusters_at(source, t)]

    inv_t = 1 / t
    worst_q = -INF
    two_sided = -INF
    uniform = -INF
    for k, (lo, hi) in enumerate(domain.components):
        pts = {}
        for y, v, comp in points:
            if comp == k:
                pts[y] = v
        for e in (lo, hi):
            if e not in (-INF, INF):
                pts.setdefault(e, 0 * inv_t)
        ys = sorted(pts)
        for i, y1 in enumerate(ys):
            for y2 in ys[i + 1:]:
                worst_q = max(worst_q, float((pts[y2] - pts[y1]) / (y2 - y1)))
        a, b = (lo, hi) if bounds is None else bounds
        if a != -INF and b != INF:
            for y, v, comp in points:
                if comp != k:
                    continue
                two_sided = max(two_sided, float(v - (y - a) * inv_t), float((y - b) * inv_t - v))
                uniform = max(uniform, float(abs(v) - (b - a) * inv_t))
    margin = worst_q - float(inv_t)
    ok = margin <= tol and two_sided <= tol and uniform <= tol
    return OleinikReport(t, worst_q, margin, two_sided, uniform, ok)


def flow_identity_check(log: EventLog, s, t):
    """Residual of ``sum m X(t) X(s) = sum m X(t) (y + s v0)`` for ``s <= t``.

    Holds for free-line flows (no wall contact).
    """
    if not 0 <= s <= t:
        raise ValueError("need 0 <= s <= t")
    xt = atom_positions(log, t)
    xs = atom_positions(log, s)
    atoms = log.initial.atoms
    lhs = sum(a.mass * p * q for a, p, q in zip(atoms, xt, xs))
    rhs = sum(a.mass * p * (a.position + s * a.velocity) for a, p in zip(atoms, xt))
    return abs(lhs - rhs)
