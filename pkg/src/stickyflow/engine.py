"""Event-driven sticky-particle dynamics on the line or a closed domain.

Clusters fly at constant velocity until two neighbours meet, at which point
they merge with momentum-conserving velocity.  On a bounded domain a
cluster reaching the boundary sticks there with zero velocity, and anything
that later runs into it sticks too.

Because order is preserved in one dimension only adjacent pairs need
meeting times; these live in a heap and are invalidated lazily when either
side changes.
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace
from itertools import count
from typing import Sequence

from .quantile import Atom, DiscreteMeasure, Domain, StepFunction, _cumulative, is_exact

__all__ = [
    "TIME_TOL",
    "Cluster",
    "CollisionEvent",
    "EventLog",
    "merge",
    "next_event",
    "simulate",
    "state_at",
    "clusters_at",
    "quantile_at",
    "velocity_profile",
    "atom_positions",
]

#: binary64 events closer than this in time are processed together
TIME_TOL = 1e-12
POS_TOL = 1e-12

INTERIOR = "merge"
WALL = "wall"


@dataclass(frozen=True)
class Cluster:
    """A merged particle. ``members`` are indices of the initial atoms."""

    mass: object
    position: object
    velocity: object
    members: tuple
    component: int = 0
    wall: bool = False

    def at(self, dt) -> "Cluster":
        if dt == 0 or self.velocity == 0:
            return self
        return replace(self, position=self.position + self.velocity * dt)


@dataclass(frozen=True)
class CollisionEvent:
    time: object
    position: object
    participants: tuple
    resulting: Cluster
    kind: str


@dataclass(frozen=True)
class EventLog:
    """Complete record of a run.

    ``snapshots[j] = (time, clusters)`` is the state right after the events
    at that time; clusters fly freely until the next snapshot.
    """

    initial: DiscreteMeasure
    domain: Domain
    events: tuple
    snapshots: tuple
    horizon: object
    equilibrium_time: object = None
    prefix: tuple = field(default=(), repr=False)

    @property
    def event_times(self) -> tuple:
        return tuple(s[0] for s in self.snapshots[1:])

    @property
    def final_clusters(self) -> tuple:
        return self.snapshots[-1][1]

    @property
    def at_rest(self) -> bool:
        return all(c.velocity == 0 for c in self.final_clusters)

    @property
    def exact(self) -> bool:
        return self.initial.exact


# ---------------------------------------------------------------------------
# pure helpers


def _pair_time(left: Cluster, right: Cluster, now):
    """Time at which two adjacent clusters (positions at ``now``) meet."""
    if left.component != right.component:
        return None
    dv = left.velocity - right.velocity
    if not dv > 0:
        return None
    gap = right.position - left.position
    if gap <= 0:
        return now
    return now + gap / dv


def _wall_time(c: Cluster, domain: Domain, now):
    lo, hi = domain.components[c.component]
    if c.wall:
        return None
    if c.velocity < 0 and lo != -math.inf:
        return now + max(c.position - lo, 0) / -c.velocity
    if c.velocity > 0 and hi != math.inf:
        return now + max(hi - c.position, 0) / c.velocity
    return None


def merge(participants: Sequence[Cluster], wall_position=None) -> Cluster:
    """Merge clusters that meet; momentum is conserved unless a wall is involved.

    Passing ``wall_position`` (or including a cluster already stuck to a
    wall) produces a frozen cluster at the wall with zero velocity.
    """
    parts = sorted(participants, key=lambda c: c.members[0])
    mass = sum(c.mass for c in parts)
    stuck = [c for c in parts if c.wall]
    if wall_position is None and stuck:
        wall_position = stuck[0].position
    members = tuple(i for c in parts for i in c.members)
    if wall_position is not None:
        return Cluster(mass, wall_position, 0 * mass, members, parts[0].component, True)
    position = sum(c.mass * c.position for c in parts) / mass
    velocity = sum(c.mass * c.velocity for c in parts) / mass
    return Cluster(mass, position, velocity, members, parts[0].component, False)


def _close(a, b, tol):
    return a == b if tol == 0 else abs(a - b) <= tol


def _group(now, clusters: Sequence[Cluster], pairs, walls, domain):
    """Turn simultaneous pair/wall hits into grouped events.

    ``pairs`` holds indices ``k`` meaning clusters k and k+1 meet; ``walls``
    maps cluster index to the wall coordinate it reaches.
    """
    parent = list(range(len(clusters)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    involved = set(walls)
    for k in pairs:
        parent[find(k + 1)] = find(k)
        involved.update((k, k + 1))
    groups: dict[int, list[int]] = {}
    for i in sorted(involved):
        groups.setdefault(find(i), []).append(i)

    events = []
    for idx in groups.values():
        parts = [clusters[i] for i in idx]
        hit = [walls[i] for i in idx if i in walls]
        wall_pos = hit[0] if hit else None
        if wall_pos is None and any(c.wall for c in parts):
            wall_pos = next(c.position for c in parts if c.wall)
        result = merge(parts, wall_pos)
        events.append(CollisionEvent(now, result.position, tuple(parts), result,
                                     WALL if result.wall else INTERIOR))
    return events


def next_event(clusters: Sequence[Cluster], domain: Domain, now=0):
    """Earliest grouped event for clusters whose positions are given at ``now``.

    Returns ``None`` when no two neighbours ever meet and nothing reaches a
    wall.  Clusters meeting at the same instant and place come back as one
    event; if several separate groups share that instant the leftmost one is
    returned.
    """
    cands = []
    for k, (a, b) in enumerate(zip(clusters, clusters[1:])):
        t = _pair_time(a, b, now)
        if t is not None:
            cands.append((t, "pair", k))
    for k, c in enumerate(clusters):
        t = _wall_time(c, domain, now)
        if t is not None and _is_extreme(clusters, k, t, domain):
            cands.append((t, "wall", k))
    if not cands:
        return None
    t_star = min(c[0] for c in cands)
    exact = is_exact(t_star)
    tol = 0 if exact else TIME_TOL
    pairs = [k for t, kind, k in cands if kind == "pair" and _close(t, t_star, tol)]
    walls = {}
    for t, kind, k in cands:
        if kind == "wall" and _close(t, t_star, tol):
            walls[k] = _wall_coordinate(clusters[k], domain)
    moved = [c.at(t_star - now) for c in clusters]
    events = _group(t_star, moved, pairs, walls, domain)
    return min(events, key=lambda e: e.position)


def _wall_coordinate(c: Cluster, domain: Domain):
    lo, hi = domain.components[c.component]
    return lo if c.velocity < 0 else hi


def _is_extreme(clusters, k, t, domain) -> bool:
    """Only the outermost cluster of a component can reach that wall first."""
    c = clusters[k]
    if c.velocity < 0:
        return k == 0 or clusters[k - 1].component != c.component
    return k == len(clusters) - 1 or clusters[k + 1].component != c.component


# ---------------------------------------------------------------------------
# simulation


class _Live:
    """Mutable bookkeeping record for one cluster during a run."""

    __slots__ = ("cluster", "t0", "left", "right", "version")

    def __init__(self, cluster, t0):
        self.cluster = cluster
        self.t0 = t0
        self.left = None
        self.right = None
        self.version = 0

    def at(self, t) -> Cluster:
        return self.cluster.at(t - self.t0)


def simulate(initial: DiscreteMeasure, domain: Domain | None = None, horizon=None) -> EventLog:
    """Run the sticky dynamics of ``initial`` until rest, escape, or ``horizon``.

    Atoms sitting on a boundary point at time 0 are stuck there from the
    start.  Raises ``ValueError`` for atoms outside the domain.
    """
    domain = domain or Domain.line()
    exact = initial.exact and all(is_exact(e) for e in domain.boundary_points())
    tol = 0 if exact else TIME_TOL
    zero = initial.masses[0] * 0

    prefix = _cumulative(initial.masses)

    clusters = []
    for i, a in enumerate(initial.atoms):
        comp = domain.component_of(a.position)
        if comp is None:
            raise ValueError(f"atom {i} at {a.position!r} lies outside the domain")
        clusters.append(Cluster(a.mass, a.position, a.velocity, (i,), comp))

    events: list[CollisionEvent] = []
    # atoms starting on the boundary are absorbed at t = 0
    for k, c in enumerate(clusters):
        if domain.on_boundary(c.position):
            stuck = merge([c], c.position)
            events.append(CollisionEvent(zero, c.position, (c,), stuck, WALL))
            clusters[k] = stuck
    snapshots = [(zero, tuple(clusters))]

    live = [_Live(c, zero) for c in clusters]
    for a, b in zip(live, live[1:]):
        a.right, b.left = b, a
    head = live[0] if live else None

    heap: list = []
    seq = count()

    def schedule(node: _Live, now, pair_only=False):
        c = node.at(now)
        if node.right is not None:
            t = _pair_time(c, node.right.at(now), now)
            if t is not None:
                heapq.heappush(heap, (t, next(seq), "pair", node, node.right,
                                      node.version, node.right.version))
        if pair_only:
            return
        extreme_left = node.left is None or node.left.cluster.component != c.component
        extreme_right = node.right is None or node.right.cluster.component != c.component
        t = _wall_time(c, domain, now)
        if t is not None and ((c.velocity < 0 and extreme_left) or (c.velocity > 0 and extreme_right)):
            heapq.heappush(heap, (t, next(seq), "wall", node, None, node.version, None))

    for node in live:
        schedule(node, zero)

    def valid(entry) -> bool:
        _, _, kind, a, b, va, vb = entry
        if a.version != va:
            return False
        return kind == "wall" or (b.version == vb and a.right is b)

    n_components = len(domain.components)
    budget = len(initial) - 1 + 2 * n_components + len(initial) + 1
    equilibrium = None
    now = zero
    while True:
        while heap and not valid(heap[0]):
            heapq.heappop(heap)
        if not heap:
            equilibrium = now
            break
        t_star = heap[0][0]
        if horizon is not None and t_star > horizon:
            break
        batch = []
        while heap and (not valid(heap[0]) or _close(heap[0][0], t_star, tol) or heap[0][0] < t_star):
            entry = heapq.heappop(heap)
            if valid(entry):
                batch.append(entry)
        budget -= 1
        if budget < 0:
            raise RuntimeError("event budget exhausted; the dynamics failed to terminate")

        # positional view of the nodes touched by this batch
        nodes: list[_Live] = []
        node = head
        while node is not None:
            nodes.append(node)
            node = node.right
        index = {id(n): k for k, n in enumerate(nodes)}
        moved = [n.at(t_star) for n in nodes]
        pairs, walls = [], {}
        for _, _, kind, a, b, _, _ in batch:
            if kind == "pair":
                pairs.append(index[id(a)])
            else:
                walls[index[id(a)]] = _wall_coordinate(a.cluster, domain)
        grouped = _group(t_star, moved, pairs, walls, domain)
        events.extend(grouped)

        # splice merged clusters into the linked list
        touched = []
        for ev in grouped:
            first = index_of_member(nodes, ev.participants[0].members[0])
            last = index_of_member(nodes, ev.participants[-1].members[0])
            left_n, right_n = nodes[first], nodes[last]
            new = _Live(ev.resulting, t_star)
            new.left, new.right = left_n.left, right_n.right
            if new.left is not None:
                new.left.right = new
            else:
                head = new
            if new.right is not None:
                new.right.left = new
            for dead in nodes[first:last + 1]:
                dead.version = -1
            touched.append(new)
        # neighbours keep their trajectories, so only meetings with the new
        # clusters need scheduling
        for new in touched:
            schedule(new, t_star)
            if new.left is not None and new.left.version >= 0:
                schedule(new.left, t_star, pair_only=True)
        now = t_star
        state = []
        node = head
        while node is not None:
            state.append(node.at(now))
            node = node.right
        snapshots.append((now, tuple(state)))

    return EventLog(initial, domain, tuple(events), tuple(snapshots),
                    math.inf if horizon is None or equilibrium is not None else horizon,
                    equilibrium, tuple(prefix))


def index_of_member(nodes: Sequence[_Live], member: int) -> int:
    for k, n in enumerate(nodes):
        if member in n.cluster.members:
            return k
    raise KeyError(member)


# ---------------------------------------------------------------------------
# queries


def _snapshot(log: EventLog, t):
    if t < 0:
        raise ValueError("time must be nonnegative")
    if t > log.horizon:
        raise ValueError(f"t={t!r} is beyond the simulated horizon {log.horizon!r}")
    times = [s[0] for s in log.snapshots]
    return log.snapshots[bisect_right(times, t) - 1]


def clusters_at(log: EventLog, t) -> tuple:
    """Live clusters at time ``t`` (events at exactly ``t`` already applied)."""
    t0, clusters = _snapshot(log, t)
    return tuple(c.at(t - t0) for c in clusters)


def state_at(log: EventLog, t) -> DiscreteMeasure:
    """Particle state at time ``t`` as a measure carrying cluster velocities."""
    return DiscreteMeasure.from_atoms(
        [Atom(c.mass, c.position, c.velocity) for c in clusters_at(log, t)]
    )


def quantile_at(log: EventLog, t) -> StepFunction:
    """Quantile function of the state at ``t``.

    Cell boundaries are exact prefix sums of the initial masses, so results
    from different times share breakpoints with the initial quantile map.
    """
    clusters = clusters_at(log, t)
    bp = [log.prefix[c.members[0]] for c in clusters] + [log.prefix[-1]]
    return StepFunction(tuple(bp), tuple(c.position for c in clusters))


def velocity_step_at(log: EventLog, t) -> StepFunction:
    """Cluster velocities on the same cells as :func:`quantile_at`."""
    clusters = clusters_at(log, t)
    bp = [log.prefix[c.members[0]] for c in clusters] + [log.prefix[-1]]
    return StepFunction(tuple(bp), tuple(c.velocity for c in clusters))


def velocity_profile(log: EventLog, t) -> tuple:
    """Conditional expectation of the initial velocity given the cluster.

    For each live cluster: mass-weighted mean of its members' initial
    velocities, or zero for clusters stuck to a wall.  On the free line this
    coincides with the flight velocity recorded in the log.
    """
    atoms = log.initial.atoms
    out = []
    for c in clusters_at(log, t):
        if c.wall:
            out.append(0 * c.mass)
            continue
        ms = [atoms[i].mass for i in c.members]
        out.append(sum(atoms[i].mass * atoms[i].velocity for i in c.members) / sum(ms))
    return tuple(out)


def atom_positions(log: EventLog, t) -> tuple:
    """Position of every initial atom at ``t`` (the Lagrangian map)."""
    pos = [None] * len(log.initial)
    for c in clusters_at(log, t):
        for i in c.members:
            pos[i] = c.position
    return tuple(pos)
