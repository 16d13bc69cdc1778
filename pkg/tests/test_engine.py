from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import dyadic_measures, pair
from stickyflow.bombardment import reference_family, truncated_system
from stickyflow.engine import (
    INTERIOR,
    WALL,
    Cluster,
    atom_positions,
    clusters_at,
    merge,
    next_event,
    quantile_at,
    simulate,
    state_at,
    velocity_profile,
)
from stickyflow.quantile import Atom, DiscreteMeasure, Domain

UNIT = Domain.interval(F(0), F(1))


def naive_sticky(atoms, lo=None, hi=None):
    """Reference dynamics: advance to the next meeting, fuse everything that touches.

    ``atoms`` is a list of (mass, position, velocity) Fractions.  Returns the
    final list of [mass, position, velocity, frozen] and the event times.
    """
    cl = [[m, x, v, False] for m, x, v in atoms]
    for c in cl:
        if c[1] in (lo, hi):
            c[2], c[3] = F(0), True
    now, times = F(0), []
    while True:
        cands = []
        for a, b in zip(cl, cl[1:]):
            if a[2] > b[2]:
                cands.append((b[1] - a[1]) / (a[2] - b[2]))
        for c in cl:
            if c[2] < 0 and lo is not None:
                cands.append((c[1] - lo) / -c[2])
            if c[2] > 0 and hi is not None:
                cands.append((hi - c[1]) / c[2])
        if not cands:
            return cl, times
        dt = min(cands)
        now += dt
        times.append(now)
        for c in cl:
            c[1] += c[2] * dt
        fused = [cl[0]]
        for c in cl[1:]:
            p = fused[-1]
            if c[1] == p[1]:
                m = p[0] + c[0]
                p[2] = (p[0] * p[2] + c[0] * c[2]) / m
                p[0], p[3] = m, p[3] or c[3]
            else:
                fused.append(c)
        for c in fused:
            if c[3] or c[1] in (lo, hi):
                c[2], c[3] = F(0), True
        cl = fused


def summary(log):
    return [[c.mass, c.position, c.velocity, c.wall] for c in log.final_clusters]


# --- next_event -------------------------------------------------------------


def clusters(*rows):
    return [Cluster(F(m), F(x), F(v), (i,)) for i, (m, x, v) in enumerate(rows)]


def test_next_event_symmetric_pair():
    ev = next_event(clusters(("1/2", "1/4", 1), ("1/2", "3/4", -1)), Domain.line())
    assert (ev.time, ev.position, ev.kind) == (F(1, 4), F(1, 2), INTERIOR)
    assert ev.resulting.velocity == 0


def test_next_event_single_cluster_hits_wall():
    ev = next_event(clusters((1, "1/2", -2)), UNIT)
    assert (ev.time, ev.position, ev.kind) == (F(1, 4), 0, WALL)
    assert ev.resulting.velocity == 0 and ev.resulting.wall


def test_next_event_triple_collision_is_one_event():
    ev = next_event(clusters(("1/3", 0, 1), ("1/3", "1/2", 0), ("1/3", 1, -1)), Domain.line())
    assert (ev.time, ev.position) == (F(1, 2), F(1, 2))
    assert len(ev.participants) == 3
    assert ev.resulting.members == (0, 1, 2)


def test_next_event_none_when_separating():
    assert next_event(clusters(("1/2", 0, -1), ("1/2", 1, 1)), Domain.line()) is None
    assert next_event(clusters(("1/2", 0, 1), ("1/2", 1, 1)), Domain.line()) is None


# --- merge --------------------------------------------------------------------


def test_merge_examples():
    a = Cluster(F(1, 2), F(0), F(1), (0,))
    b = Cluster(F(1, 2), F(0), F(-1), (1,))
    c = Cluster(F(1, 2), F(0), F(0), (1,))
    assert merge([a, b]).velocity == 0
    assert merge([a, c]).velocity == F(1, 2)
    w = merge([Cluster(F(1, 4), F(0), F(-1, 2), (0,))], wall_position=F(0))
    assert (w.velocity, w.position, w.wall) == (0, 0, True)


def test_merge_with_stuck_cluster_stays_stuck():
    stuck = Cluster(F(1, 2), F(0), F(0), (0,), wall=True)
    moving = Cluster(F(1, 2), F(0), F(-1), (1,))
    out = merge([moving, stuck])
    assert out.wall and out.velocity == 0 and out.members == (0, 1)


# --- simulate -----------------------------------------------------------------


def test_symmetric_pair_equilibrates(symmetric_pair):
    log = simulate(symmetric_pair)
    assert log.event_times == (F(1, 4),)
    assert log.equilibrium_time == F(1, 4)
    assert state_at(log, F(1, 2)) == DiscreteMeasure.dirac(F(1, 2))


def test_outward_pair_in_box(outward_pair):
    log = simulate(outward_pair, UNIT)
    assert [e.kind for e in log.events] == [WALL, WALL]
    assert all(e.time == F(1, 4) for e in log.events)
    final = state_at(log, F(1))
    assert final.positions == (0, 1) and final.masses == (F(1, 2), F(1, 2))
    assert log.at_rest


def test_truncated_bombardment_first_merge():
    mu = truncated_system(reference_family(), 2, F(1, 3))
    log = simulate(mu)
    first = log.events[0]
    assert (first.time, first.position) == (F(3, 10), F(3, 5))
    assert first.kind == INTERIOR


def test_atom_outside_domain_rejected():
    with pytest.raises(ValueError):
        simulate(DiscreteMeasure.dirac(F(2)), UNIT)


def test_boundary_atom_absorbed_at_time_zero():
    mu = pair("1/2", 0, -1, "1/2", "1/2", 0)
    log = simulate(mu, UNIT)
    assert log.events[0].time == 0 and log.events[0].kind == WALL
    assert clusters_at(log, F(1))[0].wall


def test_wall_wins_simultaneous_interior_and_wall_meeting():
    # both particles reach 0 at t = 1/2 together
    mu = pair("1/2", "1/4", "-1/2", "1/2", "1/2", -1)
    log = simulate(mu, UNIT)
    assert len(log.events) == 1
    ev = log.events[0]
    assert ev.kind == WALL and ev.time == F(1, 2) and ev.resulting.velocity == 0
    assert ev.resulting.members == (0, 1)


# --- state queries ------------------------------------------------------------


def test_state_at_examples(symmetric_pair):
    log = simulate(symmetric_pair)
    assert state_at(log, F(1, 10)).positions == (F(7, 20), F(13, 20))
    assert state_at(log, 0) == symmetric_pair
    assert state_at(log, F(1, 2)).positions == (F(1, 2),)


def test_state_beyond_horizon_rejected(symmetric_pair):
    log = simulate(symmetric_pair, horizon=F(1, 10))
    with pytest.raises(ValueError):
        state_at(log, F(1, 5))
    with pytest.raises(ValueError):
        state_at(log, -1)


def test_velocity_profile_examples(symmetric_pair, outward_pair):
    log = simulate(symmetric_pair)
    assert velocity_profile(log, F(1, 10)) == (1, -1)
    assert velocity_profile(log, F(1, 2)) == (0,)
    boxed = simulate(outward_pair, UNIT)
    assert velocity_profile(boxed, F(1, 2)) == (0, 0)


def test_quantile_at_uses_initial_cells(symmetric_pair):
    log = simulate(symmetric_pair)
    N = quantile_at(log, F(1, 10))
    assert N.breakpoints == (0, F(1, 2), 1)
    assert N.values == (F(7, 20), F(13, 20))


# --- properties ---------------------------------------------------------------


@given(dyadic_measures(min_atoms=2, max_atoms=10))
def test_matches_naive_reference_on_line(mu):
    log = simulate(mu)
    ref, times = naive_sticky([(a.mass, a.position, a.velocity) for a in mu.atoms])
    assert summary(log) == ref
    assert list(log.event_times) == sorted(set(times))


@given(dyadic_measures(min_atoms=1, max_atoms=10))
def test_matches_naive_reference_in_box(mu):
    # squeeze positions into [0, 1]
    atoms = [(a.mass, (a.position + 2) / 4, a.velocity) for a in mu.atoms]
    measure = DiscreteMeasure(tuple(Atom(*t) for t in atoms))
    log = simulate(measure, UNIT)
    ref, _ = naive_sticky(atoms, F(0), F(1))
    assert summary(log) == ref
    assert log.at_rest and log.equilibrium_time is not None


@given(dyadic_measures(min_atoms=2, max_atoms=10))
def test_conservation_and_monotone_energy(mu):
    log = simulate(mu)
    p0 = mu.momentum()
    energies = []
    for t, cl in log.snapshots:
        assert sum(c.mass for c in cl) == 1
        assert sum(c.mass * c.velocity for c in cl) == p0
        energies.append(sum(c.mass * c.velocity ** 2 for c in cl))
        assert all(a.position < b.position for a, b in zip(cl, cl[1:]))
    assert all(b <= a for a, b in zip(energies, energies[1:]))
    for ev in log.events:
        if len({c.velocity for c in ev.participants}) > 1:
            k = next(i for i, s in enumerate(log.snapshots) if s[0] == ev.time)
            assert energies[k] < energies[k - 1]


@given(dyadic_measures(min_atoms=2, max_atoms=10))
def test_mean_position_is_affine(mu):
    log = simulate(mu)
    for t in (F(0), F(1, 3), F(2), F(7)):
        if t <= log.horizon:
            assert state_at(log, t).mean() == mu.mean() + mu.momentum() * t


@given(dyadic_measures(min_atoms=1, max_atoms=10))
def test_finite_termination_bound(mu):
    atoms = tuple(Atom(a.mass, (a.position + 2) / 4, a.velocity) for a in mu.atoms)
    log = simulate(DiscreteMeasure(atoms), UNIT)
    merged = sum(len(e.participants) - 1 for e in log.events if e.kind == INTERIOR)
    walls = sum(1 for e in log.events if e.kind == WALL)
    assert merged <= len(atoms) - 1
    assert walls <= 2 + len(atoms)  # boundary atoms at t = 0 add one each


@given(dyadic_measures(min_atoms=2, max_atoms=10), st.integers(0, 64))
def test_sticky_walls_freeze(mu, k):
    atoms = tuple(Atom(a.mass, (a.position + 2) / 4, a.velocity) for a in mu.atoms)
    log = simulate(DiscreteMeasure(atoms), UNIT)
    t = F(k, 16)
    later = t + 1
    if later > log.horizon:
        return
    pos_now, pos_later = atom_positions(log, t), atom_positions(log, later)
    for i, x in enumerate(pos_now):
        if x in (0, 1):
            assert pos_later[i] == x


@given(dyadic_measures(min_atoms=2, max_atoms=8))
def test_energy_constant_before_first_event(mu):
    log = simulate(mu)
    first = log.event_times[0] if log.event_times else F(10)
    e0 = mu.kinetic_energy()
    for frac in (F(0), F(1, 3), F(9, 10)):
        t = first * frac
        cl = clusters_at(log, t)
        assert len(cl) == len(mu)
        assert sum(c.mass * c.velocity ** 2 for c in cl) == e0


def test_float_mode_groups_near_simultaneous_events():
    mu = DiscreteMeasure.from_atoms([Atom(1 / 3, 0.0, 1.0), Atom(1 / 3, 0.5, 0.0),
                                     Atom(1 - 2 / 3, 1.0, -1.0)])
    log = simulate(mu)
    assert len(log.events) == 1 and len(log.events[0].participants) == 3
    assert log.events[0].time == pytest.approx(0.5, abs=1e-15)
