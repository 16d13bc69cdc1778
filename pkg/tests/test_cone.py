import itertools
import math
from fractions import Fraction as F

from hypothesis import given
from hypothesis import strategies as st

from conftest import step_functions
from stickyflow.cone import (
    cone_certificates,
    convex_envelope,
    is_confinement_consistent,
    pava,
    project_monotone,
)
from stickyflow.quantile import PiecewiseLinear, StepFunction, antiderivative, l2_inner, l2_norm

HALF = (F(0), F(1, 2), F(1))
THIRDS = (F(0), F(1, 3), F(2, 3), F(1))


def monotone_brute_force(values, widths, grid):
    """Best nondecreasing vector with entries from ``grid``, by enumeration."""
    best, arg = None, None
    for g in itertools.combinations_with_replacement(grid, len(values)):
        cost = sum(w * (v - x) ** 2 for v, x, w in zip(values, g, widths))
        if best is None or cost < best:
            best, arg = cost, g
    return arg


# --- convex_envelope --------------------------------------------------------


def test_envelope_of_convex_input_is_unchanged():
    valley = PiecewiseLinear(HALF, (0, F(-1, 2), 0))
    assert convex_envelope(valley) == valley
    line = PiecewiseLinear((F(0), F(1)), (F(0), F(1)))
    assert convex_envelope(line) == line


def test_envelope_of_tent_is_zero():
    env = convex_envelope(PiecewiseLinear(HALF, (0, F(1, 2), 0)))
    assert env.ys == (0, 0, 0)


def test_envelope_of_tent_matches_grid_search():
    # maximal convex minorant through the endpoints: search the midpoint value
    tent = PiecewiseLinear(HALF, (0, F(1, 2), 0))
    feasible = [F(k, 64) for k in range(-64, 65)
                if PiecewiseLinear(HALF, (0, F(k, 64), 0)).is_convex() and F(k, 64) <= F(1, 2)]
    assert convex_envelope(tent).ys[1] == max(feasible)


@given(step_functions())
def test_envelope_is_a_convex_minorant_touching_the_endpoints(f):
    F0 = antiderivative(f)
    env = convex_envelope(F0)
    assert env.is_convex()
    assert all(e <= y for e, y in zip(env.ys, F0.ys))
    assert env.ys[0] == F0.ys[0] and env.ys[-1] == F0.ys[-1]


# --- project_monotone -------------------------------------------------------


def test_projection_of_decreasing_pair_is_zero():
    r = project_monotone(StepFunction(HALF, (1, -1)))
    assert r.projection.values == (0, 0)
    assert monotone_brute_force((1, -1), (F(1, 2),) * 2, [F(k, 4) for k in range(-8, 9)]) == (0, 0)


def test_projection_of_increasing_pair_is_identity():
    f = StepFunction(HALF, (-1, 1))
    assert project_monotone(f).projection == f


def test_projection_pools_three_cells():
    r = project_monotone(StepFunction(THIRDS, (3, 1, 2)))
    assert r.projection.values == (2, 2, 2)
    assert monotone_brute_force((3, 1, 2), (F(1, 3),) * 3, range(0, 5)) == (2, 2, 2)


def test_contact_set_of_tent_is_the_endpoints():
    r = project_monotone(StepFunction(HALF, (1, -1)))
    assert r.contact_set == ((0, 0), (1, 1))
    assert r.routes_agree()


def test_pava_eager_pooling_of_ties():
    one = F(1)
    assert pava([one, one, 0 * one], [one] * 3) == [F(2, 3)] * 3
    assert pava([2 * one, one, one, 2 * one], [one] * 4) == [F(4, 3)] * 3 + [2]


@given(step_functions())
def test_projection_is_monotone_and_routes_agree_exactly(f):
    r = project_monotone(f)
    vals = r.projection.values
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    assert r.routes_agree(0)


@given(step_functions(exact=False))
def test_projection_monotone_in_float_mode(f):
    r = project_monotone(f)
    vals = r.projection.values
    assert all(b - a >= -1e-12 for a, b in zip(vals, vals[1:]))
    assert r.routes_agree(1e-12)


@given(step_functions())
def test_idempotence(f):
    p = project_monotone(f).projection
    assert project_monotone(p).projection == p


@given(step_functions(exact=False), step_functions(exact=False))
def test_contraction(f, g):
    pf, pg = project_monotone(f).projection, project_monotone(g).projection
    assert l2_norm(pf - pg) <= l2_norm(f - g) + 1e-12


@given(step_functions(), st.fractions(min_value=0, max_value=10, max_denominator=16))
def test_positive_homogeneity(f, lam):
    assert project_monotone(f * lam).projection.equals(project_monotone(f).projection * lam)


@given(step_functions())
def test_mean_is_preserved(f):
    # constants lie in the cone in both directions, so the residual has mean zero
    assert project_monotone(f).projection.integral() == f.integral()


# --- cone_certificates ------------------------------------------------------


def test_certificates_for_monotone_input_vanish():
    f = StepFunction(HALF, (F(-1), F(1)))
    rep = cone_certificates(f, project_monotone(f))
    assert rep.ok and rep.max_pairing == 0 and rep.proj_pairing == 0


def test_certificate_pairings_for_tent():
    f = StepFunction(HALF, (F(1), F(-1)))
    r = project_monotone(f)
    rep = cone_certificates(f, r, n_random=0)
    assert rep.ok
    assert rep.proj_pairing == 0
    # <f, -1_[0, 1/2]> = -1/2
    assert rep.max_pairing == 0
    indicator = StepFunction(HALF, (F(-1), F(0)))
    assert l2_inner(f - r.projection, indicator) == F(-1, 2)


def test_certificates_flag_a_wrong_projection():
    f = StepFunction(HALF, (F(1), F(-1)))
    r = project_monotone(f)
    bogus = type(r)(StepFunction(HALF, (F(-1), F(1))), r.envelope, r.contact_set)
    rep = cone_certificates(f, bogus)
    assert not rep.ok


@given(step_functions())
def test_certificates_hold_for_random_inputs(f):
    assert cone_certificates(f, project_monotone(f), n_random=8).ok


# --- is_confinement_consistent ----------------------------------------------


def test_confinement_of_converging_pair():
    c = is_confinement_consistent(StepFunction(HALF, (1, -1)))
    assert c.ok and c.projection_zero and c.witness is None


def test_confinement_fails_for_diverging_pair():
    c = is_confinement_consistent(StepFunction(HALF, (F(-1), F(1))))
    assert not c.ok and not c.projection_zero
    assert c.witness == F(1, 2)


def test_confinement_fails_for_net_drift():
    c = is_confinement_consistent(StepFunction.constant(F(1)))
    assert not c.ok and not c.projection_zero


@given(step_functions())
def test_confinement_criteria_agree(f):
    c = is_confinement_consistent(f)
    assert c.ok == c.projection_zero


def test_float_confinement_tolerance():
    c = is_confinement_consistent(StepFunction((0.0, 0.5, 1.0), (0.1, -0.1 + 1e-15)))
    assert c.ok
    assert math.isclose(antiderivative(StepFunction((0.0, 0.5, 1.0), (0.1, -0.1))).ys[1], 0.05)
