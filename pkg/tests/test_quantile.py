import math
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import dyadic_measures, step_functions
from stickyflow.quantile import (
    INF,
    Atom,
    DiscreteMeasure,
    Domain,
    PiecewiseLinear,
    StepFunction,
    antiderivative,
    cdf_of,
    l2_inner,
    l2_norm,
    pushforward,
    quantile_of,
    wasserstein2,
    wasserstein2_squared,
)

HALF_PAIR = DiscreteMeasure((Atom(F(1, 2), F(1, 4)), Atom(F(1, 2), F(3, 4))))


# --- construction -----------------------------------------------------------


def test_atom_rejects_nonpositive_mass():
    with pytest.raises(ValueError):
        Atom(0, 1)
    with pytest.raises(ValueError):
        Atom(-0.5, 1)


def test_measure_requires_sorted_distinct_positions():
    with pytest.raises(ValueError):
        DiscreteMeasure((Atom(F(1, 2), 1), Atom(F(1, 2), 0)))
    with pytest.raises(ValueError):
        DiscreteMeasure((Atom(F(1, 2), 0), Atom(F(1, 2), 0)))


def test_measure_mass_normalisation():
    with pytest.raises(ValueError):
        DiscreteMeasure((Atom(F(1, 3), 0), Atom(F(1, 3), 1)))
    # binary64 sums within 1e-12 are accepted
    DiscreteMeasure((Atom(0.1, 0.0), Atom(0.2, 1.0), Atom(0.7, 2.0)))
    with pytest.raises(ValueError):
        DiscreteMeasure((Atom(0.5, 0.0), Atom(0.5 + 1e-9, 1.0)))


def test_from_atoms_sorts_and_merges():
    mu = DiscreteMeasure.from_atoms([(F(1, 4), 1, 2), (F(1, 2), 0, 1), (F(1, 4), 1, 0)])
    assert mu.positions == (0, 1)
    assert mu.masses == (F(1, 2), F(1, 2))
    assert mu.velocities == (1, 1)


def test_from_atoms_merges_float_neighbours_within_tolerance():
    mu = DiscreteMeasure.from_atoms([(0.5, 0.3, 1.0), (0.5, 0.3 + 1e-13, -1.0)])
    assert len(mu) == 1
    assert mu.velocities[0] == pytest.approx(0.0)


def test_measure_moments():
    mu = DiscreteMeasure((Atom(F(1, 2), F(1, 4), 1), Atom(F(1, 2), F(3, 4), -1)))
    assert mu.mean() == F(1, 2)
    assert mu.momentum() == 0
    assert mu.kinetic_energy() == 1
    assert mu.exact


# --- quantile_of --------------------------------------------------------------


def test_quantile_of_dirac():
    N = quantile_of(DiscreteMeasure.dirac(F(1, 2)))
    assert N.breakpoints == (0, 1)
    assert N.values == (F(1, 2),)


def test_quantile_of_pair():
    N = quantile_of(HALF_PAIR)
    assert N.breakpoints == (0, F(1, 2), 1)
    assert N.values == (F(1, 4), F(3, 4))


def test_quantile_of_truncated_geometric_instance():
    mu = DiscreteMeasure((Atom(F(1, 2), F(1, 2)), Atom(F(1, 4), F(3, 4)), Atom(F(1, 4), F(7, 8))))
    N = quantile_of(mu)
    assert N.breakpoints == (0, F(1, 2), F(3, 4), 1)
    assert N.values == (F(1, 2), F(3, 4), F(7, 8))


@given(dyadic_measures())
def test_quantile_round_trip(mu):
    back = quantile_of(mu).to_measure()
    assert back.masses == mu.masses
    assert back.positions == mu.positions


@given(dyadic_measures(exact=False))
def test_quantile_breakpoints_end_exactly_at_one_in_float(mu):
    assert quantile_of(mu).breakpoints[-1] == 1.0


# --- cdf_of -------------------------------------------------------------------


def test_cdf_of_dirac():
    M = cdf_of(DiscreteMeasure.dirac(F(0)))
    assert M(F(-1, 1000)) == 0
    assert M(0) == 1
    assert M(5) == 1


def test_cdf_of_pair_between_and_at_atoms():
    M = cdf_of(HALF_PAIR)
    assert M(F(1, 2)) == F(1, 2)
    assert M(F(3, 4)) == 1
    assert M(F(1, 4)) == F(1, 2)
    assert M(0) == 0


@given(dyadic_measures(), st.integers(-600, 600))
def test_cdf_and_quantile_are_generalised_inverses(mu, k):
    N, M = quantile_of(mu), cdf_of(mu)
    for a in mu.atoms:
        x = M(a.position)
        # N(M(y)) >= y at atoms (right-continuous quantile, left limit at x=1)
        assert (N(x) if x < 1 else N.values[-1]) >= a.position
    x = F(k + 601, 1203)
    assert M(N(x)) >= x


# --- pushforward --------------------------------------------------------------


def test_pushforward_identity():
    assert pushforward(HALF_PAIR, lambda y: y) == HALF_PAIR


def test_pushforward_collapse():
    nu = pushforward(HALF_PAIR, lambda y: F(1, 2))
    assert nu.masses == (1,) and nu.positions == (F(1, 2),)


def test_pushforward_reflection_resorts():
    third = F(1, 3)
    mu = DiscreteMeasure((Atom(third, 0), Atom(third, F(1, 2)), Atom(third, 1)))
    nu = pushforward(mu, lambda y: -y)
    assert nu.positions == (-1, F(-1, 2), 0)
    assert nu.masses == (third, third, third)


def test_pushforward_sequence_length_checked():
    with pytest.raises(ValueError):
        pushforward(HALF_PAIR, [0])


@given(dyadic_measures(), st.integers(1, 8))
def test_pushforward_preserves_mass(mu, q):
    nu = pushforward(mu, lambda y: (y * q).__floor__() / q)
    assert sum(nu.masses) == 1


# --- StepFunction algebra ---------------------------------------------------


def test_step_function_validation():
    with pytest.raises(ValueError):
        StepFunction((0, 1), ())
    with pytest.raises(ValueError):
        StepFunction((0, F(1, 2)), (1,))
    with pytest.raises(ValueError):
        StepFunction((0, F(1, 2), F(1, 2), 1), (1, 2, 3))


def test_step_function_right_continuity():
    f = StepFunction((0, F(1, 2), 1), (1, 2))
    assert f(0) == 1
    assert f(F(1, 2)) == 2
    assert f(F(1, 2) - F(1, 10**6)) == 1


def test_step_function_arithmetic_on_common_partition():
    f = StepFunction((0, F(1, 2), 1), (1, 3))
    g = StepFunction((0, F(1, 4), 1), (2, 0))
    h = f + g
    assert h.breakpoints == (0, F(1, 4), F(1, 2), 1)
    assert h.values == (3, 1, 3)
    assert (f - f).simplify().values == (0,)
    assert (2 * f).values == (2, 6)
    assert (f / 2).values == (F(1, 2), F(3, 2))
    assert (f * g).values == (2, 0, 0)
    assert f.integral() == 2


def test_step_function_equality_after_refinement():
    f = StepFunction((0, F(1, 2), 1), (1, 1))
    assert f.equals(StepFunction.constant(F(1)))
    assert f.simplify() == StepFunction.constant(F(1))


# --- l2_inner ---------------------------------------------------------------


def test_l2_inner_constants():
    c = StepFunction.constant(F(3, 2))
    assert l2_inner(c, c) == F(9, 4)


def test_l2_inner_cancellation():
    f = StepFunction((0, F(1, 2), 1), (1, -1))
    assert l2_inner(f, StepFunction.constant(F(1))) == 0


def test_l2_inner_symmetric_pair_value():
    N0 = StepFunction((0, F(1, 2), 1), (F(1, 4), F(3, 4)))
    V0 = StepFunction((0, F(1, 2), 1), (1, -1))
    assert l2_inner(N0, V0) == F(-1, 4)


@given(step_functions(), step_functions(), step_functions(), st.integers(-5, 5))
def test_l2_inner_bilinear_symmetric_positive(f, g, h, a):
    assert l2_inner(f, g) == l2_inner(g, f)
    assert l2_inner(f * a + g, h) == a * l2_inner(f, h) + l2_inner(g, h)
    assert l2_inner(f, f) >= 0


def test_l2_norm():
    assert l2_norm(StepFunction((0, F(1, 2), 1), (3, -3))) == 3.0


# --- Wasserstein --------------------------------------------------------------


def test_wasserstein_diracs():
    assert wasserstein2(DiscreteMeasure.dirac(F(0)), DiscreteMeasure.dirac(F(1))) == 1


def test_wasserstein_self_is_zero():
    assert wasserstein2_squared(HALF_PAIR, HALF_PAIR) == 0


def test_wasserstein_pair_to_centre():
    assert wasserstein2_squared(HALF_PAIR, DiscreteMeasure.dirac(F(1, 2))) == F(1, 16)
    assert wasserstein2(HALF_PAIR, DiscreteMeasure.dirac(F(1, 2))) == 0.25


@given(dyadic_measures(exact=False), dyadic_measures(exact=False), dyadic_measures(exact=False))
def test_wasserstein_triangle_inequality(a, b, c):
    assert wasserstein2(a, c) <= wasserstein2(a, b) + wasserstein2(b, c) + 1e-12
    assert wasserstein2(a, b) == pytest.approx(wasserstein2(b, a), abs=1e-15)


@given(dyadic_measures())
def test_wasserstein_zero_iff_equal(mu):
    shifted = pushforward(mu, lambda y: y + F(1, 1024))
    assert wasserstein2_squared(mu, mu) == 0
    assert wasserstein2_squared(mu, shifted) == F(1, 1024) ** 2


# --- antiderivative and PiecewiseLinear --------------------------------------


def test_antiderivative_examples():
    assert antiderivative(StepFunction.constant(F(1))).knots == ((0, 0), (1, 1))
    tent = antiderivative(StepFunction((0, F(1, 2), 1), (1, -1)))
    assert tent.knots == ((0, 0), (F(1, 2), F(1, 2)), (1, 0))
    valley = antiderivative(StepFunction((0, F(1, 2), 1), (-1, 1)))
    assert valley.knots == ((0, 0), (F(1, 2), F(-1, 2)), (1, 0))


@given(step_functions())
def test_antiderivative_slopes_are_cell_values(f):
    F_ = antiderivative(f)
    assert F_.ys[0] == 0
    assert F_.slopes() == f.values
    assert F_.ys[-1] == f.integral()


def test_piecewise_linear_evaluation_and_convexity():
    g = PiecewiseLinear((0, F(1, 2), 1), (0, F(-1, 2), 0))
    assert g(F(1, 4)) == F(-1, 4)
    assert g.is_convex()
    assert g.argmin() == (F(1, 2), F(-1, 2))
    assert not PiecewiseLinear((0, F(1, 2), 1), (0, F(1, 2), 0)).is_convex()
    with pytest.raises(ValueError):
        g(2)


# --- Domain -------------------------------------------------------------------


def test_domain_kinds_and_membership():
    assert Domain.line().kind == "line"
    box = Domain.interval(0, 1)
    assert box.kind == "interval" and box.contains(0) and box.contains(1) and not box.contains(1.5)
    assert box.boundary_points() == (0, 1)
    assert Domain.left_ray(0).kind == "left_ray"
    assert Domain.right_ray(0).boundary_points() == (0,)
    u = Domain.union(Domain.interval(2, 3), Domain.interval(0, 1))
    assert u.kind == "union"
    assert u.component_of(2.5) == 1 and u.component_of(1.5) is None
    assert Domain.line().boundary_points() == ()
    assert Domain.line().components == ((-INF, INF),)


def test_domain_rejects_overlaps_and_degenerate_components():
    with pytest.raises(ValueError):
        Domain.interval(1, 1)
    with pytest.raises(ValueError):
        Domain(((0, 1), (1, 2)))
    with pytest.raises(ValueError):
        Domain(())


def test_nan_free_norm_for_float_inputs():
    f = StepFunction((0.0, 0.5, 1.0), (0.1, 0.3))
    assert math.isclose(l2_norm(f) ** 2, 0.5 * (0.01 + 0.09))
