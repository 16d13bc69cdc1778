from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from stickyflow.quantile import Atom, DiscreteMeasure, StepFunction

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

F = Fraction


@st.composite
def dyadic_measures(draw, min_atoms=1, max_atoms=8, exact=True, vmax=2):
    """Measures with dyadic masses, positions and velocities."""
    n = draw(st.integers(min_atoms, max_atoms))
    cuts = draw(st.lists(st.integers(1, 63), min_size=n - 1, max_size=n - 1, unique=True))
    cuts = sorted(cuts)
    masses = [F(b - a, 64) for a, b in zip([0] + cuts, cuts + [64])]
    xs = sorted(draw(st.lists(st.integers(-512, 512), min_size=n, max_size=n, unique=True)))
    vs = draw(st.lists(st.integers(-256 * vmax, 256 * vmax), min_size=n, max_size=n))
    atoms = [Atom(m, F(x, 256), F(v, 256)) for m, x, v in zip(masses, xs, vs)]
    if not exact:
        atoms = [Atom(float(a.mass), float(a.position), float(a.velocity)) for a in atoms]
    return DiscreteMeasure(tuple(atoms))


@st.composite
def step_functions(draw, max_cells=8, exact=True):
    n = draw(st.integers(1, max_cells))
    cuts = sorted(draw(st.lists(st.integers(1, 127), min_size=n - 1, max_size=n - 1, unique=True)))
    bps = [F(0)] + [F(c, 128) for c in cuts] + [F(1)]
    vals = draw(st.lists(st.integers(-64, 64), min_size=n, max_size=n))
    vals = [F(v, 8) for v in vals]
    if not exact:
        return StepFunction(tuple(float(b) for b in bps), tuple(float(v) for v in vals))
    return StepFunction(tuple(bps), tuple(vals))


def pair(m1, x1, v1, m2, x2, v2):
    return DiscreteMeasure((Atom(F(m1), F(x1), F(v1)), Atom(F(m2), F(x2), F(v2))))


@pytest.fixture
def symmetric_pair():
    return pair("1/2", "1/4", 1, "1/2", "3/4", -1)


@pytest.fixture
def outward_pair():
    return pair("1/2", "1/4", -1, "1/2", "3/4", 1)
