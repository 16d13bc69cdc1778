"""Countable "bombardment" configurations and their decay to equilibrium.

A heavy particle starts at ``x_0`` moving right with speed ``a`` and is hit
in turn by lighter particles starting at ``x_k`` and moving left with speed
``b_k``.  The contact times and positions follow a closed recursion, and
with the admissible speed ``a`` the merged particle comes to rest at the
centre of mass of the whole configuration.

Everything runs in exact rational arithmetic: for the reference family the
velocities shrink like ``4^-k`` and binary64 loses them well before
``k = 60``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .asymptotics import decay_fit
from .engine import simulate
from .quantile import Atom, DiscreteMeasure

__all__ = [
    "BombardmentSpec",
    "BombardmentRun",
    "geometric_family",
    "reference_family",
    "explicit_family",
    "admissible_speed",
    "run_recursion",
    "limit_point",
    "energy_gap_series",
    "truncated_system",
    "engine_cross_validation",
    "exponent_sweep",
]


@dataclass(frozen=True)
class BombardmentSpec:
    """Positions ``x_k``, masses ``m_k`` (k >= 0) and incoming speeds ``b_k`` (k >= 1).

    ``momentum_tail(k)`` should return ``sum_{i > k} m_i b_i`` exactly when a
    closed form is known; it makes the admissible speed exact.
    """

    position: Callable[[int], Fraction]
    mass: Callable[[int], Fraction]
    speed: Callable[[int], Fraction]
    momentum_tail: Callable[[int], Fraction] | None = None
    length: int | None = None
    name: str = "custom"

    def cumulative(self, k: int) -> Fraction:
        return sum((self.mass(i) for i in range(k + 1)), Fraction(0))

    def validate(self, K: int) -> None:
        """Check the monotonicity requirements on the first ``K`` terms."""
        K = min(K, self.length - 1) if self.length else K
        xs = [self.position(k) for k in range(K + 1)]
        ms = [self.mass(k) for k in range(K + 1)]
        bs = [self.speed(k) for k in range(1, K + 1)]
        if any(not a < b for a, b in zip(xs, xs[1:])) or not xs[-1] < 1 or not xs[0] > 0:
            raise ValueError("positions must increase strictly inside (0, 1)")
        if any(m <= 0 for m in ms) or any(b > a for a, b in zip(ms, ms[1:])):
            raise ValueError("masses must be positive and nonincreasing")
        if sum(ms) > 1:
            raise ValueError("masses exceed total probability 1")
        if any(b < 0 for b in bs) or any(b > a for a, b in zip(bs, bs[1:])):
            raise ValueError("incoming speeds must be nonnegative and nonincreasing")


def geometric_family(n: int) -> BombardmentSpec:
    """``x_k = 1 - 2^-(k+1)``, ``m_k = 2^-(k+1)``, ``b_k = n^-k``."""
    if n <= 1:
        raise ValueError("need n > 1 for speeds decreasing to zero")
    r = Fraction(1, 2 * n)

    def tail(k):
        # sum_{i>k} 2^-(i+1) n^-i = (1/2) r^(k+1) / (1 - r)
        return Fraction(1, 2) * r ** (k + 1) / (1 - r)

    return BombardmentSpec(
        position=lambda k: 1 - Fraction(1, 2 ** (k + 1)),
        mass=lambda k: Fraction(1, 2 ** (k + 1)),
        speed=lambda k: Fraction(1, n ** k),
        momentum_tail=tail,
        name=f"geometric(n={n})",
    )


def reference_family() -> BombardmentSpec:
    return geometric_family(2)


def explicit_family(positions: Sequence, masses: Sequence, speeds: Sequence,
                    name: str = "explicit") -> BombardmentSpec:
    """Finite configuration from lists; ``speeds[0]`` is ignored (the heavy particle)."""
    xs = [Fraction(x) for x in positions]
    ms = [Fraction(m) for m in masses]
    bs = [Fraction(b) for b in speeds]
    if not len(xs) == len(ms) == len(bs):
        raise ValueError("positions, masses and speeds must have equal length")

    def tail(k):
        return sum((ms[i] * bs[i] for i in range(k + 1, len(ms))), Fraction(0))

    return BombardmentSpec(
        position=lambda k: xs[k],
        mass=lambda k: ms[k],
        speed=lambda k: bs[k],
        momentum_tail=tail,
        length=len(xs),
        name=name,
    )


def admissible_speed(spec: BombardmentSpec, terms: int = 400) -> Fraction:
    """Initial speed ``a = (1/m_0) sum_{i>=1} m_i b_i`` that brings the flow to rest.

    Exact when the spec provides ``momentum_tail``.  Otherwise the series is
    summed to ``terms`` terms after a ratio test; a series whose terms stop
    shrinking geometrically is rejected as divergent.
    """
    m0 = spec.mass(0)
    if spec.momentum_tail is not None:
        return spec.momentum_tail(0) / m0
    s = [spec.mass(i) * spec.speed(i) for i in range(1, terms + 1)]
    tail = s[-10:]
    if any(b == 0 for b in tail[:-1]) and any(tail):
        raise ValueError("series terms are not eventually decreasing")
    ratios = [b / a for a, b in zip(tail, tail[1:]) if a]
    if ratios and max(ratios) >= 1:
        raise ValueError("momentum series does not converge geometrically")
    return sum(s, Fraction(0)) / m0


@dataclass(frozen=True)
class BombardmentRun:
    a: Fraction
    v: tuple
    t: tuple
    y: tuple
    momentum_residuals: tuple

    @property
    def K(self) -> int:
        return len(self.t) - 1


def run_recursion(spec: BombardmentSpec, a: Fraction | None = None, K: int = 60) -> BombardmentRun:
    """Contact times ``t_k``, positions ``y_k`` and speeds ``v_k`` up to index K.

    ``momentum_residuals[k]`` is ``M_k v_k - (a m_0 - sum_{i<=k} m_i b_i)``,
    identically zero in exact arithmetic.
    """
    if spec.length is not None:
        K = min(K, spec.length - 1)
    a = admissible_speed(spec) if a is None else Fraction(a)
    if not a > 0:
        raise ValueError("initial speed must be positive")
    x0 = spec.position(0)
    m0 = spec.mass(0)
    v, t, y = [a], [Fraction(0)], [x0]
    M_prev = m0
    hit = Fraction(0)
    resid = [Fraction(0)]
    for k in range(1, K + 1):
        xk, mk, bk = spec.position(k), spec.mass(k), spec.speed(k)
        vp, tp, yp = v[-1], t[-1], y[-1]
        if not vp > 0:
            raise ValueError(f"speed v_{k - 1} = {vp} is not positive: inadmissible configuration")
        if vp + bk == 0:
            raise ValueError(f"particle {k} never meets the heavy particle")
        tk = (xk - yp + tp * vp) / (vp + bk)
        yk = (xk * vp + bk * yp - tp * vp * bk) / (vp + bk)
        Mk = M_prev + mk
        vk = (M_prev * vp - mk * bk) / Mk
        hit += mk * bk
        resid.append(Mk * vk - (a * m0 - hit))
        v.append(vk)
        t.append(tk)
        y.append(yk)
        M_prev = Mk
    return BombardmentRun(a, tuple(v), tuple(t), tuple(y), tuple(resid))


def limit_point(spec: BombardmentSpec, L: int) -> tuple:
    """Rest position as the centre of mass, with a certified error bound.

    With admissible speed the total momentum is zero, so the final position
    is ``sum m_k x_k``.  Terms past ``L`` lie in ``[x_{L+1}, 1] * (1 - M_L)``;
    returns ``(estimate, half_width)``.
    """
    if spec.length is not None:
        L = spec.length - 1
    head = sum((spec.mass(k) * spec.position(k) for k in range(L + 1)), Fraction(0))
    rest = 1 - spec.cumulative(L)
    if spec.length is not None:
        return head, Fraction(0)
    lo = head + spec.position(L + 1) * rest
    hi = head + rest
    return (lo + hi) / 2, (hi - lo) / 2


@dataclass(frozen=True)
class GapSeries:
    t: tuple
    e: tuple
    bound: tuple
    y_bar: Fraction
    y_bar_error: Fraction


def energy_gap_series(run: BombardmentRun, spec: BombardmentSpec, L: int | None = None) -> GapSeries:
    """``e(t_k) = W2^2(rho(t_k), delta_ybar)`` for ``k = 0..K`` with error bounds.

    Every particle sits in [0, 1] so each squared distance is at most 1; the
    series is cut at ``L`` and the tail is bounded by ``1 - M_L``.  The
    uncertainty ``d`` in the rest position adds at most ``2d + d^2``.
    """
    K = run.K
    L = K + 120 if L is None else L
    if spec.length is not None:
        L = spec.length - 1
    y_bar, d = limit_point(spec, L)
    xs = [spec.position(j) for j in range(L + 1)]
    ms = [spec.mass(j) for j in range(L + 1)]
    bs = [Fraction(0)] + [spec.speed(j) for j in range(1, L + 1)]
    tail = (1 - spec.cumulative(L)) if spec.length is None else Fraction(0)
    Ms = []
    acc = Fraction(0)
    for m in ms:
        acc += m
        Ms.append(acc)
    es, bounds = [], []
    for k in range(K + 1):
        tk = run.t[k]
        e = Ms[k] * (y_bar - run.y[k]) ** 2
        e += sum((ms[j] * (y_bar - xs[j] + tk * bs[j]) ** 2 for j in range(k + 1, L + 1)),
                 Fraction(0))
        es.append(e)
        bounds.append(tail + 2 * d + d * d)
    return GapSeries(run.t, tuple(es), tuple(bounds), y_bar, d)


def truncated_system(spec: BombardmentSpec, K: int, a: Fraction | None = None,
                     renormalize: str = "lump") -> DiscreteMeasure:
    """Finite particle system of the first ``K + 1`` particles.

    ``renormalize="lump"`` gives the missing tail mass to the last particle;
    ``"scale"`` rescales all masses uniformly.
    """
    a = admissible_speed(spec) if a is None else Fraction(a)
    ms = [spec.mass(k) for k in range(K + 1)]
    total = sum(ms, Fraction(0))
    if renormalize == "lump":
        ms[-1] += 1 - total
    elif renormalize == "scale":
        ms = [m / total for m in ms]
    else:
        raise ValueError(f"unknown renormalisation {renormalize!r}")
    atoms = [Atom(ms[0], spec.position(0), a)]
    atoms += [Atom(ms[k], spec.position(k), -spec.speed(k)) for k in range(1, K + 1)]
    return DiscreteMeasure.from_atoms(atoms)


@dataclass(frozen=True)
class CrossValidation:
    K: int
    matched_through: int
    first_mismatch: int | None
    engine_events: tuple


def engine_cross_validation(spec: BombardmentSpec, K: int, a: Fraction | None = None,
                            renormalize: str = "lump", tol: float = 0.0) -> CrossValidation:
    """Replay the truncated system in the event engine and compare with the recursion.

    Each engine event involving the heavy particle must reproduce
    ``(t_k, y_k, v_k)``.  ``matched_through`` is the last index that agrees.
    """
    if K > 24:
        raise ValueError("engine cross-validation is limited to K <= 24")
    a = admissible_speed(spec) if a is None else Fraction(a)
    log = simulate(truncated_system(spec, K, a, renormalize))
    heavy = [ev for ev in log.events if 0 in ev.resulting.members]
    engine = tuple((ev.time, ev.position, ev.resulting.velocity) for ev in heavy)
    if a == 0 or not engine:
        return CrossValidation(K, 0, None if not engine else 1, engine)
    run = run_recursion(spec, a, K)
    matched, first = 0, None
    for k in range(1, K + 1):
        if k - 1 >= len(engine):
            first = k
            break
        got = engine[k - 1]
        want = (run.t[k], run.y[k], run.v[k])
        if all(abs(g - w) <= tol for g, w in zip(got, want)):
            matched = k
        else:
            first = k
            break
    return CrossValidation(K, matched, first, engine)


def exponent_sweep(ns: Sequence[int] = (2, 3, 4, 6, 8, 16), K: int = 60,
                   k_min: int = 20) -> list:
    """Fitted decay exponent of ``e(t_k)`` over ``k in [k_min, K]`` per family."""
    rows = []
    for n in ns:
        spec = geometric_family(n)
        run = run_recursion(spec, K=K)
        gaps = energy_gap_series(run, spec)
        fit = decay_fit(gaps.t[k_min:], gaps.e[k_min:])
        rows.append({"n": n, "gamma": fit.gamma, "residual": fit.residual,
                     "max_bound": float(max(gaps.bound))})
    return rows
