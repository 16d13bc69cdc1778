"""Long-time behaviour of discrete sticky flows: limits, energy gap, identities.

For finitely many atoms every quantity here is piecewise polynomial in time
between events, so time integrals are finite sums over inter-event
intervals and derivatives are taken exactly from three-point samples of a
quadratic.  Nothing is integrated numerically.

The identity keys (``eq3_7``, ``eq3_12``, ...) are the tags used in the
diagnostics JSON.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .engine import EventLog, clusters_at, quantile_at, state_at
from .lagrangian import flow_identity_check, oleinik_check
from .quantile import (
    DiscreteMeasure,
    StepFunction,
    antiderivative,
    is_exact,
    l2_inner,
)

__all__ = [
    "DivergentFlowError",
    "AsymptoticProfile",
    "DiagnosticsReport",
    "DecayFit",
    "limit_profile",
    "energy_gap",
    "theta",
    "metric_derivative",
    "kinetic_energy",
    "intervals",
    "sample_times",
    "identity_suite",
    "identity_3_11_probe",
    "inequality_suite",
    "shape_checks",
    "limit_uniqueness_check",
    "decay_fit",
    "diagnose",
]

TOL = 1e-10


class DivergentFlowError(ValueError):
    """The flow does not settle: some cluster keeps moving forever."""


@dataclass(frozen=True)
class AsymptoticProfile:
    N_inf: StepFunction
    equilibrium_time: object
    limit_measure: DiscreteMeasure


@dataclass
class DiagnosticsReport:
    residuals: dict = field(default_factory=dict)
    margins: dict = field(default_factory=dict)
    exponents: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)

    def failures(self, tol: float = TOL) -> list:
        bad = [k for k, v in self.residuals.items() if not abs(v) <= tol]
        bad += [k for k, v in self.margins.items() if not v <= tol]
        return bad


def limit_profile(log: EventLog) -> AsymptoticProfile:
    """Equilibrium quantile map of a completed run.

    Raises :class:`DivergentFlowError` when clusters keep moving after the
    last event (for instance a free flow whose velocity profile has a
    nonzero monotone projection).
    """
    if log.equilibrium_time is None:
        raise ValueError("run stopped at its horizon before settling")
    if not log.at_rest:
        raise DivergentFlowError("flow never comes to rest; no asymptotic profile")
    t = log.equilibrium_time
    return AsymptoticProfile(quantile_at(log, t), t, state_at(log, t))


def initial_velocity_step(log: EventLog) -> StepFunction:
    """``V0`` on the exact initial mass cells."""
    return StepFunction(log.prefix, log.initial.velocities)


def energy_gap(log: EventLog, profile: AsymptoticProfile, t):
    """Squared Wasserstein distance from the state at ``t`` to the limit."""
    d = quantile_at(log, t) - profile.N_inf
    return l2_inner(d, d)


def theta(log: EventLog, t):
    """``<V0, N(t)>``."""
    return l2_inner(initial_velocity_step(log), quantile_at(log, t))


def kinetic_energy(log: EventLog, t):
    """``sum m v^2`` over live clusters (right limit at event times)."""
    return sum(c.mass * c.velocity * c.velocity for c in clusters_at(log, t))


def metric_derivative(log: EventLog, t) -> float:
    """Wasserstein speed of the curve: the L2(rho_t) norm of the velocity."""
    return math.sqrt(kinetic_energy(log, t))


def intervals(log: EventLog) -> list:
    """``(start, end, kinetic_energy)`` for every inter-event interval.

    The last interval is open-ended (``end = inf``).
    """
    snaps = log.snapshots
    out = []
    for j, (t0, clusters) in enumerate(snaps):
        t1 = snaps[j + 1][0] if j + 1 < len(snaps) else math.inf
        if t1 == t0:
            continue
        out.append((t0, t1, sum(c.mass * c.velocity * c.velocity for c in clusters)))
    return out


def sample_times(log: EventLog, n: int = 16, stretch=Fraction(5, 4)) -> list:
    """``n`` evenly spaced times covering all events and some rest."""
    end = log.equilibrium_time if log.equilibrium_time is not None else log.horizon
    if end in (None, math.inf) or end == 0:
        end = max(log.event_times, default=0) or 1
    if is_exact(end):
        return [end * stretch * Fraction(k, n - 1) for k in range(n)]
    return [float(end) * float(stretch) * k / (n - 1) for k in range(n)]


def _tail_integrals(ivals, t):
    """``2 int_t^inf (s - t) K ds`` and ``int_t^inf sqrt(K) ds`` (K piecewise const)."""
    second = 0
    first = 0.0
    for a, b, K in ivals:
        if b <= t:
            continue
        a = max(a, t)
        if K == 0:
            continue
        if b == math.inf:
            return math.inf, math.inf
        second += K * ((b - t) ** 2 - (a - t) ** 2)
        first += math.sqrt(K) * float(b - a)
    return second, first


def _quadratic_on(log, profile, a, b):
    """Exact ``e(a + tau) = A + B tau + C tau^2`` from three samples."""
    h = (b - a) if b != math.inf else (Fraction(1) if is_exact(a) else 1.0)
    half = h / 2
    e0 = energy_gap(log, profile, a)
    e1 = energy_gap(log, profile, a + half)
    e2 = energy_gap(log, profile, a + h)
    C = 2 * (e0 - 2 * e1 + e2) / (h * h)
    B = (-3 * e0 + 4 * e1 - e2) / h
    return e0, B, C, h


def identity_suite(log: EventLog, profile: AsymptoticProfile, times=None, pairs=None) -> dict:
    """Absolute residuals of the conservation and projection identities.

    Meant for free-line flows that settle inside a bounded set.  Every entry
    is a maximum over the sampled times (or pairs / intervals).
    """
    times = sample_times(log) if times is None else times
    N0 = quantile_at(log, 0)
    V0 = initial_velocity_step(log)
    N_inf = profile.N_inf
    ivals = intervals(log)
    res: dict = {}

    res["eq3_5"] = abs(V0.integral())
    res["eq3_6"] = max(abs(quantile_at(log, t).integral() - N0.integral()) for t in times)
    res["eq3_7"] = max(
        abs(l2_inner(N0, Nt) + t * l2_inner(V0, Nt) - l2_inner(Nt, Nt))
        for t in times for Nt in [quantile_at(log, t)]
    )
    res["eq3_8"] = abs(l2_inner(N0, N_inf) - l2_inner(N_inf, N_inf))
    res["gap_split"] = max(
        abs(l2_inner(quantile_at(log, t), N_inf) - l2_inner(N_inf, N_inf)) for t in times
    )

    r9, r10 = [], []
    for a, b, K in ivals:
        e0, B, C, h = _quadratic_on(log, profile, a, b)
        mid = a + h / 2
        r9.append(abs((B + C * h) - 2 * theta(log, mid)))
        r10.append(abs(2 * C - 2 * K))
    res["eq3_9"] = max(r9, default=0)
    res["eq3_10"] = max(r10, default=0)

    e_zero = energy_gap(log, profile, 0)
    res["eq3_12"] = abs(sum(K * (b * b - a * a) for a, b, K in ivals if K != 0) - e_zero)
    res["eq3_13"] = max(abs(_tail_integrals(ivals, t)[0] - energy_gap(log, profile, t))
                        for t in times)

    if pairs is None:
        pairs = [(s, t) for i, t in enumerate(times) for s in times[: i + 1]]
        step = max(1, len(pairs) // 16)
        pairs = pairs[::step][:16]
    res["eq5_2"] = max(flow_identity_check(log, s, t) for s, t in pairs)

    # interior limit clusters carry zero mean initial velocity
    atoms = log.initial.atoms
    ce = [abs(sum(atoms[i].mass * atoms[i].velocity for i in c.members))
          for c in clusters_at(log, profile.equilibrium_time) if not c.wall]
    res["cond_expectation"] = max(ce, default=0)
    return {k: float(v) for k, v in res.items()}


@dataclass(frozen=True)
class NormalizationProbe:
    integral: object
    inner_product: object
    residual_doubled: float
    residual_plain: float

    @property
    def holds(self) -> str | None:
        """Which normalisation holds to 1e-10: 'doubled', 'plain', 'both' or None."""
        a = abs(self.residual_doubled) <= TOL
        b = abs(self.residual_plain) <= TOL
        return {(True, True): "both", (True, False): "doubled",
                (False, True): "plain", (False, False): None}[(a, b)]


def identity_3_11_probe(log: EventLog) -> NormalizationProbe:
    """Compare ``int |rho'|^2`` with ``-<V0, N0>`` in both candidate normalisations.

    ``doubled``: ``2 int |rho'|^2 = -<V0, N0>``; ``plain``: ``int |rho'|^2 =
    -<V0, N0>``.  Residuals are signed (left minus right).
    """
    ivals = intervals(log)
    if any(b == math.inf and K != 0 for a, b, K in ivals):
        raise DivergentFlowError("kinetic energy does not vanish; integral diverges")
    integral = sum(K * (b - a) for a, b, K in ivals if K != 0)
    ip = l2_inner(initial_velocity_step(log), quantile_at(log, 0))
    return NormalizationProbe(integral, ip, float(2 * integral + ip), float(integral + ip))


def _slopes(ts, fs):
    return [(f1 - f0) / (t1 - t0) for t0, t1, f0, f1 in zip(ts, ts[1:], fs, fs[1:])]


def _convexity_defect(xs, fs):
    """Largest drop between consecutive divided-difference slopes."""
    s = _slopes(xs, fs)
    return max((a - b for a, b in zip(s, s[1:])), default=-math.inf)


def _max_increase(seq):
    return max((b - a for a, b in zip(seq, seq[1:])), default=-math.inf)


def check_grid(log: EventLog, n_uniform: int = 16) -> list:
    """Uniform grid plus every event time and points just around it."""
    times = set(sample_times(log, n_uniform))
    evts = sorted(set(log.event_times))
    gaps = [b - a for a, b in zip([0] + evts, evts) if b != a]
    eps = min(gaps) / 4 if gaps else (Fraction(1, 4) if is_exact(*times) else 0.25)
    for t in evts:
        times.update({t, t + eps})
        if t - eps > 0:
            times.add(t - eps)
    return sorted(times)


def shape_checks(log: EventLog, profile: AsymptoticProfile | None = None,
                 t_grid=None, x_grid=None) -> dict:
    """Shape margins of ``P(t, x) = int_0^x N(t, z) dz`` and of ``|rho'|``.

    Each margin is ``measured - allowed`` so nonpositive means satisfied.
    """
    t_grid = check_grid(log) if t_grid is None else sorted(t_grid)
    if x_grid is None:
        x_grid = sorted(set(log.prefix) | {Fraction(k, 16) if log.exact else k / 16
                                           for k in range(17)})
    prims = [antiderivative(quantile_at(log, t)) for t in t_grid]
    P = [[F(x) for x in x_grid] for F in prims]
    margins = {}
    conc = -math.inf
    mono = -math.inf
    for j in range(len(x_grid)):
        col = [row[j] for row in P]
        conc = max(conc, _max_increase(_slopes(t_grid, col)))
        mono = max(mono, max((a - b for a, b in zip(col, col[1:])), default=-math.inf))
    conv = max((_convexity_defect(x_grid, row) for row in P), default=-math.inf)
    margins["P_concave_t"] = float(conc)
    margins["P_convex_x"] = float(conv)
    margins["P_nondecreasing_t"] = float(mono)

    if profile is not None:
        after = [t for t in t_grid if t >= profile.equilibrium_time]
        margins["t_metric_after_equilibrium"] = max(
            (float(t) * metric_derivative(log, t) for t in after), default=0.0)

    ivals = intervals(log)
    lemma = -math.inf
    for t in sample_times(log, 16):
        lhs, rhs = _tail_integrals(ivals, t)
        if lhs == math.inf:
            continue
        lemma = max(lemma, float(lhs) - rhs * rhs)
    margins["omega_inequality"] = lemma
    return margins


def inequality_suite(log: EventLog, profile: AsymptoticProfile, bounds=(0, 1),
                     t_grid=None) -> dict:
    """Margins for Oleinik-type bounds, monotonicity of theta and e, and shapes."""
    t_grid = check_grid(log) if t_grid is None else sorted(t_grid)
    margins = {}
    reports = [oleinik_check(log, t, bounds=bounds) for t in t_grid if t > 0]
    margins["oleinik"] = max(r.margin for r in reports)
    margins["velocity_two_sided"] = max(r.two_sided_margin for r in reports)
    margins["velocity_uniform"] = max(r.uniform_margin for r in reports)
    th = [theta(log, t) for t in t_grid]
    margins["theta_nondecreasing"] = float(max((a - b for a, b in zip(th, th[1:])), default=-math.inf))
    margins["theta_nonpositive"] = float(max(th))
    margins["theta_at_equilibrium"] = abs(float(theta(log, profile.equilibrium_time)))
    e = [energy_gap(log, profile, t) for t in t_grid]
    margins["e_nonincreasing"] = float(_max_increase(e))
    margins["e_convex"] = float(_convexity_defect(t_grid, e))
    margins["e_at_equilibrium"] = float(energy_gap(log, profile, profile.equilibrium_time))
    ke = [kinetic_energy(log, t) for t in t_grid]
    margins["energy_nonincreasing"] = float(_max_increase(ke))
    margins.update(shape_checks(log, profile, t_grid))
    return margins


def limit_uniqueness_check(log: EventLog, profile: AsymptoticProfile, seeds=(1, 2),
                           n: int = 24) -> dict:
    """Follow two independently seeded time sequences to infinity.

    Returns the energy gaps along each sequence and whether the late-time
    quantiles coincide cell by cell with the limit profile.
    """
    out = {}
    T = profile.equilibrium_time or 1
    for seed in seeds:
        rng = random.Random(seed)
        t, ts = 0 * T, []
        for _ in range(n):
            t = t + T * (Fraction(rng.randint(1, 64), 32) if is_exact(T) else rng.uniform(1 / 32, 2))
            ts.append(t)
        gaps = [energy_gap(log, profile, s) for s in ts]
        same = quantile_at(log, ts[-1]).equals(profile.N_inf)
        out[seed] = {"times": ts, "gaps": gaps, "final_gap": gaps[-1], "matches_limit": same}
    return out


@dataclass(frozen=True)
class DecayFit:
    gamma: float
    residual: float
    n_samples: int
    window: tuple


def decay_fit(times, values, window=None) -> DecayFit:
    """Least-squares power law ``values ~ C t^-gamma`` on log-log axes.

    ``window=(t_min, t_max)`` restricts the fit; at least 8 samples must fall
    inside and all of them must be positive.  ``residual`` is the largest
    deviation of the fitted line in log space.
    """
    pts = [(t, v) for t, v in zip(times, values)
           if window is None or window[0] <= t <= window[1]]
    if len(pts) < 8:
        raise ValueError(f"need at least 8 samples in the window, got {len(pts)}")
    if any(not t > 0 or not v > 0 for t, v in pts):
        raise ValueError("decay fit needs positive times and values")
    lt = np.array([math.log(t) for t, _ in pts])
    lv = np.array([math.log(v) for _, v in pts])
    slope, icept = np.polyfit(lt, lv, 1)
    resid = float(np.max(np.abs(lv - (slope * lt + icept))))
    win = window if window is not None else (pts[0][0], pts[-1][0])
    return DecayFit(float(-slope), resid, len(pts), win)


def diagnose(log: EventLog, times=None, bounds=(0, 1)) -> DiagnosticsReport:
    """Full report for a settled flow: identities, inequalities, time series."""
    profile = limit_profile(log)
    report = DiagnosticsReport()
    report.residuals = identity_suite(log, profile, times)
    probe = identity_3_11_probe(log)
    report.notes["eq3_11"] = {
        "doubled_residual": probe.residual_doubled,
        "plain_residual": probe.residual_plain,
        "holds": probe.holds,
    }
    report.margins = inequality_suite(log, profile, bounds=bounds)
    grid = check_grid(log)
    report.series = time_series(log, grid, profile)
    return report


def time_series(log: EventLog, times, profile: AsymptoticProfile | None = None) -> dict:
    cols = {"t": [], "e": [], "theta": [], "metric_derivative": [], "energy": [], "n_clusters": []}
    for t in times:
        cols["t"].append(float(t))
        cols["e"].append(float(energy_gap(log, profile, t)) if profile else math.nan)
        cols["theta"].append(float(theta(log, t)))
        cols["metric_derivative"].append(metric_derivative(log, t))
        cols["energy"].append(float(kinetic_energy(log, t)))
        cols["n_clusters"].append(len(clusters_at(log, t)))
    return cols
