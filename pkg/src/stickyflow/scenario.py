"""Scenario files, seeded scenario generators and result bundles.

Scenario schema (JSON)::

    {
      "name": "symmetric_pair",
      "atoms": [{"m": "1/2", "x": "1/4", "v": "1/2"}, ...],
      "domain": {"kind": "line" | "interval" | "left_ray" | "right_ray" | "union",
                 "a": ..., "b": ..., "components": [[a, b], ...]},
      "arithmetic": "float64" | "rational",
      "checks": ["dual_oracle", "identities", "shapes", "oleinik",
                 "confinement_equivalence", "flow_identity"],
      "times": "auto" | [t, ...],
      "seed": null | int
    }

Numbers may be JSON numbers or strings such as ``"3/8"``.  In rational mode
every number must be an integer or a fraction string.
"""

from __future__ import annotations

import io
import json
import math
import os
import random
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .asymptotics import (
    DivergentFlowError,
    check_grid,
    identity_3_11_probe,
    identity_suite,
    inequality_suite,
    limit_profile,
    time_series,
)
from .engine import simulate
from .lagrangian import (
    LagrangianSolution,
    confinement_equivalence,
    dual_oracle_gap,
    flow_identity_check,
    oleinik_check,
)
from .quantile import INF, Atom, DiscreteMeasure, Domain

__all__ = [
    "CHECKS",
    "ScenarioError",
    "Scenario",
    "ResultBundle",
    "parse_scenario",
    "load_scenario",
    "scenario_to_dict",
    "random_free_scenario",
    "random_box_scenario",
    "random_confined_scenario",
    "run",
    "dumps",
    "write_atomic",
    "summary_row",
]

CHECKS = ("dual_oracle", "identities", "shapes", "oleinik",
          "confinement_equivalence", "flow_identity")
ARITHMETIC = ("float64", "rational")
DEFAULT_TOL = 1e-10


class ScenarioError(ValueError):
    """Invalid scenario input; ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class Scenario:
    name: str
    atoms: list
    domain: Domain = field(default_factory=Domain.line)
    arithmetic: str = "float64"
    checks: tuple = ()
    times: object = "auto"
    seed: int | None = None

    def measure(self) -> DiscreteMeasure:
        return DiscreteMeasure.from_atoms([Atom(m, x, v) for m, x, v in self.atoms])

    def with_arithmetic(self, arithmetic: str) -> "Scenario":
        if arithmetic not in ARITHMETIC:
            raise ScenarioError([f"unknown arithmetic {arithmetic!r}"])
        conv = _to_float if arithmetic == "float64" else Fraction
        atoms = [tuple(conv(q) for q in a) for a in self.atoms]
        comps = tuple((conv(lo) if lo not in (-INF, INF) else lo,
                       conv(hi) if hi not in (-INF, INF) else hi)
                      for lo, hi in self.domain.components)
        times = self.times if self.times == "auto" else [conv(t) for t in self.times]
        return Scenario(self.name, atoms, Domain(comps), arithmetic, self.checks, times, self.seed)


def _to_float(q):
    return float(q)


def _number(raw, rational: bool, where: str, problems: list):
    if isinstance(raw, bool) or raw is None:
        problems.append(f"{where}: expected a number, got {raw!r}")
        return None
    if isinstance(raw, str):
        try:
            q = Fraction(raw.strip())
        except (ValueError, ZeroDivisionError):
            problems.append(f"{where}: cannot parse {raw!r} as a number")
            return None
        if rational and not _is_fraction_literal(raw):
            problems.append(f"{where}: rational mode needs an integer fraction, got {raw!r}")
            return None
        return q if rational else float(q)
    if isinstance(raw, int):
        return Fraction(raw) if rational else float(raw)
    if isinstance(raw, float):
        if rational:
            problems.append(f"{where}: rational mode needs an integer fraction, got {raw!r}")
            return None
        if not math.isfinite(raw):
            problems.append(f"{where}: non-finite value {raw!r}")
            return None
        return raw
    problems.append(f"{where}: expected a number, got {type(raw).__name__}")
    return None


def _is_fraction_literal(s: str) -> bool:
    parts = s.strip().split("/")
    if len(parts) > 2:
        return False
    try:
        [int(p) for p in parts]
    except ValueError:
        return False
    return True


def _bound(raw, rational, where, problems):
    if raw in ("-inf", "inf", "+inf", None):
        return {"-inf": -INF, "inf": INF, "+inf": INF, None: None}[raw]
    return _number(raw, rational, where, problems)


def _parse_domain(raw, rational, problems) -> Domain | None:
    if raw is None:
        return Domain.line()
    if not isinstance(raw, dict):
        problems.append("domain: expected an object")
        return None
    kind = raw.get("kind", "line")
    a = _bound(raw.get("a"), rational, "domain.a", problems)
    b = _bound(raw.get("b"), rational, "domain.b", problems)
    try:
        if kind == "line":
            return Domain.line()
        if kind == "interval":
            if a is None or b is None:
                problems.append("domain: interval needs 'a' and 'b'")
                return None
            return Domain.interval(a, b)
        if kind == "left_ray":
            if b is None:
                problems.append("domain: left_ray needs 'b'")
                return None
            return Domain.left_ray(b)
        if kind == "right_ray":
            if a is None:
                problems.append("domain: right_ray needs 'a'")
                return None
            return Domain.right_ray(a)
        if kind == "union":
            comps = []
            for k, c in enumerate(raw.get("components") or []):
                if not isinstance(c, list) or len(c) != 2:
                    problems.append(f"domain.components[{k}]: expected [a, b]")
                    continue
                lo = _bound(c[0], rational, f"domain.components[{k}][0]", problems)
                hi = _bound(c[1], rational, f"domain.components[{k}][1]", problems)
                comps.append((lo, hi))
            if not comps:
                problems.append("domain: union needs a nonempty 'components' list")
                return None
            return Domain(tuple(comps))
    except ValueError as exc:
        problems.append(f"domain: {exc}")
        return None
    problems.append(f"domain: unknown kind {kind!r}")
    return None


def parse_scenario(doc, arithmetic: str | None = None) -> Scenario:
    """Validate a decoded scenario document, collecting every problem."""
    problems = []
    if not isinstance(doc, dict):
        raise ScenarioError(["top level: expected a JSON object"])
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        problems.append("name: expected a nonempty string")
    arith = arithmetic or doc.get("arithmetic", "float64")
    if arith not in ARITHMETIC:
        problems.append(f"arithmetic: expected one of {ARITHMETIC}, got {arith!r}")
        arith = "float64"
    rational = arith == "rational"

    domain = _parse_domain(doc.get("domain"), rational, problems)

    atoms = []
    raw_atoms = doc.get("atoms")
    if not isinstance(raw_atoms, list) or not raw_atoms:
        problems.append("atoms: expected a nonempty list")
        raw_atoms = []
    for i, a in enumerate(raw_atoms):
        if not isinstance(a, dict):
            problems.append(f"atoms[{i}]: expected an object with m, x, v")
            continue
        missing = [k for k in ("m", "x", "v") if k not in a]
        if missing:
            problems.append(f"atoms[{i}]: missing field(s) {', '.join(missing)}")
            continue
        m = _number(a["m"], rational, f"atoms[{i}].m", problems)
        x = _number(a["x"], rational, f"atoms[{i}].x", problems)
        v = _number(a["v"], rational, f"atoms[{i}].v", problems)
        if m is not None and not m > 0:
            problems.append(f"atoms[{i}].m: mass must be positive, got {a['m']!r}")
        if x is not None and domain is not None and not domain.contains(x):
            problems.append(f"atoms[{i}].x: position {a['x']!r} lies outside the domain")
        atoms.append((m, x, v))

    if atoms and all(None not in a for a in atoms):
        total = sum(a[0] for a in atoms)
        if (total != 1) if rational else abs(total - 1) > 1e-12:
            problems.append(f"atoms: masses sum to {total}, not 1")

    checks = doc.get("checks", [])
    if not isinstance(checks, list):
        problems.append("checks: expected a list")
        checks = []
    for c in checks:
        if c not in CHECKS:
            problems.append(f"checks: unknown check {c!r}")

    times = doc.get("times", "auto")
    parsed_times = "auto"
    if times != "auto":
        if not isinstance(times, list) or not times:
            problems.append("times: expected 'auto' or a nonempty list")
        else:
            parsed_times = []
            for k, t in enumerate(times):
                q = _number(t, rational, f"times[{k}]", problems)
                if q is not None and q < 0:
                    problems.append(f"times[{k}]: negative time")
                parsed_times.append(q)

    seed = doc.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        problems.append("seed: expected an integer or null")

    if problems:
        raise ScenarioError(problems)
    scen = Scenario(name, atoms, domain, arith, tuple(checks), parsed_times, seed)
    try:
        scen.measure()
    except ValueError as exc:
        raise ScenarioError([f"atoms: {exc}"]) from None
    return scen


def load_scenario(path, arithmetic: str | None = None) -> Scenario:
    """Read and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError([f"{path}: {exc.strerror or exc}"]) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from None
    return parse_scenario(doc, arithmetic)


def _num_out(q):
    if isinstance(q, Fraction):
        return str(q)
    if q in (INF, -INF):
        return "inf" if q > 0 else "-inf"
    return q


def scenario_to_dict(s: Scenario) -> dict:
    kind = s.domain.kind
    dom = {"kind": kind}
    if kind == "union":
        dom["components"] = [[_num_out(lo), _num_out(hi)] for lo, hi in s.domain.components]
    elif kind != "line":
        lo, hi = s.domain.components[0]
        if lo != -INF:
            dom["a"] = _num_out(lo)
        if hi != INF:
            dom["b"] = _num_out(hi)
    return {
        "name": s.name,
        "atoms": [{"m": _num_out(m), "x": _num_out(x), "v": _num_out(v)} for m, x, v in s.atoms],
        "domain": dom,
        "arithmetic": s.arithmetic,
        "checks": list(s.checks),
        "times": "auto" if s.times == "auto" else [_num_out(t) for t in s.times],
        "seed": s.seed,
    }


# ---------------------------------------------------------------------------
# seeded generators


def _dyadic_masses(rng: random.Random, n: int, p: int = 6) -> list:
    """Random composition of ``2^p`` into ``n`` positive parts, as masses."""
    total = 2 ** p
    cuts = sorted(rng.sample(range(1, total), n - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [total])]
    return [Fraction(k, total) for k in parts]


def _dyadic_positions(rng: random.Random, n: int, lo: int = 0, hi: int = 1024) -> list:
    return [Fraction(k, 1024) for k in sorted(rng.sample(range(lo, hi + 1), n))]


def random_free_scenario(seed: int, n: int | None = None, arithmetic: str = "float64") -> Scenario:
    """Free-line scenario with dyadic masses, positions and velocities in [-2, 2]."""
    rng = random.Random(seed)
    n = rng.randint(2, 16) if n is None else n
    ms = _dyadic_masses(rng, n)
    xs = _dyadic_positions(rng, n)
    vs = [Fraction(rng.randint(-512, 512), 256) for _ in range(n)]
    scen = Scenario(f"random_free_{seed}", list(zip(ms, xs, vs)), Domain.line(), "rational",
                    ("dual_oracle", "flow_identity"), "auto", seed)
    return scen.with_arithmetic(arithmetic)


def random_box_scenario(seed: int, n: int | None = None, arithmetic: str = "float64") -> Scenario:
    """Atoms strictly inside [0, 1] with arbitrary velocities and sticky walls."""
    rng = random.Random(seed)
    n = rng.randint(2, 12) if n is None else n
    ms = _dyadic_masses(rng, n)
    xs = _dyadic_positions(rng, n, 1, 1023)
    vs = [Fraction(rng.randint(-512, 512), 256) for _ in range(n)]
    scen = Scenario(f"random_box_{seed}", list(zip(ms, xs, vs)),
                    Domain.interval(Fraction(0), Fraction(1)), "rational",
                    ("confinement_equivalence", "oleinik"), "auto", seed)
    return scen.with_arithmetic(arithmetic)


def random_confined_scenario(seed: int, n: int | None = None, arithmetic: str = "rational",
                             max_tries: int = 200) -> Scenario:
    """Free flow that settles inside [0, 1] without touching the walls.

    Atoms are split into contiguous groups; inside a group velocities are
    nonincreasing with zero total momentum, so every group collapses and the
    whole flow comes to rest.  Candidates that leave [0, 1] or never
    collide are rejected.
    """
    rng = random.Random(seed)
    n = rng.randint(2, 8) if n is None else n
    for _ in range(max_tries):
        ms = _dyadic_masses(rng, n)
        xs = _dyadic_positions(rng, n, 16, 1008)
        cuts = sorted(rng.sample(range(1, n), rng.randint(0, min(2, n - 1))))
        vs = []
        for lo, hi in zip([0] + cuts, cuts + [n]):
            raw = sorted((Fraction(rng.randint(-256, 256), 256) for _ in range(hi - lo)),
                         reverse=True)
            mass = sum(ms[lo:hi])
            mean = sum(m * v for m, v in zip(ms[lo:hi], raw)) / mass
            vs += [v - mean for v in raw]
        scen = Scenario(f"random_confined_{seed}", list(zip(ms, xs, vs)),
                        Domain.interval(Fraction(0), Fraction(1)), "rational",
                        ("identities", "shapes", "oleinik", "flow_identity"), "auto", seed)
        log = simulate(scen.measure())
        lo, hi = _hull(log)
        if log.events and log.at_rest and 0 <= lo and hi <= 1:
            return scen.with_arithmetic(arithmetic)
    raise RuntimeError(f"no confined scenario found for seed {seed}")


def _hull(log):
    """Smallest interval containing every trajectory of a settled run."""
    ys = [c.position for _, cl in log.snapshots for c in cl] + list(log.initial.positions)
    return (min(ys), max(ys)) if ys else None


# ---------------------------------------------------------------------------
# running


@dataclass
class ResultBundle:
    scenario: dict
    events: dict
    series: dict
    diagnostics: dict
    checks: dict

    @property
    def ok(self) -> bool:
        return all(c["status"] in ("pass", "divergent") for c in self.checks.values())

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "events": self.events, "checks": self.checks,
                "diagnostics": self.diagnostics, "ok": self.ok}

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def series_csv(self) -> str:
        return series_csv(self.series)


def _check(status, value=None, tol=None, detail=None) -> dict:
    return {"status": status, "value": value, "tolerance": tol, "detail": detail}


def _judge(value, tol) -> dict:
    return _check("pass" if value <= tol else "fail", float(value), tol)


def auto_times(log) -> list:
    """Event times with neighbours, a uniform grid and a doubling tail."""
    grid = set(check_grid(log))
    end = max(grid) if grid else 1
    if end == 0:
        end = Fraction(1) if log.exact else 1.0
    for j in range(1, 7):
        grid.add(end * 2 ** j)
    return sorted(grid)


def run(scen: Scenario, tolerance: float = DEFAULT_TOL, horizon=None) -> ResultBundle:
    """Simulate a scenario, run its checks and collect the outputs."""
    measure = scen.measure()
    log = simulate(measure, scen.domain, horizon)
    times = auto_times(log) if scen.times == "auto" else sorted(scen.times)
    if horizon is not None:
        times = [t for t in times if t <= horizon]

    try:
        profile = limit_profile(log)
        div_reason = None
    except DivergentFlowError as exc:
        profile, div_reason = None, str(exc)
    except ValueError as exc:
        profile, div_reason = None, str(exc)

    bounded = [(lo, hi) for lo, hi in scen.domain.components if lo != -INF and hi != INF]
    hull = _hull(log)
    bounds = bounded[0] if len(scen.domain.components) == 1 and bounded else hull

    checks, diag = {}, {}
    for name in scen.checks:
        try:
            checks[name] = _run_check(name, scen, log, profile, div_reason, times,
                                      bounds, tolerance, diag)
        except (ValueError, RuntimeError) as exc:
            checks[name] = _check("error", detail=f"{scen.name}: {exc}")

    events = {
        "count": len(log.events),
        "equilibrium_time": _num_out(log.equilibrium_time) if log.equilibrium_time is not None else None,
        "at_rest": log.at_rest,
        "final_clusters": [
            {"mass": _num_out(c.mass), "position": _num_out(c.position),
             "velocity": _num_out(c.velocity), "wall": c.wall}
            for c in log.final_clusters
        ],
        "list": [
            {"time": _num_out(e.time), "position": _num_out(e.position), "kind": e.kind,
             "participants": sorted(i for c in e.participants for i in c.members),
             "velocity": _num_out(e.resulting.velocity)}
            for e in log.events
        ],
    }
    series = time_series(log, times, profile)
    return ResultBundle(scenario_to_dict(scen), events, series, diag, checks)


def _wall_free(log) -> bool:
    """No wall contact except atoms resting on the boundary from the start."""
    return all(e.kind == "merge" or (e.time == 0 and all(c.velocity == 0 for c in e.participants))
               for e in log.events)


def _run_check(name, scen, log, profile, div_reason, times, bounds, tol, diag):
    positive = [t for t in times if t > 0]
    if name == "dual_oracle":
        if not scen.domain.is_line:
            return _check("error", detail="dual oracle applies to the free line only")
        sol = LagrangianSolution.from_measure(log.initial)
        return _judge(max(dual_oracle_gap(log, sol, t) for t in times), tol)
    if name == "flow_identity":
        if not _wall_free(log):
            return _check("error", detail="flow identity needs a wall-free flow")
        pairs = [(s, t) for i, t in enumerate(times) for s in times[: i + 1]]
        pairs = pairs[:: max(1, len(pairs) // 16)][:16]
        return _judge(float(max(flow_identity_check(log, s, t) for s, t in pairs)), tol)
    if name == "oleinik":
        reports = [oleinik_check(log, t, bounds=bounds) for t in positive]
        worst = max(max(r.margin, r.two_sided_margin, r.uniform_margin) for r in reports)
        diag["oleinik"] = {"margin": max(r.margin for r in reports),
                           "two_sided": max(r.two_sided_margin for r in reports),
                           "uniform": max(r.uniform_margin for r in reports)}
        return _judge(worst, tol)
    if name == "confinement_equivalence":
        rep = confinement_equivalence(log.initial, scen.domain, tol=tol)
        diag["confinement"] = {"max_distance": float(rep.max_distance),
                               "max_velocity_gap": rep.max_velocity_gap}
        c = _judge(max(float(rep.max_distance), rep.max_velocity_gap), tol)
        if rep.first_failure is not None:
            c["detail"] = f"first failure at t={_num_out(rep.first_failure)}"
        return c
    if profile is None:
        return _check("divergent", detail=div_reason)
    if name == "identities":
        if not _wall_free(log):
            return _check("error", detail="identity suite needs a wall-free flow")
        res = identity_suite(log, profile)
        probe = identity_3_11_probe(log)
        diag["identities"] = res
        diag["eq3_11"] = {"doubled_residual": probe.residual_doubled,
                          "plain_residual": probe.residual_plain, "holds": probe.holds}
        worst = max(abs(v) for v in res.values())
        c = _judge(worst, tol)
        c["detail"] = {k: v for k, v in res.items() if abs(v) > tol} or None
        return c
    if name == "shapes":
        if not _wall_free(log):
            return _check("error", detail="shape and inequality suite needs a wall-free flow")
        margins = inequality_suite(log, profile, bounds=bounds)
        diag["inequalities"] = margins
        c = _judge(max(margins.values()), tol)
        c["detail"] = sorted(k for k, v in margins.items() if v > tol) or None
        return c
    raise ValueError(f"unknown check {name!r}")


# ---------------------------------------------------------------------------
# serialisation


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 0) -> str:
    """Deterministic JSON with sorted keys and 17-digit floats."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{dumps(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    return json.dumps(obj)


SERIES_COLUMNS = ("t", "e", "theta", "metric_derivative", "energy", "n_clusters")


def series_csv(series: dict) -> str:
    out = io.StringIO()
    out.write(",".join(SERIES_COLUMNS) + "\n")
    for row in zip(*(series[c] for c in SERIES_COLUMNS)):
        cells = [str(v) if isinstance(v, int) else _fmt_float(float(v)).strip('"') for v in row]
        out.write(",".join(cells) + "\n")
    return out.getvalue()


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def summary_row(bundle: dict) -> dict:
    """One summary row from a serialised bundle (as re-read from disk)."""
    checks = bundle.get("checks", {})
    return {
        "name": bundle["scenario"]["name"],
        "status": "pass" if bundle.get("ok") else "fail",
        "events": bundle["events"]["count"],
        "at_rest": bundle["events"]["at_rest"],
        "checks": ";".join(f"{k}={checks[k]['status']}" for k in sorted(checks)),
    }
