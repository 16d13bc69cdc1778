"""Command line entry point: ``python -m stickyflow <command> ...``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on input
errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import bombardment as bomb
from .asymptotics import DivergentFlowError, decay_fit, limit_profile
from .engine import simulate
from .lagrangian import LagrangianSolution, solve_quantile
from .scenario import (
    DEFAULT_TOL,
    ScenarioError,
    _num_out,
    dumps,
    load_scenario,
    random_box_scenario,
    random_confined_scenario,
    random_free_scenario,
    run,
    summary_row,
    write_atomic,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
BUNDLE_SUFFIX = ".bundle.json"
SERIES_SUFFIX = ".series.csv"


def _emit(text: str, out: str | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        write_atomic(Path(out) / name, text if text.endswith("\n") else text + "\n")


def _number(s: str):
    return Fraction(s)


def _load(args):
    if args.scenario is None:
        if args.seed is None:
            raise ScenarioError(["give a scenario file or --seed for a random scenario"])
        gen = {"free": random_free_scenario, "box": random_box_scenario,
               "confined": random_confined_scenario}[args.kind]
        scen = gen(args.seed)
        return scen.with_arithmetic(args.arithmetic) if args.arithmetic else scen
    return load_scenario(args.scenario, args.arithmetic)


def _horizon(args, scen):
    if args.horizon is None:
        return None
    h = _number(args.horizon)
    return h if scen.arithmetic == "rational" else float(h)


def cmd_simulate(args) -> int:
    scen = _load(args)
    bundle = run(scen, args.tolerance, _horizon(args, scen))
    _emit(bundle.to_json(), args.out, scen.name + BUNDLE_SUFFIX)
    if args.out is not None:
        _emit(bundle.series_csv(), args.out, scen.name + SERIES_SUFFIX)
    return EXIT_OK if bundle.ok else EXIT_FAIL


def cmd_project(args) -> int:
    scen = _load(args)
    if not scen.domain.is_line:
        raise ScenarioError(["project: the projection formula needs a free-line scenario"])
    t = _number(args.t)
    t = t if scen.arithmetic == "rational" else float(t)
    N = solve_quantile(LagrangianSolution.from_measure(scen.measure()), t)
    doc = {"name": scen.name, "t": _num_out(t),
           "breakpoints": [_num_out(b) for b in N.breakpoints],
           "values": [_num_out(v) for v in N.values]}
    _emit(dumps(doc), args.out, f"{scen.name}.projection.json")
    return EXIT_OK


def cmd_limits(args) -> int:
    scen = _load(args)
    log = simulate(scen.measure(), scen.domain, _horizon(args, scen))
    try:
        prof = limit_profile(log)
    except DivergentFlowError as exc:
        _emit(dumps({"name": scen.name, "divergent": True, "detail": str(exc)}),
              args.out, f"{scen.name}.limits.json")
        return EXIT_FAIL
    doc = {
        "name": scen.name,
        "divergent": False,
        "equilibrium_time": _num_out(prof.equilibrium_time),
        "N_inf": {"breakpoints": [_num_out(b) for b in prof.N_inf.breakpoints],
                  "values": [_num_out(v) for v in prof.N_inf.values]},
        "limit_measure": [{"m": _num_out(a.mass), "x": _num_out(a.position)}
                          for a in prof.limit_measure.atoms],
    }
    _emit(dumps(doc), args.out, f"{scen.name}.limits.json")
    return EXIT_OK


def cmd_identities(args) -> int:
    scen = _load(args)
    scen.checks = ("identities", "shapes")
    bundle = run(scen, args.tolerance, _horizon(args, scen))
    doc = {"name": scen.name, "checks": bundle.checks, "diagnostics": bundle.diagnostics}
    _emit(dumps(doc), args.out, f"{scen.name}.identities.json")
    return EXIT_OK if bundle.ok else EXIT_FAIL


def _bomb_table(n: int, K: int) -> tuple:
    spec = bomb.geometric_family(n)
    r = bomb.run_recursion(spec, K=K)
    g = bomb.energy_gap_series(r, spec)
    lines = ["k,t_k,y_k,v_k,e_k,tail_bound"]
    for k in range(K + 1):
        cells = [str(k)] + [format(float(q), ".17g") for q in
                            (r.t[k], r.y[k], r.v[k], g.e[k], g.bound[k])]
        lines.append(",".join(cells))
    return r, g, "\n".join(lines) + "\n"


def cmd_bombard(args) -> int:
    r, g, table = _bomb_table(args.n, args.K)
    # t_0 = 0 cannot enter a log-log fit; short runs get no exponent
    lo = max(1, min(args.k_min, args.K - 7))
    fit = decay_fit(g.t[lo:], g.e[lo:]) if args.K - lo >= 7 else None
    doc = {"family": f"geometric(n={args.n})", "K": args.K, "a": str(r.a),
           "v1": str(r.v[1]), "t1": str(r.t[1]), "y1": str(r.y[1]),
           "y_bar": float(g.y_bar), "y_bar_error": float(g.y_bar_error),
           "momentum_identity_exact": all(x == 0 for x in r.momentum_residuals),
           "gamma": fit and fit.gamma, "fit_window_k": [lo, args.K],
           "fit_residual": fit and fit.residual}
    if args.out is None:
        sys.stdout.write(table)
        sys.stdout.write(dumps(doc) + "\n")
    else:
        _emit(table, args.out, f"bombard_n{args.n}.csv")
        _emit(dumps(doc), args.out, f"bombard_n{args.n}.json")
    return EXIT_OK if doc["momentum_identity_exact"] else EXIT_FAIL


def cmd_sweep(args) -> int:
    rows = bomb.exponent_sweep(args.n, K=args.K, k_min=args.k_min)
    lines = ["n,gamma,residual,max_bound"]
    for row in rows:
        lines.append(",".join([str(row["n"])] + [format(row[c], ".17g")
                                                 for c in ("gamma", "residual", "max_bound")]))
    _emit("\n".join(lines) + "\n", args.out, "sweep.csv")
    return EXIT_OK


def _batch_one(path: str, tolerance: float, arithmetic):
    """Run one scenario file; returns (path, row, exit code)."""
    p = Path(path)
    try:
        scen = load_scenario(p, arithmetic)
    except ScenarioError as exc:
        return path, {"name": p.stem, "status": "input_error", "events": "",
                      "at_rest": "", "checks": str(exc)}, EXIT_INPUT
    bundle = run(scen, tolerance)
    text = bundle.to_json() + "\n"
    stem = p.name[: -len(".json")]
    write_atomic(p.with_name(stem + BUNDLE_SUFFIX), text)
    write_atomic(p.with_name(stem + SERIES_SUFFIX), bundle.series_csv())
    row = summary_row(json.loads(text))
    return path, row, EXIT_OK if bundle.ok else EXIT_FAIL


def batch(directory, parallelism: int = 1, tolerance: float = DEFAULT_TOL,
          arithmetic=None) -> tuple:
    """Run every scenario in ``directory``; returns (summary csv text, exit code)."""
    d = Path(directory)
    if not d.is_dir():
        raise ScenarioError([f"{d}: not a directory"])
    files = sorted(str(p) for p in d.glob("*.json") if not p.name.endswith(BUNDLE_SUFFIX)
                   and not p.name.startswith("."))
    if parallelism > 1 and len(files) > 1:
        with ProcessPoolExecutor(parallelism) as ex:
            results = list(ex.map(_batch_one, files, [tolerance] * len(files),
                                  [arithmetic] * len(files)))
    else:
        results = [_batch_one(f, tolerance, arithmetic) for f in files]
    results.sort(key=lambda r: r[0])
    names = [r[1]["name"] for r in results]
    dupes = sorted({n for n in names if names.count(n) > 1})
    cols = ("name", "status", "events", "at_rest", "checks")
    lines = [",".join(cols)]
    for _, row, _ in results:
        lines.append(",".join(_csv_cell(row[c]) for c in cols))
    codes = [c for _, _, c in results]
    code = EXIT_INPUT if EXIT_INPUT in codes or dupes else (EXIT_FAIL if EXIT_FAIL in codes else EXIT_OK)
    if dupes:
        lines.append("# duplicate scenario names: " + ";".join(dupes))
    return "\n".join(lines) + "\n", code


def _csv_cell(v) -> str:
    s = str(v)
    return '"' + s.replace('"', '""') + '"' if any(c in s for c in ',"\n') else s


def cmd_batch(args) -> int:
    text, code = batch(args.directory, args.parallelism, args.tolerance, args.arithmetic)
    _emit(text, args.out, "summary.csv")
    return code


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--arithmetic", choices=("float64", "rational"), default=None,
                        help="override the scenario's arithmetic")
    common.add_argument("--horizon", default=None, help="stop simulating at this time")
    common.add_argument("--tolerance", type=float, default=DEFAULT_TOL)
    common.add_argument("--seed", type=int, default=None,
                        help="generate a random scenario instead of reading a file")
    common.add_argument("--kind", choices=("free", "box", "confined"), default="free",
                        help="family for --seed scenarios")
    common.add_argument("--out", default=None, help="output directory (default: stdout)")

    p = argparse.ArgumentParser(prog="stickyflow",
                                description="Sticky particle flows: simulation and diagnostics")
    sub = p.add_subparsers(dest="command", required=True)

    for name, fn, helptext in [
        ("simulate", cmd_simulate, "simulate a scenario and run its checks"),
        ("limits", cmd_limits, "asymptotic profile of a scenario"),
        ("identities", cmd_identities, "identity and inequality diagnostics"),
    ]:
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("scenario", nargs="?")
        s.set_defaults(func=fn)

    s = sub.add_parser("project", parents=[common], help="quantile map at time t by projection")
    s.add_argument("scenario", nargs="?")
    s.add_argument("--t", required=True, help="time, e.g. 1/2 or 0.5")
    s.set_defaults(func=cmd_project)

    s = sub.add_parser("bombard", parents=[common], help="bombardment recursion table")
    s.add_argument("--n", type=int, default=2, help="speeds b_k = n^-k")
    s.add_argument("--K", type=int, default=60)
    s.add_argument("--k-min", type=int, default=20)
    s.set_defaults(func=cmd_bombard)

    s = sub.add_parser("sweep", parents=[common], help="decay exponent for several n")
    s.add_argument("--n", type=int, nargs="+", default=[2, 3, 4, 6, 8, 16])
    s.add_argument("--K", type=int, default=60)
    s.add_argument("--k-min", type=int, default=20)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("batch", parents=[common], help="run every scenario in a directory")
    s.add_argument("directory")
    s.add_argument("--parallelism", type=int, default=1)
    s.set_defaults(func=cmd_batch)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ScenarioError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
