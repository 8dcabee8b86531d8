"""Command-line driver.

Exit codes: 0 success, 1 verified negative finding, 2 solver failure,
64 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import conditions, economy as econ, equilibrium as eqm, reproduce as rep, solver, welfare
from .model import ModelError, builtin_names, builtin_model, load_model_file

EXIT_OK, EXIT_NEGATIVE, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _round(obj):
    """Recursively round floats to 12 significant digits; non-finite become null."""
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(f"{v:.12g}") if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_round(obj), indent=2) + "\n"


def _vector(text, name):
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise UsageError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def _params(items):
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--param expects name=value, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise UsageError(f"--param {key}: not a number: {val!r}") from None
    return out


def resolve_model(ref: str, params=None):
    """A file path, or a built-in name with or without the ``.model`` suffix."""
    params = params or {}
    path = Path(ref)
    name = ref if ref.endswith(".model") else ref + ".model"
    if path.is_file():
        load = lambda **kw: load_model_file(path, params=kw or None)  # noqa: E731
    elif name in builtin_names():
        load = lambda **kw: builtin_model(name, **kw)  # noqa: E731
    else:
        raise UsageError(f"no model file or built-in model named {ref!r} "
                         f"(built-ins: {', '.join(builtin_names())})")
    if params:
        try:
            declared = set(load().params)
        except ModelError:
            declared = None  # document needs the overrides to load at all
        unknown = sorted(set(params) - declared) if declared is not None else []
        if unknown:
            raise UsageError(f"model {ref!r} declares no parameter(s) {', '.join(unknown)}")
    return load(**params)


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(args, model):
    kwargs = {"samples": args.samples, "seed": args.seed, "u_box": tuple(_vector(args.u_box, "--u-box"))}
    report = conditions.CHECKS[args.assumption](model, **kwargs)
    _emit(dumps(report.to_json()), args.out)
    return EXIT_OK if report.holds else EXIT_NEGATIVE


def cmd_consistency(args, model):
    x = _vector(args.x, "--x")
    if x.size != model.n:
        raise UsageError(f"--x needs {model.n} values")
    guess = None if args.guess is None else _vector(args.guess, "--guess")
    try:
        sol = solver.solve_consistency(model, x, guess=guess, seed=args.seed)
    except solver.ConsistencyError as err:
        _emit(dumps({"x": x, "converged": False, "error": str(err),
                     "best_residual": err.best_residual}), args.out)
        return EXIT_FAILURE
    _emit(dumps({"x": x, "u": sol.u, "residual": sol.residual, "iterations": sol.iterations,
                 "method": sol.method, "converged": sol.converged, "unique": sol.unique}),
          args.out)
    return EXIT_OK


def cmd_iterate(args, model):
    x = _vector(args.x, "--x")
    if args.u0 is not None:
        u0 = _vector(args.u0, "--u0")
    else:
        try:
            base = solver.solve_consistency(model, x, seed=args.seed).u
        except solver.ConsistencyError as err:
            sys.stderr.write(f"{err}\n")
            return EXIT_FAILURE
        u0 = base + args.perturb
    res = solver.picard_iterate(model, x, u0, kmax=args.kmax)
    out = {"x": x, "u0": u0, "verdict": res.verdict, "steps": res.steps, "final": res.final}
    if args.trajectory:
        out["trajectory"] = res.trajectory
    _emit(dumps(out), args.out)
    return EXIT_OK if res.verdict == "converged" else EXIT_NEGATIVE


def cmd_induced(args, model):
    x = _vector(args.x, "--x")
    g = solver.induced_game(model, x, multistart=True)
    _emit(dumps(g.to_json()), args.out)
    return EXIT_OK if g.defined else EXIT_FAILURE


def _equilibrium(args, model):
    start = None if args.start is None else _vector(args.start, "--start")
    return eqm.find_parametric_equilibrium(model, start=start, grid=args.grid)


def cmd_equilibrium(args, model):
    try:
        res = _equilibrium(args, model)
    except eqm.EquilibriumNotFound as err:
        sys.stderr.write(f"{err}\n")
        return EXIT_FAILURE
    out = res.to_json()
    if res.ok and args.dominance:
        dom = eqm.local_dominance_check(model, res)
        out["dominance"] = {"passed": dom.passed, "cross": dom.cross, "tol": dom.tol}
    _emit(dumps(out), args.out)
    if res.ok:
        return EXIT_OK
    return EXIT_NEGATIVE if res.status == "not-maximum" else EXIT_FAILURE


def cmd_pareto(args, model):
    if args.x is not None:
        x = _vector(args.x, "--x")
        try:
            u = solver.solve_consistency(model, x, seed=args.seed).u
        except solver.ConsistencyError as err:
            sys.stderr.write(f"{err}\n")
            return EXIT_FAILURE
    else:
        try:
            res = _equilibrium(args, model)
        except eqm.EquilibriumNotFound as err:
            sys.stderr.write(f"{err}\n")
            return EXIT_FAILURE
        x, u = res.x, res.u
    cert = welfare.pareto_search(model, x, u, per_axis=args.per_axis, seed=args.seed)
    _emit(dumps(cert.to_json()), args.out)
    return EXIT_NEGATIVE if cert.improved else EXIT_OK


def cmd_weights(args, model):
    if args.matrix is not None:
        try:
            B = np.array([[float(v) for v in row.split(",")] for row in args.matrix.split(";")])
        except ValueError:
            raise UsageError("--matrix: rows separated by ';', entries by ','") from None
    elif model is not None:
        try:
            B = solver.separable_induced(model).B
        except (solver.NotSeparableError, solver.SingularAffectionError) as err:
            sys.stderr.write(f"{err}\n")
            return EXIT_FAILURE
    else:
        raise UsageError("weights needs a separable model or --matrix")
    w = welfare.welfare_weights(B)
    out = {"B": B, "found": w is not None}
    if w is not None:
        out.update({"lambda": w.weights, "slack": w.slack, "lambda_B": w.weights @ B})
    _emit(dumps(out), args.out)
    return EXIT_OK if w is not None else EXIT_NEGATIVE


def cmd_economy(args, model):
    try:
        e = econ.EconomyModel(args.a, args.b, M=args.M)
        ce = econ.competitive_equilibrium(e)
        audit = econ.efficiency_audit(e, improvement_weights=tuple(_vector(args.lam, "--lambda")))
    except econ.EconomyError as err:
        sys.stderr.write(f"{err}\n")
        return EXIT_FAILURE
    try:
        planner = econ.planner_solve(e, _vector(args.lam, "--lambda")).to_json()
    except econ.EconomyError as err:
        planner = {"error": str(err)}
    _emit(dumps({"equilibrium": ce.to_json(), "planner": planner, "audit": audit.to_json()}),
          args.out)
    if args.scan_csv:
        Path(args.scan_csv).write_text(econ.weight_scan_csv(e))
    return EXIT_OK


def cmd_reproduce(args, model):
    ids = rep.EXAMPLES if args.example == "all" else (args.example,)
    if args.example != "all" and args.example not in rep.EXAMPLES:
        raise UsageError(f"unknown example {args.example!r}; choose from "
                         f"{', '.join(rep.EXAMPLES)} or all")
    reports = [rep.reproduce(i) for i in ids]
    if args.json:
        text = dumps([r.to_json() for r in reports])
    else:
        text = "\n\n".join(r.table() for r in reports) + "\n"
    _emit(text, args.out)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_NEGATIVE


def cmd_plot_data(args, model):
    ranges = None if args.range is None else _vector(args.range, "--range")
    if ranges is not None and ranges.size != 4:
        raise UsageError("--range expects x0,x1,y0,y1")
    try:
        text = rep.emit_plot_data(model, args.kind, ranges, args.resolution,
                                  weights=_vector(args.lam, "--lambda"))
    except ValueError as err:
        sys.stderr.write(f"{err}\n")
        return EXIT_FAILURE
    _emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = _Parser(prog="affective", description="Purely affective interactions: checks, "
                "consistency, induced games, equilibria and welfare.", formatter_class=fmt)
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=42, help="random seed")
    common.add_argument("--param", action="append", metavar="NAME=VALUE",
                        help="override a model parameter (repeatable)")
    common.add_argument("--out", help="write output here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, model=True, help=""):
        sp = sub.add_parser(name, parents=[common], help=help, formatter_class=fmt)
        if model:
            sp.add_argument("model", help="model file or built-in name")
        sp.set_defaults(func=func, needs_model=model)
        return sp

    sp = add("check", cmd_check, help="test a matrix condition on sampled points")
    sp.add_argument("--assumption", type=int, choices=sorted(conditions.CHECKS), required=True)
    sp.add_argument("--samples", type=int, default=1000, help="sample count")
    sp.add_argument("--u-box", default="-10,10", help="utility sampling interval lo,hi")

    sp = add("consistency", cmd_consistency, help="solve u = V_x(u) at an action profile")
    sp.add_argument("--x", required=True, help="action profile, comma separated")
    sp.add_argument("--guess", help="initial utility guess")

    sp = add("iterate", cmd_iterate, help="Picard iteration of u <- V_x(u)")
    sp.add_argument("--x", required=True, help="action profile")
    sp.add_argument("--u0", help="starting utilities (default: consistent u plus --perturb)")
    sp.add_argument("--perturb", type=float, default=1e-2, help="offset added to consistent u")
    sp.add_argument("--kmax", type=int, default=10000, help="maximum steps")
    sp.add_argument("--trajectory", action="store_true", help="include the full trajectory")

    sp = add("induced", cmd_induced, help="induced utilities and gradient at x")
    sp.add_argument("--x", required=True, help="action profile")

    for name, func, hlp in (("equilibrium", cmd_equilibrium, "find a parametric equilibrium"),
                            ("pareto", cmd_pareto, "search for a Pareto improvement")):
        sp = add(name, func, help=hlp)
        sp.add_argument("--start", help="starting action profile")
        sp.add_argument("--grid", type=int, default=eqm.GRID, help="deviation grid per axis")
    sub.choices["equilibrium"].add_argument("--dominance", action="store_true",
                                            help="also run the local dominance check")
    sub.choices["pareto"].add_argument("--x", help="reference profile (default: equilibrium)")
    sub.choices["pareto"].add_argument("--per-axis", type=int, default=64,
                                       help="search grid points per axis")

    sp = add("weights", cmd_weights, model=False, help="welfare weights for a separable model")
    sp.add_argument("model", nargs="?", help="separable model file or built-in name")
    sp.add_argument("--matrix", help="B given directly, e.g. '2,4;0.5,2'")

    sp = add("economy", cmd_economy, model=False, help="two-agent affective exchange economy")
    sp.add_argument("--a", type=float, default=2.0, help="agent 1 affection coefficient")
    sp.add_argument("--b", type=float, default=0.25, help="agent 2 affection coefficient")
    sp.add_argument("--M", type=float, default=100.0, help="money endowment per agent")
    sp.add_argument("--lambda", dest="lam", default="1,1", help="planner weights")
    sp.add_argument("--scan-csv", help="write the lambda scan CSV here")

    sp = add("reproduce", cmd_reproduce, model=False, help="reproduce a worked example")
    sp.add_argument("example", help=f"one of {', '.join(rep.EXAMPLES)}, or all")
    sp.add_argument("--json", action="store_true", help="JSON instead of a table")

    sp = add("plot-data", cmd_plot_data, help="CSV data for reaction curves and surfaces")
    sp.add_argument("--kind", choices=rep.PLOT_KINDS, required=True)
    sp.add_argument("--range", help="x0,x1,y0,y1 (default: action box)")
    sp.add_argument("--resolution", type=int, default=200, help="points per axis")
    sp.add_argument("--lambda", dest="lam", default="0.5,0.5", help="welfare weights")
    return p


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        ref = getattr(args, "model", None)
        model = None if ref is None else resolve_model(ref, _params(args.param))
        return args.func(args, model)
    except UsageError as err:
        sys.stderr.write(f"affective: error: {err}\n")
        return EXIT_USAGE
    except ModelError as err:
        sys.stderr.write(f"affective: model error: {err}\n")
        return EXIT_USAGE


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
