"""Command-line front end.

Exit codes: 0 success, 1 assumption or estimate verdict failure, 2 usage or
problem-file error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, genfunc as gf
from .mollifier import MollifierError, build_mollifier, build_nonnegative_profile, scale
from .problem import BUILTIN_PROBLEMS, ProblemSpecError, builtin_problem, ProblemSpec, validate
from .solver import ResolutionError, SolverError, fixed_point_residual, pde_residual, picard_solve

EXIT_OK, EXIT_VERDICT, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _grid_arg(values, default):
    if values is None:
        return list(default)
    start, stop, count = values
    if not (start > 0 and stop > 0):
        raise UsageError("eps grid endpoints must be positive")
    return gf.geometric_grid(start, stop, int(count))


def load_problem_arg(arg) -> ProblemSpec:
    """A JSON file path, or the name of a built-in problem."""
    path = Path(arg)
    if not path.exists():
        if arg in BUILTIN_PROBLEMS:
            return builtin_problem(arg)
        raise UsageError(f"{arg}: no such file and not a built-in problem ({', '.join(sorted(BUILTIN_PROBLEMS))})")
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{arg}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return ProblemSpec.from_dict(doc)
    except ProblemSpecError as exc:
        raise UsageError(f"{arg}: {exc}") from None


def _out_dir(args, command, name):
    d = Path(args.out) / command / (args.name or name)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_json(path, obj):
    Path(path).write_text(json.dumps(gf._jsonable(obj), indent=2, sort_keys=True) + "\n")


def _mollifier(args):
    try:
        return build_mollifier(args.q, args.support_radius, args.sharpness)
    except (MollifierError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _common_manifest(args, command):
    return {"command": command, "seed": args.seed,
            "mollifier": {"q": args.q, "support_radius": args.support_radius, "sharpness": args.sharpness}}


# --------------------------------------------------------------------------
# commands


def cmd_validate(args):
    p = load_problem_arg(args.problem)
    m = _mollifier(args)
    grid = _grid_arg(args.eps_grid, gf.geometric_grid(1e-3, 1e-6, 6))
    try:
        rep = validate(p, m, grid, seed=args.seed)
    except gf.EstimateError as exc:
        raise UsageError(str(exc)) from None
    out = _out_dir(args, "validate", p.name)
    man = _common_manifest(args, "validate")
    man.update(problem=p.to_dict(), eps_grid=grid)
    _write_json(out / "manifest.json", man)
    _write_json(out / "report.json", rep.to_dict())
    for key in sorted(rep.assumptions, key=int):
        print(f"assumption {key}: {'pass' if rep.assumptions[key]['passed'] else 'FAIL'}")
    print(f"assumption 9 (advisory): {'pass' if rep.advisory['assumption_9']['passed'] else 'not satisfied'}")
    print(f"report: {out / 'report.json'}")
    return EXIT_OK if rep.passed else EXIT_VERDICT


def cmd_solve(args):
    p = load_problem_arg(args.problem)
    m = _mollifier(args)
    if not args.skip_validate:
        grid = _grid_arg(args.eps_grid, gf.geometric_grid(1e-3, 1e-6, 6))
        rep = validate(p, m, grid, seed=args.seed)
        if not rep.passed:
            print(f"validation failed (assumptions {', '.join(rep.failed())}); use --skip-validate to force",
                  file=sys.stderr)
            return EXIT_VERDICT
    try:
        sol = picard_solve(p, m, args.eps, args.nx, args.nt, args.tol, args.max_iter)
    except ResolutionError as exc:
        raise UsageError(str(exc)) from None
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = _out_dir(args, "solve", p.name)
    man = _common_manifest(args, "solve")
    man.update(problem=p.to_dict(), eps=args.eps, nx=args.nx, nt=args.nt, tol=args.tol, max_iter=args.max_iter,
               solution=sol.manifest())
    _write_json(out / "manifest.json", man)
    report = {"sup_norm": sol.sup_norm, "fixed_point_residual": fixed_point_residual(sol, p, m),
              "pde_residual": pde_residual(sol, p, m), "slab_count": len(sol.slab_boundaries) - 1,
              "slabs": sol.slab_boundaries, "iterations": sol.iterations_per_slab}
    _write_json(out / "report.json", report)
    sol.to_csv(out / "solution.csv")
    print(f"slabs: {len(sol.slab_boundaries) - 1} at {sol.slab_boundaries}")
    print(f"iterations per slab: {sol.iterations_per_slab}")
    print(f"sup norm: {sol.sup_norm:.6g}")
    print(f"output: {out}")
    return EXIT_OK


def cmd_sweep(args):
    p = load_problem_arg(args.problem)
    m = _mollifier(args)
    grid = _grid_arg(args.eps_grid, analysis.DEFAULT_SWEEP_GRID)
    rep = analysis.sweep_solve(p, m, grid, args.nx, args.nt, args.tol, args.max_iter, jobs=args.jobs)
    out = _out_dir(args, "sweep", p.name)
    man = _common_manifest(args, "sweep")
    man.update(problem=p.to_dict(), eps_grid=grid, nx=args.nx, nt=args.nt, tol=args.tol, max_iter=args.max_iter)
    _write_json(out / "manifest.json", man)
    (out / "report.json").write_text(rep.to_json() + "\n")
    rep.to_csv(out / "sweep.csv")
    failed = [r["eps"] for r in rep.records if r["status"] != "ok"]
    print(f"fitted slope: {rep.fitted_slope:.4f} (r2 {rep.regression_r2:.6f}), N = {rep.N}")
    print(f"verdict: {'moderate-empirically' if rep.moderate else 'not-moderate-empirically'}")
    print(f"output: {out}")
    if failed:
        print(f"solver failed at eps {failed}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK if rep.moderate else EXIT_VERDICT


ASSOCIATION_TESTS = (gf.TestFunction(0.0, 0.8), gf.TestFunction(0.1, 0.8), gf.TestFunction(-0.1, 0.9, (1.0, 0.0, 1.0)))


def _estimate_subject(args):
    """Representative, target distribution, name and profile for ``estimate``."""
    if args.example1:
        if args.m is None or args.m < 0:
            raise UsageError("--example1 needs --m >= 0")
        profile = build_nonnegative_profile()
        r = gf.example1_representative(args.m, profile)
        return r, gf.DeltaDerivative(args.m), f"example1-m{args.m}", profile
    if args.spec is None and args.expr is None:
        raise UsageError("give --example1, --spec JSON or --expr EXPR")
    try:
        spec = gf.spec_from_dict(json.loads(args.spec)) if args.spec else gf.Smooth(args.expr)
        r = gf.regularize(spec, ("x",))
        r(scale(build_mollifier(0), 0.5), np.zeros(1))  # surface expression errors now
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid representative: {exc}") from None
    name = "expr" if args.expr else "spec"
    return r, spec, name, None


def cmd_estimate(args):
    r, target, name, profile = _estimate_subject(args)
    m = profile if profile is not None else _mollifier(args)
    K = tuple(args.K)
    out = _out_dir(args, "estimate", f"{args.kind}-{name}")
    man = _common_manifest(args, "estimate")
    man.update(kind=args.kind, subject=name, K=K, alpha=args.alpha, mollifier_used=m.ident,
               spec=None if args.example1 else target.to_dict())
    try:
        if args.kind == "moderate":
            grid = _grid_arg(args.eps_grid, gf.geometric_grid(1e-1, 1e-4, 8))
            rep = gf.check_moderateness(r, K, args.alpha, grid, m)
            rep.to_csv(out / "report.csv")
            report, passed = rep.to_dict(), rep.passed
            print(f"fitted exponent: {rep.fitted_exponent:.4f}; verdict: {rep.verdict}")
        elif args.kind == "invertible":
            grid = _grid_arg(args.eps_grid, gf.geometric_grid(1e-1, 1e-4, 8))
            exponent = 2.0 if args.example1 else args.exponent
            rep = gf.check_invertibility(r, K, grid, m, exponent)
            rep.to_csv(out / "report.csv")
            report, passed = rep.to_dict(), rep.passed
            bound = f"eps^{rep.details.get('bound_exponent', float('nan')):g}"
            print(f"inf >= {bound} at every grid eps: {passed}; verdict: {rep.verdict}")
        elif args.kind == "associate":
            grid = _grid_arg(args.eps_grid, gf.geometric_grid(1e-1, 1e-4, 8))
            if not args.example1:
                if args.target is None:
                    raise UsageError("--kind associate needs --target JSON (or --example1)")
                target = gf.spec_from_dict(json.loads(args.target))
            rows = gf.check_association(r, target, ASSOCIATION_TESTS, grid, m)
            report = {"rows": [row.__dict__ for row in rows], "target": target.to_dict()}
            passed = all(row.converged for row in rows)
            for row in rows:
                print(f"{row.test_function}: rate {row.rate:.3f}, monotone {row.monotone}, converged {row.converged}")
        elif args.kind == "gamma":
            grid = _grid_arg(args.eps_grid, gf.geometric_grid(1e-3, 1e-6, 6))
            cls = gf.GammaClass(args.gamma_class)
            rep = gf.check_moderateness(r, K, args.alpha, grid, m)
            chk = gf.check_gamma_class(rep, cls, "growth")
            report, passed = {"growth": rep.to_dict(), "gamma_check": chk.to_dict()}, chk.passed
            print(f"{cls.variant}-growth: {'N = ' + str(chk.exponent) if chk.passed else 'fails for all N <= 12'}")
        else:  # pragma: no cover - argparse restricts choices
            raise UsageError(f"unknown kind {args.kind}")
    except gf.EstimateError as exc:
        raise UsageError(str(exc)) from None
    man["eps_grid"] = grid
    _write_json(out / "manifest.json", man)
    _write_json(out / "report.json", report)
    print(f"output: {out}")
    return EXIT_OK if passed else EXIT_VERDICT


# --------------------------------------------------------------------------
# parser


def build_parser():
    ap = argparse.ArgumentParser(prog="colombeau", description="Generalized-function mixed problems: validate, solve, sweep, estimate.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=int, default=2, help="mollifier order (default 2)")
    common.add_argument("--support-radius", type=_positive, default=1.0)
    common.add_argument("--sharpness", type=_positive, default=1.0)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="out", help="output root (default ./out)")
    common.add_argument("--name", help="output subdirectory name (default: problem or subject name)")
    common.add_argument("--eps-grid", nargs=3, type=float, metavar=("START", "STOP", "COUNT"),
                        help="geometric eps grid")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="check the problem assumptions")
    v.add_argument("problem", help="problem JSON file or built-in name")
    v.set_defaults(func=cmd_validate)

    solve_opts = argparse.ArgumentParser(add_help=False)
    solve_opts.add_argument("--nx", type=int, default=201)
    solve_opts.add_argument("--nt", type=int, default=201)
    solve_opts.add_argument("--tol", type=_positive, default=1e-12)
    solve_opts.add_argument("--max-iter", type=int, default=100)

    s = sub.add_parser("solve", parents=[common, solve_opts], help="solve at one eps")
    s.add_argument("problem")
    s.add_argument("--eps", type=_positive, required=True)
    s.add_argument("--skip-validate", action="store_true")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", parents=[common], help="solve across an eps grid and fit the growth")
    w.add_argument("problem")
    w.add_argument("--nx", type=int, default=None, help="x points (default: from the h <= eps*r/8 rule)")
    w.add_argument("--nt", type=int, default=11)
    w.add_argument("--tol", type=_positive, default=1e-12)
    w.add_argument("--max-iter", type=int, default=100)
    w.add_argument("--jobs", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    e = sub.add_parser("estimate", parents=[common], help="run a generalized-function estimator")
    e.add_argument("--kind", choices=["moderate", "invertible", "associate", "gamma"], required=True)
    e.add_argument("--example1", action="store_true", help="use the delta-inversion example representative")
    e.add_argument("--m", type=int, help="derivative order for --example1")
    e.add_argument("--spec", help="distribution spec as JSON")
    e.add_argument("--expr", help="smooth expression in x")
    e.add_argument("--target", help="target distribution spec (JSON) for --kind associate")
    e.add_argument("--K", nargs=2, type=float, default=[-1.0, 1.0], metavar=("A", "B"))
    e.add_argument("--alpha", type=int, default=0)
    e.add_argument("--exponent", type=float, default=None, help="fixed invertibility bound exponent")
    e.add_argument("--gamma-class", choices=["gamma", "gamma1", "power"], default="gamma")
    e.set_defaults(func=cmd_estimate)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
