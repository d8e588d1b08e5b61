"""Command-line front door: thin dispatch over the library.

Subcommands: indices, conjugate, norm, check, rim, solve.  Problem runs are
driven by flat key-value config files with sections (INI); all numeric output
is full double precision and locale independent.

Exit codes: 0 success, 1 error (bad config, unknown names), 2 when the
hypothesis check ran cleanly but no theorem inequality holds.

The output directory can be overridden with the ORLICZMP_OUT environment
variable.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
from pathlib import Path

import numpy as np

from . import gfunction as gf
from . import orlicz_space as osp
from .functional import ProblemError, builtin_problem, el_residual, registered_problems
from .hypotheses import check_all
from .mountain_pass import MountainPassConfig, certify, solve, verify_rim
from .orlicz_space import PeriodicGridFunction


class CliError(Exception):
    pass


def _parse_gspec(text: str) -> gf.GFunctionSpec:
    name, _, rest = text.partition(":")
    params = [float(p) for p in rest.split(",") if p] if rest else []
    try:
        return gf.make_gfunction(name, *params)
    except gf.GFunctionError as exc:
        raise CliError(str(exc)) from exc


def _sampling_from_args(args, g_name: str) -> gf.SamplingPlan:
    base = gf.recommended_plan(g_name)
    kwargs = {}
    for field in ("n_directions", "n_radii", "seed"):
        v = getattr(args, field, None)
        if v is not None:
            kwargs[field] = v
    for field in ("r_min", "r_max"):
        v = getattr(args, field, None)
        if v is not None:
            kwargs[field] = v
    import dataclasses
    return dataclasses.replace(base, **kwargs)


def _outdir(args) -> Path:
    env = os.environ.get("ORLICZMP_OUT")
    out = Path(env) if env else Path(getattr(args, "out", None) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

_PROBLEM_FLOAT_KEYS = {"T", "rho0", "f_amplitude", "lam", "f_power"}
_PROBLEM_INT_KEYS = {"N"}
_PROBLEM_STR_KEYS = {"a_form"}


def load_problem_config(path: str):
    """Parse a problem config; returns (ProblemSpec, m, solver config)."""
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys are case sensitive (T vs t)
    read = cp.read(path)
    if not read:
        raise CliError(f"config file not found: {path}")
    if "problem" not in cp:
        raise CliError("config missing required [problem] section")
    sec = cp["problem"]
    if "name" not in sec:
        raise CliError("config field missing: problem.name")
    name = sec["name"]
    if name not in registered_problems():
        raise CliError(f"unknown problem {name!r}; registered: "
                       f"{', '.join(registered_problems())}")
    params = {}
    m = 256
    for key, raw in sec.items():
        if key == "name":
            continue
        if key == "m":
            try:
                m = int(raw)
            except ValueError as exc:
                raise CliError(f"config field m must be an integer, got {raw!r}") from exc
            continue
        try:
            if key in _PROBLEM_INT_KEYS:
                params[key] = int(raw)
            elif key in _PROBLEM_STR_KEYS:
                params[key] = raw
            elif key in _PROBLEM_FLOAT_KEYS:
                params[key] = float(raw)
            else:
                raise CliError(f"unknown config field: problem.{key}")
        except ValueError as exc:
            raise CliError(f"config field problem.{key} has bad value {raw!r}") from exc
    try:
        prob = builtin_problem(name, **params)
    except (ProblemError, TypeError) as exc:
        raise CliError(f"bad problem parameters: {exc}") from exc

    cfg_kwargs = {}
    if "solver" in cp:
        ssec = cp["solver"]
        casts = {"path_points": int, "max_outer_iters": int, "rim_samples": int,
                 "seed": int, "descent_step0": float, "armijo_c": float,
                 "grad_tol": float, "xi_growth": float, "newton_tol": float,
                 "newton_max_iters": int}
        for key, raw in ssec.items():
            if key not in casts:
                raise CliError(f"unknown config field: solver.{key}")
            try:
                cfg_kwargs[key] = casts[key](raw)
            except ValueError as exc:
                raise CliError(f"config field solver.{key} has bad value {raw!r}") from exc
    cfg = MountainPassConfig(**cfg_kwargs)
    return prob, m, cfg


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_indices(args) -> int:
    g = _parse_gspec(args.g)
    plan = _sampling_from_args(args, g.name)
    idx = gf.simonenko_indices(g, plan)
    print(f"p_G = {idx.p_g!r}")
    print(f"q_G = {idx.q_g!r}")
    print(f"q_G_inf = {idx.q_g_inf!r}")
    if idx.stabilization_warning:
        print("warning = outer shells did not stabilize")
    if args.out:
        (_outdir(args) / "indices.txt").write_text(idx.to_text())
    return 0


def _cmd_conjugate(args) -> int:
    g = _parse_gspec(args.g)
    y = np.array([float(v) for v in args.y.split(",")])
    if len(y) != g.dim:
        raise CliError(f"--y needs {g.dim} components for {g.label()}")
    opts = gf.ConjugateOpts(tol=args.tol)
    val = gf.fenchel_conjugate(g, y, opts)
    print(repr(val))
    return 0


def _cmd_norm(args) -> int:
    g = _parse_gspec(args.g)
    if (args.const is None) == (args.csv is None):
        raise CliError("provide exactly one of --const or --csv")
    if args.csv is not None:
        u = osp.read_csv(args.csv)
    else:
        vals = np.full((args.m, g.dim), args.const)
        u = PeriodicGridFunction(args.T, vals)
    if args.which == "luxemburg":
        val = osp.luxemburg_norm(g, u)
    elif args.which == "sobolev":
        val = osp.sobolev_norm(g, u)
    else:
        val = osp.joint_norm(g, u)
    print(repr(val))
    return 0


def _cmd_check(args) -> int:
    prob, m, _ = load_problem_config(args.problem)
    if args.residual:
        u = osp.read_csv(args.residual)
        if u.dim != prob.N + prob.N:
            # solution CSVs carry (u, du); plain grid CSVs carry u only
            if u.dim != prob.N:
                raise CliError(f"residual CSV has {u.dim} columns, expected "
                               f"{prob.N} (u) or {2 * prob.N} (u, du)")
            uu = u
        else:
            uu = PeriodicGridFunction(u.T, u.values[:, :prob.N])
        print(f"el_residual = {el_residual(prob, uu)!r}")
        return 0
    report = check_all(prob, m=m)
    text = report.to_text()
    print(text, end="")
    if args.out:
        (_outdir(args) / "hypothesis_report.txt").write_text(text)
    return 0 if report.theorem_passes else 2


def _cmd_rim(args) -> int:
    prob, m, cfg = load_problem_config(args.problem)
    if args.seed is not None:
        import dataclasses
        cfg = dataclasses.replace(cfg, seed=args.seed)
    rho = prob.rho0 / osp.embedding_constant(prob.G, prob.T)
    rim = verify_rim(prob, rho, cfg, m)
    text = rim.to_text()
    print(text, end="")
    if args.out:
        (_outdir(args) / "rim_report.txt").write_text(text)
    return 0


def _cmd_solve(args) -> int:
    prob, m, cfg = load_problem_config(args.problem)
    if args.m:
        m = args.m
    if args.seed is not None:
        import dataclasses
        cfg = dataclasses.replace(cfg, seed=args.seed)
    report = solve(prob, cfg, m=m)
    out = _outdir(args)
    text = report.to_text()
    (out / "solve_report.txt").write_text(text)
    du = osp.derivative(report.u_star)
    header = ("t," + ",".join(f"u{j + 1}" for j in range(prob.N))
              + "," + ",".join(f"du{j + 1}" for j in range(prob.N)))
    data = np.column_stack([report.u_star.nodes, report.u_star.values, du.values])
    np.savetxt(out / "solution.csv", data, delimiter=",", header=header,
               comments="", fmt="%.17g")
    cert = certify(prob, report.u_star, refine=not args.no_refine)
    (out / "cert_report.txt").write_text(cert.to_text())
    print(text, end="")
    print(f"artifacts = {out / 'solve_report.txt'}, {out / 'solution.csv'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="orliczmp", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def add_sampling(p):
        p.add_argument("--n-directions", dest="n_directions", type=int)
        p.add_argument("--n-radii", dest="n_radii", type=int)
        p.add_argument("--r-min", dest="r_min", type=float)
        p.add_argument("--r-max", dest="r_max", type=float)
        p.add_argument("--seed", type=int)

    p = sub.add_parser("indices", help="Simonenko-type growth indices of a G-function")
    p.add_argument("--g", required=True, help="registry name, e.g. power:2 or example1")
    p.add_argument("--out")
    add_sampling(p)
    p.set_defaults(fn=_cmd_indices)

    p = sub.add_parser("conjugate", help="Fenchel conjugate value at a point")
    p.add_argument("--g", required=True)
    p.add_argument("--y", required=True, help="comma-separated point")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(fn=_cmd_conjugate)

    p = sub.add_parser("norm", help="Luxemburg / Sobolev / joint norm of a grid function")
    p.add_argument("--g", required=True)
    p.add_argument("--const", type=float, help="constant function value")
    p.add_argument("--csv", help="grid function CSV (t, u1..uN)")
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--m", type=int, default=256)
    p.add_argument("--which", choices=["luxemburg", "sobolev", "joint"],
                   default="luxemburg")
    p.set_defaults(fn=_cmd_norm)

    p = sub.add_parser("check", help="hypothesis and theorem checks for a problem")
    p.add_argument("--problem", required=True, help="problem config file")
    p.add_argument("--residual", help="recompute the residual of a solution CSV")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("rim", help="rim lower bound and sampled rim minimum")
    p.add_argument("--problem", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=_cmd_rim)

    p = sub.add_parser("solve", help="mountain-pass solve with artifacts")
    p.add_argument("--problem", required=True)
    p.add_argument("--out")
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-refine", action="store_true",
                   help="skip the mesh-refinement certificate")
    p.set_defaults(fn=_cmd_solve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CliError, gf.GFunctionError, ProblemError, osp.SpaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
