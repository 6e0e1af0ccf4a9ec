"""Command-line frontend: ``heis <command> [options]``.

Output is CSV (header row then data rows) or one JSON object with "config", "results" and
"diagnostics". Exit status: 0 success, 1 invalid input or violated precondition,
2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import fields as F
from .core import GeometryError, Point, gauge_distance
from .defaults import default, defaults_table
from .domains import CATALOG, make_domain
from .hyperplanes import (QuasiSegmentPath, VerticalHyperplane, characteristic_projection,
                          characteristic_tangent_ball, characteristic_tangent_center,
                          vertical_projection, vertical_segment, vertical_tangent_center)
from .potentials import (PExponent, SigmaP, estimate_omega_p, gamma_p, p_laplacian_residual,
                         ring_barrier)
from .serialize import Scalar, Table, to_jsonable
from .solver import ConvergenceError, boundary_field, build_domain, node_rows, solve_dirichlet
from .verify import characteristic_points, comparison_ratio, decay_profile


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def parse_reals(text: str, what: str = "value") -> list:
    try:
        vals = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        raise CliError(f"malformed number in {what}: {text!r}")
    if not vals or not all(np.isfinite(vals)):
        raise CliError(f"{what} must be a comma-separated list of finite reals")
    return vals


def parse_point(text: str, what: str = "point") -> Point:
    vals = parse_reals(text, what)
    if len(vals) < 3 or len(vals) % 2 == 0:
        raise CliError(f"{what} needs 2n+1 coordinates z1..z2n,t; got {len(vals)}")
    return Point.from_array(vals)


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def point_columns(prefix: str, n: int) -> list:
    return [f"{prefix}z{i + 1}" for i in range(2 * n)] + [f"{prefix}t"]


def _seed(args) -> int:
    env = os.environ.get("HEIS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"HEIS_SEED must be an integer, got {env!r}")
    return args.seed


def _check_n(args, *pts):
    for p in pts:
        if args.n is not None and p.n != args.n:
            raise CliError(f"point has {2 * p.n + 1} coordinates, which does not match --n {args.n}")
    if len({p.n for p in pts}) > 1:
        raise CliError("points live in different dimensions")


# commands return (table, results, diagnostics)

def cmd_dist(args):
    g, h = parse_point(args.g, "--g"), parse_point(args.h, "--h")
    _check_n(args, g, h)
    d = gauge_distance(g, h)
    return Table(["distance"], [[d]]), Scalar("distance", d), {}


def cmd_project(args):
    g = parse_point(args.g, "--g")
    if args.char:
        mf = characteristic_projection(g)
    else:
        if args.omega is None:
            raise CliError("project needs --char or --omega")
        mf = vertical_projection(g, VerticalHyperplane.normalized(parse_reals(args.omega, "--omega")))
    cols = point_columns("foot_", g.n) + ["distance", "lambda"]
    return Table(cols, [mf.foot.to_list() + [mf.distance, mf.lam]]), mf, {}


def cmd_tangent_ball(args):
    g = parse_point(args.g, "--g")
    if args.kind == "vertical":
        if args.omega is None or args.lam is None:
            raise CliError("vertical tangent ball needs --omega and --lam")
        tb = vertical_tangent_center(g, VerticalHyperplane.normalized(parse_reals(args.omega, "--omega")), args.lam)
    elif args.kind == "char":
        tb = characteristic_tangent_ball(g)
    else:
        if args.lam is None:
            raise CliError("tangent family needs --lam")
        tb = characteristic_tangent_center(g, args.lam)
    cols = point_columns("center_", g.n) + ["radius"] + point_columns("touch_", g.n)
    return Table(cols, [tb.center.to_list() + [tb.radius] + tb.touch.to_list()]), tb, {}


def cmd_path(args):
    g = parse_point(args.g, "--g")
    lams = parse_reals(args.lam, "--lam")
    rows = []
    if args.kind == "vertical":
        if args.omega is None:
            raise CliError("vertical path needs --omega")
        P = VerticalHyperplane.normalized(parse_reals(args.omega, "--omega"))
        foot = vertical_projection(g, P).foot
        pts = [vertical_segment(g, P, lam) for lam in lams]
    else:
        path = QuasiSegmentPath.through(g)
        foot = path.foot()
        if any(lam < 0 for lam in lams):
            raise CliError("path parameters must be nonnegative")
        pts = [path.point(lam) for lam in lams]
    for lam, q in zip(lams, pts):
        rows.append([lam] + q.to_list() + [gauge_distance(q, foot), gauge_distance(q, g)])
    cols = ["lambda"] + point_columns("", g.n) + ["dist_foot", "dist_g"]
    return Table(cols, rows), Table(cols, rows), {"foot": foot.to_list()}


def _sigma(args, pe: PExponent, seed: int) -> SigmaP:
    if args.omega_p is not None:
        return SigmaP.from_omega(args.omega_p, pe.Q)
    return estimate_omega_p(pe, args.samples, seed)


def cmd_gamma(args):
    g, h = parse_point(args.g, "--g"), parse_point(args.h, "--h")
    _check_n(args, g, h)
    pe = PExponent(args.p, g.n)
    sp = _sigma(args, pe, _seed(args))
    val = gamma_p(g, h, pe, sp)
    return (Table(["gamma", "omega_p", "sigma_p"], [[val, sp.omega_p, sp.sigma_p]]), Scalar("gamma", val),
            {"omega_p": sp.omega_p, "sigma_p": sp.sigma_p, "std_error": sp.std_error})


def cmd_barrier(args):
    g = parse_point(args.g, "--g")
    c = parse_point(args.center, "--center") if args.center else Point.identity(g.n)
    _check_n(args, g, c)
    val = ring_barrier(g, c, args.r_in, args.r_out, PExponent(args.p, g.n))
    return Table(["barrier"], [[val]]), Scalar("barrier", val), {}


def _point_field(name: str, pe: PExponent, args, seed: int):
    n = pe.n
    if name == "t":
        return lambda q: q.t
    if name == "linear":
        w = np.asarray(parse_reals(args.omega, "--omega")) if args.omega else np.eye(2 * n)[0]
        return lambda q: float(np.dot(q.z, w))
    if name == "gamma":
        sp = _sigma(args, pe, seed)
        e = Point.identity(n)
        return lambda q: gamma_p(q, e, pe, sp)
    if name == "barrier":
        e = Point.identity(n)
        return lambda q: ring_barrier(q, e, args.r_in, args.r_out, pe)
    raise CliError(f"unknown field {name!r}")


def cmd_residual(args):
    g = parse_point(args.g, "--g")
    pe = PExponent(args.p, g.n)
    f = _point_field(args.field, pe, args, _seed(args))
    steps = parse_reals(args.steps, "--steps")
    rows, prev = [], None
    for s in steps:
        r = p_laplacian_residual(f, g, s, pe)
        order = np.log(abs(prev[1]) / abs(r)) / np.log(prev[0] / s) if prev and r != 0 and prev[1] != 0 else float("nan")
        rows.append([s, r, order])
        prev = (s, r)
    cols = ["step", "residual", "observed_order"]
    return Table(cols, rows), Table(cols, rows), {}


def _domain(args):
    params = parse_reals(args.params, "--params") if args.params else []
    return make_domain(args.domain, params)


def _array_field(name: str, D, pe: PExponent, args):
    """Boundary data / exact fields on stacked coordinates."""
    if name == "t":
        return F.t_field()
    if name == "linear":
        w = parse_reals(args.omega, "--omega") if args.omega else D.meta.get("omega", np.eye(2 * D.n)[0])
        return F.linear_field(w)
    if name == "constant":
        return F.constant_field(args.value)
    if name == "barrier":
        if "r_in" in D.meta:
            return F.barrier_field(D.meta["center"], D.meta["r_in"], D.meta["r_out"], pe)
        if args.r_in is None or args.r_out is None:
            raise CliError("barrier data off the gauge ring needs --r-in and --r-out")
        return F.barrier_field(Point.identity(D.n), args.r_in, args.r_out, pe)
    raise CliError(f"unknown field {name!r}")


def _solve(D, pe, args, data):
    G = build_domain(D, h=args.grid_h, t_ratio=args.t_ratio)
    return solve_dirichlet(G, boundary_field(G, data), pe, tol=args.tol, max_iter=args.max_iter,
                           delta=args.delta)


def cmd_solve(args):
    D = _domain(args)
    pe = PExponent(args.p, D.n)
    u = _solve(D, pe, args, _array_field(args.bc, D, pe, args))
    pts, vals, kinds = node_rows(u)
    rows = [[float(a), float(b), float(c), float(v), k] for (a, b, c), v, k in zip(pts, vals, kinds)]
    info = {k: v for k, v in u.info.items() if k != "energy_history"}
    cols = ["x", "y", "t", "value", "kind"]
    return Table(cols, rows), Table(cols, rows), info


def cmd_charset(args):
    D = _domain(args)
    pts = characteristic_points(D, args.mesh, args.tol)
    cols = point_columns("", D.n)
    return Table(cols, [q.to_list() for q in pts]), list(pts), {"count": len(pts)}


def _profile_field(name: str, D, pe, args):
    if name == "solve":
        return _solve(D, pe, args, _array_field(args.bc, D, pe, args))
    return _array_field(name, D, pe, args)


def cmd_decay(args):
    D = _domain(args)
    pe = PExponent(args.p, D.n)
    g0 = parse_point(args.g0, "--g0")
    u = _profile_field(args.field, D, pe, args)
    prof = decay_profile(u, D, g0, args.r, M=args.M, count=args.count, kappa=args.kappa, mode=args.mode,
                         anchor_depth=args.anchor_depth * args.r, seed=_seed(args),
                         diagnostic=args.diagnostic)
    spread = float(np.max(prof.ratio / prof.d_over_r) / np.min(prof.ratio / prof.d_over_r))
    prof.meta.update(p=args.p, spread=spread)
    diag = {"domain": D.domain_id, "p": args.p, "g0": g0.to_list(), "r": args.r,
            "exponent": prof.exponent, "spread": spread}
    return Table(["d_over_r", "ratio"], prof.rows()), prof, diag


def cmd_compare(args):
    D = _domain(args)
    pe = PExponent(args.p, D.n)
    g0 = parse_point(args.g0, "--g0")
    u = _profile_field(args.u, D, pe, args)
    v = u if args.v == args.u else _profile_field(args.v, D, pe, args)
    v = F.scaled(_as_array_field(v), args.v_scale) if args.v_scale != 1.0 else v
    rep = comparison_ratio(u, v, D, g0, args.r, count=args.count, kappa=args.kappa, mode=args.mode,
                           anchor_depth=args.anchor_depth * args.r, seed=_seed(args), M=args.M,
                           diagnostic=args.diagnostic)
    diag = {"domain": D.domain_id, "p": args.p, "g0": g0.to_list(), "r": args.r,
            "min_ratio": rep.min_ratio, "max_ratio": rep.max_ratio, "spread": rep.spread}
    rows = list(zip(rep.d_over_r.tolist(), rep.ratio.tolist()))
    return Table(["d_over_r", "ratio"], rows), rep, diag


def _as_array_field(u):
    from .verify import field_values
    return F.vectorized(lambda a: field_values(u, a))


def cmd_omegap(args):
    pe = PExponent(args.p, args.n or 1)
    sp = estimate_omega_p(pe, args.samples, _seed(args))
    return (Table(["omega_p", "sigma_p", "std_error"], [[sp.omega_p, sp.sigma_p, sp.std_error]]), sp,
            {"samples": args.samples})


COMMANDS = {
    "dist": cmd_dist, "project": cmd_project, "tangent-ball": cmd_tangent_ball, "path": cmd_path,
    "gamma": cmd_gamma, "barrier": cmd_barrier, "residual": cmd_residual, "solve": cmd_solve,
    "charset": cmd_charset, "decay": cmd_decay, "compare": cmd_compare, "omegap": cmd_omegap,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--output", default=None, help="write here instead of stdout")
    common.add_argument("--seed", type=int, default=default("seed"))
    common.add_argument("--n", type=int, default=None, help="expected H^n dimension")

    grid = _Parser(add_help=False)
    grid.add_argument("--grid-h", "--h", dest="grid_h", type=float, default=default("h"))
    grid.add_argument("--t-ratio", type=float, default=default("t_ratio"))
    grid.add_argument("--tol", type=float, default=default("tol"))
    grid.add_argument("--max-iter", type=int, default=default("max_iter"))
    grid.add_argument("--delta", type=float, default=default("delta"))

    dom = _Parser(add_help=False)
    dom.add_argument("--domain", required=True, choices=CATALOG)
    dom.add_argument("--params", default="")

    fieldopts = _Parser(add_help=False)
    fieldopts.add_argument("--p", type=float, default=2.0)
    fieldopts.add_argument("--omega", default=None)
    fieldopts.add_argument("--r-in", type=float, default=None)
    fieldopts.add_argument("--r-out", type=float, default=None)
    fieldopts.add_argument("--value", type=float, default=1.0)
    fieldopts.add_argument("--bc", default="barrier", choices=["barrier", "linear", "t", "constant"])

    prof = _Parser(add_help=False)
    prof.add_argument("--g0", required=True)
    prof.add_argument("--r", type=float, required=True)
    prof.add_argument("--M", type=float, default=default("M"))
    prof.add_argument("--kappa", type=float, default=default("kappa"))
    prof.add_argument("--count", type=int, default=default("decay_count"))
    prof.add_argument("--mode", choices=["cone", "normal"], default="cone")
    prof.add_argument("--anchor-depth", type=float, default=default("anchor_depth"),
                      help="depth of A_r on the inward normal, in units of r")
    prof.add_argument("--diagnostic", action="store_true",
                      help="allow r >= d(g0, characteristic set) / M")

    sigma = _Parser(add_help=False)
    sigma.add_argument("--omega-p", type=float, default=None, help="use this omega_p instead of estimating it")
    sigma.add_argument("--samples", type=int, default=default("omega_samples"))

    parser = _Parser(prog="heis", description=__doc__, epilog="defaults:\n" + defaults_table(),
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("dist", parents=[common], help="gauge distance between two points")
    s.add_argument("--g", required=True)
    s.add_argument("--h", required=True)

    s = sub.add_parser("project", parents=[common], help="metric projection onto a hyperplane")
    s.add_argument("--g", required=True)
    s.add_argument("--char", action="store_true", help="project onto t = 0")
    s.add_argument("--omega", default=None, help="normal of the vertical hyperplane")

    s = sub.add_parser("tangent-ball", parents=[common], help="tangent gauge balls")
    s.add_argument("--kind", choices=["vertical", "char", "family"], default="char")
    s.add_argument("--g", required=True)
    s.add_argument("--omega", default=None)
    s.add_argument("--lam", type=float, default=None)

    s = sub.add_parser("path", parents=[common], help="vertical segment or quasi-segment samples")
    s.add_argument("--kind", choices=["vertical", "quasi"], default="quasi")
    s.add_argument("--g", required=True)
    s.add_argument("--omega", default=None)
    s.add_argument("--lam", required=True, help="comma-separated path parameters")

    s = sub.add_parser("gamma", parents=[common, sigma], help="fundamental solution Gamma_p(g, h)")
    s.add_argument("--g", required=True)
    s.add_argument("--h", required=True)
    s.add_argument("--p", type=float, required=True)

    s = sub.add_parser("barrier", parents=[common], help="ring barrier value")
    s.add_argument("--g", required=True)
    s.add_argument("--center", default=None)
    s.add_argument("--r-in", type=float, required=True)
    s.add_argument("--r-out", type=float, required=True)
    s.add_argument("--p", type=float, required=True)

    s = sub.add_parser("residual", parents=[common, sigma], help="finite-difference p-Laplacian residual")
    s.add_argument("--field", choices=["t", "linear", "gamma", "barrier"], required=True)
    s.add_argument("--g", required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--omega", default=None)
    s.add_argument("--r-in", type=float, default=0.5)
    s.add_argument("--r-out", type=float, default=2.0)
    s.add_argument("--steps", default=",".join(str(v) for v in default("residual_steps")))

    sub.add_parser("solve", parents=[common, dom, fieldopts, grid], help="Dirichlet solve on a catalog domain")

    s = sub.add_parser("charset", parents=[common, dom], help="characteristic boundary points")
    s.add_argument("--mesh", type=float, default=default("charset_mesh"))
    s.add_argument("--tol", type=float, default=default("charset_tol"))

    s = sub.add_parser("decay", parents=[common, dom, fieldopts, grid, prof], help="boundary decay profile")
    s.add_argument("--field", choices=["t", "linear", "barrier", "solve"], required=True)

    s = sub.add_parser("compare", parents=[common, dom, fieldopts, grid, prof], help="boundary comparison ratios")
    s.add_argument("--u", choices=["t", "linear", "barrier", "solve"], required=True)
    s.add_argument("--v", choices=["t", "linear", "barrier", "solve"], default=None)
    s.add_argument("--v-scale", type=float, default=1.0)

    s = sub.add_parser("omegap", parents=[common], help="Monte Carlo omega_p and sigma_p")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--samples", type=int, default=default("omega_samples"))
    return parser


def render_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("output",)}
    cfg["seed"] = _seed(args)
    return cfg


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "command", None) == "compare" and args.v is None:
            args.v = args.u
        table, results, diag = COMMANDS[args.command](args)
        cfg = _config(args)
        if args.format == "json":
            text = json.dumps({"config": cfg, "results": to_jsonable(results),
                               "diagnostics": to_jsonable(diag)}, sort_keys=True) + "\n"
        else:
            text = render_csv(table)
            print("# config " + json.dumps(cfg, sort_keys=True), file=sys.stderr)
        if args.output:
            with open(args.output, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CliError, GeometryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
