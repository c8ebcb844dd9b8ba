"""Command line entry point: ``g2sym <command> ...``."""

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import fhn_structure as fhn
from . import multimoment as mm
from . import tracer
from . import trisymplectic as tri
from .errors import G2SymError
from .g2_linear import tables_csv

_DIAGRAMS = {"delta": "Delta_SU2", "one-su2": "One_x_SU2", "none": "NoSingularOrbit"}


def _floats(text, count=None):
    vals = [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    if count is not None and len(vals) != count:
        raise argparse.ArgumentTypeError(f"expected {count} numbers, got {len(vals)}")
    return vals


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment, dashes and underscores are equivalent."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


# -- solve-fhn -----------------------------------------------------------------

def _params(diagram, c1, c2, r0):
    if diagram.startswith("kmn"):
        _, _, mn = diagram.partition(":")
        m, n = (int(x) for x in mn.split(","))
        return fhn.FHNParams.kmn(m, n, 1.0 if r0 is None else r0)
    if diagram not in _DIAGRAMS:
        raise ValueError(f"unknown diagram {diagram!r}")
    return fhn.FHNParams(c1, c2, _DIAGRAMS[diagram])


def _solve(args):
    params = _params(args.diagram, args.c1, args.c2, args.r0)
    if params.diagram == "NoSingularOrbit":
        if None in (args.a0, args.b0, args.adot0, args.bdot0):
            raise ValueError("diagram none needs --a0 --b0 --adot0 --bdot0")
        start = fhn.FHNState(args.t0, args.a0, args.b0, args.adot0 * args.bdot0, args.adot0 ** 2)
        return fhn.integrate(params, start, args.t_end, args.tol)
    alpha = args.alpha
    if alpha is not None and params.diagram == "One_x_SU2" and len(alpha) == 2:
        alpha = tuple(alpha)
    elif alpha is not None:
        alpha = alpha[0]
    return fhn.solve_from_singular_orbit(params, args.t_end, alpha, args.epsilon, args.tol)


def write_solution_csv(solution, fh):
    p = solution.params
    fh.write(f"# c1={p.c1!r},c2={p.c2!r},diagram={p.diagram},m={p.m},n={p.n},r0={p.r0!r},"
             f"singular_orbit={int(solution.from_singular_orbit)}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t", "a", "b", "adot", "bdot", "H", "Lambda"])
    h = solution.hamiltonian_samples()
    lam = fhn._lambda_array(solution.ys[:, 0], solution.ys[:, 1], p)
    adot = np.sqrt(solution.ys[:, 3])
    bdot = solution.ys[:, 2] / adot
    for k, t in enumerate(solution.ts):
        writer.writerow([repr(float(x)) for x in (t, solution.ys[k, 0], solution.ys[k, 1],
                                                   adot[k], bdot[k], h[k], lam[k])])


def read_solution_csv(path):
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("solution file lacks the parameter line")
        meta = dict(kv.split("=", 1) for kv in header[1:].strip().split(","))
        rows = list(csv.DictReader(fh))
    m, n = int(meta.get("m", 0)), int(meta.get("n", 0))
    params = fhn.FHNParams(float(meta["c1"]), float(meta["c2"]), meta["diagram"], m, n,
                           float(meta.get("r0", 0.0)))
    col = {k: np.array([float(r[k]) for r in rows]) for k in ("t", "a", "b", "adot", "bdot")}
    return fhn.solution_from_nodes(params, col["t"], col["a"], col["b"], col["adot"], col["bdot"],
                                   bool(int(meta.get("singular_orbit", 0))))


def config_argv(path):
    """Flags equivalent to a config file; placed first so explicit flags win."""
    out = []
    for key, value in read_config(path).items():
        out += ["--" + key.replace("_", "-"), value]
    return out


def cmd_solve_fhn(args):
    sol = _solve(args)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        write_solution_csv(sol, out)
    finally:
        if args.out:
            out.close()
    if sol.cone_exit is not None:
        print(f"cone exit at t = {sol.cone_exit}", file=sys.stderr)
    return 0


# -- moments -------------------------------------------------------------------

def _load(args):
    if getattr(args, "solution", None):
        return read_solution_csv(args.solution)
    return fhn.bryant_salamon_solution(args.bs_c, args.r_max)


def cmd_moments(args):
    sol = _load(args)
    p = np.array(_floats(args.p, 4))
    q = np.array(_floats(args.q, 4))
    values = mm.moment_values_at(p, q, args.t, sol)
    print(json.dumps(values.to_dict()))
    return 0


# -- tracer --------------------------------------------------------------------

def cmd_trace(args):
    sol = _load(args)
    if args.kind == "assoc":
        curves = tracer.trace_associative(sol, args.level, model=args.model)
    else:
        curves = tracer.trace_coassociative(sol, args.level, model=args.model)
    sys.stdout.write(tracer.levelsets_csv(curves))
    for cid, c in enumerate(curves):
        label = f" topology={c.topology}" if c.topology else ""
        print(f"curve {cid}: endpoints={','.join(c.endpoints)}{label}", file=sys.stderr)
    return 0


def _restricted(sol, args):
    if args.r_min is None:
        return sol
    return sol.restrict(sol.t_at_radius(args.r_min), sol.t_max)


def cmd_fibration(args):
    sol = _restricted(_load(args), args)
    res = tracer.alpha_fibration_test(sol, model=args.model)
    print(json.dumps({"verdict": res.verdict, "u_minus": res.u_minus, "u_plus": res.u_plus,
                      "v_minus": res.v_minus, "v_plus": res.v_plus,
                      "jacobian_min": res.jacobian_min}))
    return 0


def cmd_render(args):
    sol = _load(args)
    mu = _floats(args.mu_levels) if args.mu_levels else []
    nu = _floats(args.nu_levels) if args.nu_levels else []
    res = tracer.render_levelsets(sol, mu, nu, args.csv, args.svg, model=args.model)
    for s in res.singular_fibres:
        print("singular fibre " + ",".join(f"{x:.12g}" for x in s.target), file=sys.stderr)
    return 0


# -- tau-flow ------------------------------------------------------------------

_SAFE = {name: getattr(np, name) for name in ("sin", "cos", "tan", "exp", "log", "sqrt",
                                              "sinh", "cosh", "tanh", "arctan")}
_SAFE["pi"] = math.pi


def _expression(text):
    """Compile an expression in ``R``; the derivative uses a complex step."""
    code = compile(text, "<T>", "eval")
    for name in code.co_names:
        if name != "R" and name not in _SAFE:
            raise ValueError(f"name {name!r} not allowed in T expression")

    def value(R):
        return eval(code, {"__builtins__": {}}, dict(_SAFE, R=R))

    def derivative(R, h=1e-30):
        return float(np.imag(value(complex(R, h))) / h)

    return (lambda R: float(np.real(value(R)))), derivative


def parse_T(spec):
    """``identity``, ``scaled:<expr in R>`` or a file with four expressions (T11 T12 T21 T22)."""
    if spec == "identity":
        return tri.TMatrixPath.identity()
    if spec.startswith("scaled:"):
        s, ds = _expression(spec[len("scaled:"):])
        return tri.TMatrixPath.scaled(s, ds)
    path = spec[len("file:"):] if spec.startswith("file:") else spec
    with open(path) as fh:
        exprs = [line.strip() for line in fh if line.strip() and not line.startswith("#")]
    if len(exprs) != 4:
        raise ValueError("T file needs four expressions: T11, T12, T21, T22")
    funcs = [_expression(e) for e in exprs]
    return tri.TMatrixPath(lambda R: np.array([[f(R) for f, _ in funcs[:2]],
                                               [f(R) for f, _ in funcs[2:]]]),
                           lambda R: np.array([[d(R) for _, d in funcs[:2]],
                                               [d(R) for _, d in funcs[2:]]]), "file")


def cmd_tau_flow(args):
    T = parse_T(args.T)
    tau0 = np.array(_floats(args.tau0, 9)).reshape(3, 3)
    traj = tri.integrate_tau(T, tau0, (args.R0, args.R1), args.tol)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["R"] + [f"tau{i}{j}" for i in range(1, 4) for j in range(1, 4)]
                    + ["det_tau", "closedness_residual"])
    h = args.h
    for R, tau in zip(traj.Rs, traj.taus):
        if traj.R_min <= R - h and R + h <= traj.R_max:
            res = max(tri.closedness_residual_triple(traj, i, R, h) for i in range(3))
        else:
            res = float("nan")
        writer.writerow([repr(float(R))] + [repr(float(x)) for x in tau.ravel()]
                        + [repr(float(np.linalg.det(tau))), repr(float(res))])
    if traj.singular_R is not None:
        print(f"tau degenerates near R = {traj.singular_R}", file=sys.stderr)
    return 0


def cmd_tables(args):
    sys.stdout.write(tables_csv())
    return 0


# -- parser --------------------------------------------------------------------

def _add_source(p):
    p.add_argument("--solution", help="CSV written by solve-fhn (default: Bryant-Salamon)")
    p.add_argument("--bs-c", type=float, default=1.0)
    p.add_argument("--r-max", type=float, default=5.0)
    p.add_argument("--model", choices=("fhn", "bs"), default="fhn")


def build_parser():
    parser = argparse.ArgumentParser(prog="g2sym", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-g2-tables", help="print the standard form coefficients")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("solve-fhn", help="integrate the FHN system to CSV")
    p.add_argument("--config", help="key = value file mirroring these flags; flags win")
    p.add_argument("--c1", type=float, default=None)
    p.add_argument("--c2", type=float, default=None)
    p.add_argument("--diagram", default="none", help="delta | one-su2 | kmn:m,n | none")
    p.add_argument("--r0", type=float, default=None)
    p.add_argument("--alpha", type=_floats, default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--a0", type=float, default=None)
    p.add_argument("--b0", type=float, default=None)
    p.add_argument("--adot0", type=float, default=None)
    p.add_argument("--bdot0", type=float, default=None)
    p.add_argument("--t-end", type=float, default=5.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve_fhn)

    p = sub.add_parser("moments", help="multi-moment maps at one point")
    _add_source(p)
    p.add_argument("--p", required=True, help="unit quaternion w,x,y,z")
    p.add_argument("--q", required=True, help="unit quaternion w,x,y,z")
    p.add_argument("--t", type=float, required=True)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("trace", help="trace one level set on the quotient")
    _add_source(p)
    p.add_argument("--kind", choices=("assoc", "coassoc"), required=True)
    p.add_argument("--level", type=float, required=True)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("fibration-test", help="alpha-map fibration dichotomy")
    _add_source(p)
    p.add_argument("--r-min", type=float, default=None,
                   help="truncate a Bryant-Salamon run below this radius")
    p.set_defaults(func=cmd_fibration)

    p = sub.add_parser("render", help="CSV and SVG of both level-set families")
    _add_source(p)
    p.add_argument("--mu-levels", default="")
    p.add_argument("--nu-levels", default="")
    p.add_argument("--svg")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("tau-flow", help="integrate the tau matrix ODE")
    p.add_argument("--T", default="identity", help="identity | scaled:<expr in R> | file")
    p.add_argument("--tau0", required=True, help="nine numbers, row major")
    p.add_argument("--R0", type=float, required=True)
    p.add_argument("--R1", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--h", type=float, default=1e-4, help="step of the closedness check")
    p.set_defaults(func=cmd_tau_flow)

    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if argv[:1] == ["solve-fhn"] and "--config" in argv:
            k = argv.index("--config")
            argv = ["solve-fhn"] + config_argv(argv[k + 1]) + argv[1:k] + argv[k + 2:]
        args = parser.parse_args(argv)
        return args.func(args)
    except (G2SymError, ValueError, OSError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
