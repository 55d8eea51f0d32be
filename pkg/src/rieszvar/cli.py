"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 divergent result under
``--require-finite``.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import jsonio
from .bvfunc import BVFunction, read_xy_csv
from .conditions import CONDITIONS, check_condition
from .errors import RieszVarError, SpecError
from .phi import Side, phi_from_dict
from .restore import RestoreConfig, Signal, minimize, trace_csv_text
from .variation import (
    DIVERGENT,
    classical_variation,
    dp_on_grid,
    limsup_variation,
    lphi_norm,
    rbv_norm,
    representation_functional,
    sup_variation,
    variation_on_partition,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DIVERGENT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_INVALID)


def _positive_int(minimum):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if v < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}, got {v}")
        return v
    return parse


def _load_phi(path):
    return phi_from_dict(jsonio.load_path(path))


def _load_function(args):
    if getattr(args, "fn", None):
        return BVFunction.from_dict(jsonio.load_path(args.fn))
    if getattr(args, "csv", None):
        try:
            return BVFunction.from_csv(args.csv, args.jump_thresh, not args.no_jump_detect)
        except SpecError as exc:
            raise SpecError(str(exc), args.csv) from None
        except OSError as exc:
            raise SpecError(exc.strerror or str(exc), args.csv) from None
    raise SpecError("one of --fn or --csv is required", "arguments")


def _emit(obj):
    sys.stdout.write(jsonio.dumps(obj) + "\n")


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _plot_csv(mesh_values):
    lines = ["h,value"] + [f"{h:.17g},{v:.17g}" for h, v in mesh_values]
    return "\n".join(lines) + "\n"


def _add_function_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fn", help="BV function JSON spec")
    src.add_argument("--csv", help="samples as CSV with header x,value")
    p.add_argument("--jump-thresh", type=float, default=None,
                   help="increment size treated as a jump (default 5x median |increment|)")
    p.add_argument("--no-jump-detect", action="store_true", help="keep every cell linear")


def _estimate(phi, f, args, kind):
    if kind == "sup":
        return sup_variation(phi, f, args.grid_n, args.refine_rounds)
    side = Side.PLUS if kind == "limsup+" else Side.MINUS
    return limsup_variation(phi, f, side, args.mesh_rounds)


def cmd_phi_check(args):
    phi = _load_phi(args.phi)
    report = check_condition(phi, args.cond, args.budget, K=args.K, p=args.p, q=args.q,
                             alpha=args.alpha)
    _emit(report.to_dict())
    return EXIT_OK


def cmd_variation(args):
    phi = _load_phi(args.phi)
    f = _load_function(args)
    est = _estimate(phi, f, args, args.kind)
    _emit(est.to_dict())
    if args.plot:
        _write(args.plot, _plot_csv(est.mesh_values))
    if args.require_finite and (est.status == DIVERGENT or math.isinf(est.value)):
        return EXIT_DIVERGENT
    return EXIT_OK


def cmd_represent(args):
    phi = _load_phi(args.phi)
    f = _load_function(args)
    value = representation_functional(phi, f)
    _emit({"value": value})
    if args.require_finite and math.isinf(value):
        return EXIT_DIVERGENT
    return EXIT_OK


def cmd_compare(args):
    phi = _load_phi(args.phi)
    f = _load_function(args)
    est = limsup_variation(phi, f, Side.PLUS, args.mesh_rounds)
    rep = representation_functional(phi, f)
    if math.isinf(est.value) and math.isinf(rep):
        diff = 0.0
    else:
        diff = abs(est.value - rep)
    _emit({"limsup_plus": est.to_dict(), "representation": rep, "difference": diff})
    if args.require_finite and (math.isinf(est.value) or math.isinf(rep)):
        return EXIT_DIVERGENT
    return EXIT_OK


def cmd_norm(args):
    phi = _load_phi(args.phi)
    f = _load_function(args)
    if args.modular == "rbv":
        res = rbv_norm(phi, f, args.grid_n, args.refine_rounds)
    else:
        g = f.density if args.of == "derivative" else f
        res = lphi_norm(phi, g)
    _emit(res.to_dict())
    if args.require_finite and math.isinf(res.value):
        return EXIT_DIVERGENT
    return EXIT_OK


def cmd_restore(args):
    u0 = Signal.from_csv(args.u0)
    cfg = RestoreConfig.from_dict(jsonio.load_path(args.config))
    u, trace = minimize(u0, cfg)
    _write(args.out, u.to_csv_text())
    if args.trace:
        _write(args.trace, trace_csv_text(trace))
    _emit({"initial_energy": trace[0], "energy": trace[-1], "iterations": len(trace) - 1,
           "output": args.out})
    return EXIT_OK


def cmd_oracle(args):
    f = _load_function(args)
    if args.grid:
        grid, _ = read_xy_csv(args.grid)
    else:
        grid = np.linspace(f.a, f.b, args.grid_n)
    if grid[0] != f.a or grid[-1] != f.b:
        raise SpecError("grid must start at a and end at b", "grid")
    if args.phi:
        phi = _load_phi(args.phi)
        _, part = dp_on_grid(phi, f, grid, Side.parse(args.side))
        value = variation_on_partition(phi, f, part, args.side)
        _emit({"value": value, "partition": part.points.tolist(), "grid_points": int(grid.size)})
    else:
        value = classical_variation(f, grid)
        _emit({"value": value, "total_variation": f.total_variation(),
               "grid_points": int(grid.size)})
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="rieszvar", description="Riesz φ-variation toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("phi-check", help="verify a structural condition of φ")
    p.add_argument("--phi", required=True)
    p.add_argument("--cond", required=True, choices=CONDITIONS)
    p.add_argument("--budget", type=_positive_int(100), default=1000)
    p.add_argument("--K", type=float, default=1.0)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.set_defaults(func=cmd_phi_check)

    def variation_opts(p):
        p.add_argument("--grid-n", type=_positive_int(2), default=129)
        p.add_argument("--refine-rounds", type=_positive_int(0), default=3)
        p.add_argument("--mesh-rounds", type=_positive_int(4), default=12)
        p.add_argument("--require-finite", action="store_true")

    p = sub.add_parser("variation", help="V, upper or lower limsup variation")
    p.add_argument("--phi", required=True)
    _add_function_args(p)
    p.add_argument("--kind", choices=("sup", "limsup+", "limsup-"), default="sup")
    p.add_argument("--plot", help="write h,value convergence CSV here")
    variation_opts(p)
    p.set_defaults(func=cmd_variation)

    p = sub.add_parser("represent", help="∫φ(x,|f'|) + Σ φ'_∞|h|")
    p.add_argument("--phi", required=True)
    _add_function_args(p)
    p.add_argument("--require-finite", action="store_true")
    p.set_defaults(func=cmd_represent)

    p = sub.add_parser("compare", help="upper limsup variation against the representation")
    p.add_argument("--phi", required=True)
    _add_function_args(p)
    variation_opts(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("norm", help="Luxemburg norm")
    p.add_argument("--phi", required=True)
    _add_function_args(p)
    p.add_argument("--modular", choices=("rbv", "lphi"), default="rbv")
    p.add_argument("--of", choices=("derivative", "value"), default="derivative",
                   help="for --modular lphi: integrate |f'| or |f|")
    variation_opts(p)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("restore", help="minimize the restoration energy")
    p.add_argument("--u0", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.set_defaults(func=cmd_restore)

    p = sub.add_parser("oracle", help="grid-restricted partition DP for cross-checks")
    _add_function_args(p)
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--grid-n", type=_positive_int(2), default=1025)
    grid.add_argument("--grid", help="CSV x,value whose x column is the grid")
    p.add_argument("--phi", help="φ JSON (default: classical variation, φ(t) = t)")
    p.add_argument("--side", choices=("plus", "minus"), default="plus")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RieszVarError, ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, KeyError):
            msg = f"missing field {exc.args[0]!r}"
        else:
            msg = str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
