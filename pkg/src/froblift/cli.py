"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage or
parse errors.  Output is deterministic for fixed inputs.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .cofreeness import (
    EnumerationBudgetError,
    KappaPoint,
    cofreeness_bijection_check,
    enumerate_kappa_points,
    lift_to_sheaf_map,
    solve_cofree,
)
from .deformation_stack import (
    SchemaError,
    StackValidationError,
    height_one_stack,
    load_stack,
    parse_stack,
    validate_all,
)
from .frobenius_lift import FrobeniusRing, HypothesisError, teichmuller_lift
from .local_algebra import (
    AlgebraMap,
    LocalRing,
    PrecisionContext,
    PrecisionError,
    render,
)
from .qcoh import (
    CongruenceError,
    adams_map,
    adams_property_suite,
    congruence_failures,
    sheaf_from_path,
    unit_sheaf,
    validate_comodule_algebra,
)
from .report import Report

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
PRECISION_ENV = "FROBLIFT_PRECISION"


class UsageError(Exception):
    pass


def _default_precision():
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{PRECISION_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError(f"{PRECISION_ENV} must be positive")
    return value


def _emit(args, text_lines: list[str], payload: dict) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        print("\n".join(text_lines))


def _load_sheaf(args):
    if not args.sheaf:
        raise UsageError("--sheaf FILE is required")
    return sheaf_from_path(args.sheaf, args.precision)


def _parse_assignments(text: str, names, ring) -> dict:
    out = {}
    for part in filter(None, (s.strip() for s in text.split(","))):
        name, sep, value = part.partition("=")
        name = name.strip()
        if not sep or name not in names:
            raise UsageError(f"bad assignment {part!r}; expected generator=value")
        out[name] = ring.parse(value)
    missing = [n for n in names if n not in out]
    if missing:
        raise UsageError(f"missing image for generator {missing[0]}")
    return out


def _parse_point(text: str, n: int) -> KappaPoint:
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"--point must be comma-separated integers, got {text!r}") from None
    if len(values) != n:
        raise UsageError(f"--point needs {n} values")
    return KappaPoint(values)


# -- subcommands -------------------------------------------------------------------


def cmd_teich(args) -> int:
    M = args.precision if args.precision is not None else 8
    ctx = PrecisionContext(args.p, args.h, M)
    if not 0 <= args.a < args.p:
        raise UsageError(f"residue must satisfy 0 <= a < {args.p}")
    O = LocalRing(ctx)
    # psi_O defaults to the identity, as for the Honda formal group
    S = FrobeniusRing.with_maximal_ideal(O, AlgebraMap.identity(O), perfect=True)
    value = render(teichmuller_lift(S, args.a))
    _emit(args, [value], {"p": args.p, "h": args.h, "precision": M, "a": args.a, "lift": value})
    return EXIT_OK


def cmd_validate_stack(args) -> int:
    if args.stack:
        try:
            text = Path(args.stack).read_text()
        except OSError as exc:
            raise SchemaError(f"cannot read {args.stack}: {exc}") from None
        S = parse_stack(text, args.precision)
    else:
        if args.p is None:
            raise UsageError("give --stack FILE or --p for the built-in height-one stack")
        M = args.precision if args.precision is not None else 8
        S = height_one_stack(args.p, M)
    reports = validate_all(S)
    ok = all(r.ok for r in reports)
    _emit(args, [r.render() for r in reports],
          {"ok": ok, "reports": [r.to_dict() for r in reports]})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check_sheaf(args) -> int:
    sheaf = _load_sheaf(args)
    rep = validate_comodule_algebra(sheaf)
    fails = congruence_failures(sheaf)
    rep.add("Frobenius congruence", not fails,
            f"Frobenius congruence failed at generator {fails[0]}" if fails else "")
    lines = [rep.render()]
    if fails:
        lines.append(f"error: Frobenius congruence failed at generator {fails[0]}")
    _emit(args, lines, rep.to_dict())
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_adams(args) -> int:
    sheaf = _load_sheaf(args)
    R = sheaf.R
    psi = adams_map(sheaf)
    if args.element:
        targets = [(args.element, R.parse(args.element))]
    else:
        targets = [(g, R.var(g)) for g in R.generators]
    values = {name: render(psi(x)) for name, x in targets}
    rep: Report = adams_property_suite(sheaf)
    lines = [f"psi({name}) = {v}" for name, v in values.items()] + [rep.render()]
    _emit(args, lines, {"values": values, "report": rep.to_dict()})
    return EXIT_OK if rep.ok else EXIT_FAIL


def _target_sheaf(args, source):
    if args.target:
        return sheaf_from_path(args.target, source.stack.ctx.M)
    return unit_sheaf(source.stack)


def cmd_lift(args) -> int:
    Rs = _load_sheaf(args)
    Ss = _target_sheaf(args, Rs)
    images = _parse_assignments(args.map, Rs.generators, Ss.R)
    mu = AlgebraMap.over_base(Rs.R, Ss.R, images)
    lifted = lift_to_sheaf_map(Rs, Ss, mu)
    out = {g: render(lifted.image(g)) for g in Rs.generators}
    _emit(args, [f"{g} -> {v}" for g, v in out.items()], {"images": out})
    return EXIT_OK


def cmd_cofree(args) -> int:
    Rs = _load_sheaf(args)
    if args.all == bool(args.point):
        raise UsageError("give exactly one of --point LIST or --all")
    if args.point:
        mu = solve_cofree(Rs, _parse_point(args.point, len(Rs.generators)))
        out = {g: render(mu.image(g)) for g in Rs.generators}
        _emit(args, [f"{g} -> {v}" for g, v in out.items()], {"images": out})
        return EXIT_OK
    rep = cofreeness_bijection_check(Rs, relifts=args.relifts, seed=args.seed)
    lines = []
    for r in rep.results:
        imgs = ", ".join(f"{g} -> {render(r.lifted.image(g))}" for g in Rs.generators) \
            if r.lifted is not None else f"no lift ({r.error})"
        status = "PASS" if r.ok else "FAIL"
        lines.append(f"{status} {r.point}: {imgs or 'identity'}")
    lines.append(f"points: {rep.n_points}, lifted maps: {rep.n_maps}, "
                 f"distinct: {rep.distinct}, bijection: {'ok' if rep.ok else 'FAILED'}")
    _emit(args, lines, rep.to_dict())
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_enumerate(args) -> int:
    Rs = _load_sheaf(args)
    pts = enumerate_kappa_points(Rs, args.budget)
    _emit(args, [str(pt) for pt in pts], {"points": [list(pt.values) for pt in pts]})
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=int, default=argparse.SUPPRESS,
                        help=f"m-adic precision M (default: ${PRECISION_ENV} or the input file)")
    common.add_argument("--format", choices=("text", "json"), default="text")

    parser = argparse.ArgumentParser(prog="froblift", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("teich", parents=[common], help="Teichmueller lift of a residue")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--h", type=int, default=1)
    p.add_argument("a", type=int)
    p.set_defaults(func=cmd_teich)

    p = sub.add_parser("validate-stack", parents=[common], help="run every stack validator")
    p.add_argument("--stack", help="stack document (default: built-in height-one stack)")
    p.add_argument("--p", type=int)
    p.set_defaults(func=cmd_validate_stack)

    p = sub.add_parser("check-sheaf", parents=[common],
                       help="comodule axioms and Frobenius congruence")
    p.add_argument("--sheaf", required=True)
    p.set_defaults(func=cmd_check_sheaf)

    p = sub.add_parser("adams", parents=[common], help="Adams operation and its properties")
    p.add_argument("--sheaf", required=True)
    p.add_argument("--element", help="element of R (default: every generator)")
    p.set_defaults(func=cmd_adams)

    p = sub.add_parser("lift", parents=[common], help="lift an O-algebra map to a sheaf map")
    p.add_argument("--sheaf", required=True, help="source sheaf")
    p.add_argument("--target", help="target sheaf (default: the unit sheaf O)")
    p.add_argument("--map", required=True, help="generator images, e.g. x=2,y=u1")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("cofree", parents=[common], help="solve for sheaf maps R -> O")
    p.add_argument("--sheaf", required=True)
    p.add_argument("--point", help="comma-separated residues, one per generator")
    p.add_argument("--all", action="store_true", help="check the bijection on every point")
    p.add_argument("--relifts", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_cofree)

    p = sub.add_parser("enumerate", parents=[common], help="list the kappa-points of R")
    p.add_argument("--sheaf", required=True)
    p.add_argument("--budget", type=int, default=4096)
    p.set_defaults(func=cmd_enumerate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if not hasattr(args, "precision"):
            args.precision = _default_precision()
        elif args.precision < 1:
            raise UsageError("--precision must be positive")
        return args.func(args)
    except (UsageError, SchemaError, PrecisionError, EnumerationBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StackValidationError, CongruenceError, HypothesisError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        # malformed arguments such as a non-prime p or an unparsable element
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
