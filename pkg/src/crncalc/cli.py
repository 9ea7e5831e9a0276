"""Command-line front end.

Exit codes: 0 success, 1 verification failed, 2 bad input, 3 state cap hit.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from fractions import Fraction
from pathlib import Path

from . import analysis, report
from .calculus import Environment, evaluate, parse_env_binding, parse_formula
from .compiler import CompileOptions, compile_direct, compile_joint, compile_truncated, translate
from .crn import Crs, format_crn, parse_crn
from .errors import CrnCalcError, StateCapExceeded
from .pmf import Pmf, format_pmf, geometric_tail, parse_pmf, poisson_tail
from .rationals import parse_rational
from .ssa import occupation_estimate, ssa_run
from .verify import check_network

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3

_FAMILY_RE = re.compile(r"^\s*(geometric|poisson)\(\s*([^)]+?)\s*\)\s*$")


class InputError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


def _env(args) -> Environment:
    bindings = {}
    for text in args.env or []:
        name, value = parse_env_binding(text)
        if name in bindings:
            raise InputError(f"variable {name!r} bound twice")
        bindings[name] = value
    return Environment(bindings)


def _options(args) -> CompileOptions:
    return CompileOptions(rate_free=getattr(args, "rate_free", False), rho=args.rho,
                          state_cap_hint=getattr(args, "cap", analysis.DEFAULT_CAP))


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _source(path: str):
    """Classify an input as ('family', ...), ('pmf', Pmf), ('crn', Crs) or ('formula', Formula)."""
    match = _FAMILY_RE.match(path)
    if match and not Path(path).exists():
        return "family", (match.group(1), parse_rational(match.group(2)))
    text = _read(path)
    suffix = Path(path).suffix
    if suffix == ".pmf":
        return "pmf", parse_pmf(text)
    if suffix == ".crn":
        return "crn", parse_crn(text)
    return "formula", parse_formula(text)


def _family_tail(name: str, param: Fraction):
    return geometric_tail(param) if name == "geometric" else poisson_tail(param)


def _compile_pmf(f: Pmf, options: CompileOptions) -> Crs:
    return compile_joint(f) if f.dim > 1 else compile_direct(f, options)


def _build(args) -> tuple[Crs, object]:
    """Network and its reference distribution (None when unknown) for an input path."""
    kind, value = _source(args.input)
    options = _options(args)
    if kind == "family":
        if args.epsilon is None:
            raise InputError("infinite families need --epsilon")
        crs, _ = compile_truncated(_family_tail(*value), args.epsilon, options)
        return crs, None
    if kind == "pmf":
        return _compile_pmf(value, options), value
    if kind == "crn":
        return value, None
    env = _env(args)
    reference = evaluate(value, env)
    if args.direct:
        return _compile_pmf(reference, options), reference
    return translate(value, env, options), reference


# --- commands ----------------------------------------------------------------


def cmd_eval(args) -> int:
    kind, value = _source(args.input)
    if kind == "pmf":
        result = value
    elif kind == "formula":
        result = evaluate(value, _env(args))
    else:
        raise InputError("eval expects a formula file")
    _emit(format_pmf(result), args.out)
    return EXIT_OK


def cmd_compile(args) -> int:
    crs, _ = _build(args)
    _emit(format_crn(crs), args.out)
    return EXIT_OK


def _crn_input(args) -> Crs:
    kind, value = _source(args.input)
    if kind == "crn":
        return value
    crs, _ = _build(args)
    return crs


def cmd_steady(args) -> int:
    crs = _crn_input(args)
    result = analysis.output_distribution(crs, args.species or None, args.cap, args.method)
    text = report.steady_json(result) if args.format == "json" else report.steady_text(result)
    _emit(text, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    crs = _crn_input(args)
    if args.occupation:
        name = args.species[0] if args.species else crs.outputs[0]
        stats = occupation_estimate(crs, name, args.seed, args.jumps, args.burn_in)
        _emit(report.occupation_text(stats), args.out)
        return EXIT_OK
    stats = ssa_run(crs, args.trials, args.seed, args.tmax, args.step_cap, args.species or None, args.threads)
    if args.format == "json":
        text = report.trajectory_json(stats)
    elif args.format == "tsv":
        text = report.histogram_tsv(stats)
    else:
        text = report.trajectory_text(stats)
    _emit(text, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    crs, reference = _build(args)
    if args.expect is not None:
        reference = parse_pmf(_read(args.expect))
    if reference is None:
        raise InputError("nothing to verify against; pass --expect PMF")
    if not crs.outputs:
        raise InputError("network declares no output species")
    verdict = check_network(crs, reference, args.tol, args.cap)
    print(f"l1: {report.format_probability(verdict.l1)}")
    print(f"ratio: {report.format_probability(verdict.ratio)}")
    ok = verdict.passed
    print("verdict: " + ("pass" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_MISMATCH


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crncalc", description="Compile and verify distribution programs as reaction networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="formula (.dcal), pmf (.pmf), network (.crn) or geometric(p)/poisson(m)")
    common.add_argument("--env", action="append", metavar="NAME=A/B", help="bind an environment variable (repeatable)")
    common.add_argument("--out", metavar="PATH", help="write output here instead of stdout")

    building = argparse.ArgumentParser(add_help=False)
    building.add_argument("--direct", action="store_true", help="evaluate first, then compile the pmf directly")
    building.add_argument("--rate-free", action="store_true", help="encode branch weights as molecule counts")
    building.add_argument("--rho", type=_rational, default=Fraction(10**6), help="fast/slow rate ratio for environment-dependent choices")
    building.add_argument("--epsilon", type=_rational, help="truncation threshold for infinite families")

    solving = argparse.ArgumentParser(add_help=False)
    solving.add_argument("--cap", type=_positive, default=analysis.DEFAULT_CAP, help="maximum reachable states per independent part")

    p = sub.add_parser("eval", parents=[common], help="evaluate a formula to an exact pmf")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compile", parents=[common, building], help="compile to a reaction network")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("steady", parents=[common, building, solving], help="exact long-run output distribution")
    p.add_argument("--species", action="append", help="species to report (default: outputs)")
    p.add_argument("--method", choices=["auto", "exact", "float"], default="auto")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("simulate", parents=[common, building], help="stochastic simulation")
    p.add_argument("--trials", type=_positive, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tmax", type=float, default=math.inf)
    p.add_argument("--step-cap", type=_positive, default=10**7)
    p.add_argument("--threads", type=_positive, default=1)
    p.add_argument("--species", action="append", help="species to histogram (default: outputs)")
    p.add_argument("--format", choices=["text", "json", "tsv"], default="text")
    p.add_argument("--occupation", action="store_true", help="time-average one long trajectory instead")
    p.add_argument("--jumps", type=_positive, default=10**6, help="events in occupation mode")
    p.add_argument("--burn-in", type=_rational, default=Fraction(1, 10), help="discarded fraction in occupation mode")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common, building, solving], help="check a compiled network against the semantics")
    p.add_argument("--tol", type=_rational, default=Fraction(0), help="largest acceptable L1 distance")
    p.add_argument("--expect", metavar="PMF", help="reference pmf file (required for .crn inputs)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StateCapExceeded as exc:
        print(f"crncalc: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (CrnCalcError, InputError, ValueError, KeyError) as exc:
        print(f"crncalc: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
