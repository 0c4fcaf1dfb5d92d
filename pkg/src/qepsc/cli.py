"""Command-line surface: parse, extract, summarize, optimize, count, bench,
stdlib.  Machine-readable JSON/CSV goes to stdout, diagnostics to stderr.

Exit codes: 0 success, 1 usage error, 2 parse/validation failure,
3 infeasible optimization, 4 evaluation error.
"""

from __future__ import annotations

import argparse
import os
import statistics
import sys
import time

from . import anneal, extract, ir, oracle, stdlib, summarize
from . import expr as E
from . import errors
from .parser import parse

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_EVAL = 4

BENCH_EPS = {"eps_R": 1e-10, "eps_QFT": 1e-5, "eps_TE": 1e-2, "eps_QPE": 2e-2}


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _load_program(args) -> ir.Program:
    if getattr(args, "stdlib", None):
        if args.input:
            raise CliError("give either an input file or --stdlib, not both", EXIT_USAGE)
        try:
            return stdlib.build(args.stdlib)
        except KeyError as exc:
            raise CliError(str(exc), EXIT_USAGE)
    if not args.input:
        raise CliError("missing input: give a DSL file or --stdlib NAME", EXIT_USAGE)
    try:
        text = sys.stdin.read() if args.input == "-" else open(args.input).read()
    except OSError as exc:
        raise CliError(str(exc), EXIT_USAGE)
    try:
        return parse(text)
    except errors.DslSyntaxError as exc:
        raise CliError(str(exc), EXIT_PARSE)
    except errors.DuplicateDefinition as exc:
        raise CliError(str(exc), EXIT_PARSE)


def _gateset(args) -> ir.GateSet:
    path = getattr(args, "gateset", None) or os.environ.get("QEPSC_GATESET")
    if not path:
        return ir.default_clifford_t()
    try:
        return ir.load_gateset_file(path)
    except (OSError, errors.ConfigError) as exc:
        raise CliError(f"gateset: {exc}", EXIT_USAGE)


def _validated(args) -> tuple:
    p = _load_program(args)
    gs = _gateset(args)
    diags = ir.validate(p, gs)
    if diags:
        for d in diags:
            print(d, file=sys.stderr)
        raise CliError(f"{len(diags)} validation diagnostic(s)", EXIT_PARSE)
    return p, gs


def _granularity(args) -> extract.Granularity:
    depth = getattr(args, "context_depth", 0) or 0
    return extract.Granularity(depth)


def _keyvals(pairs, what) -> dict:
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise CliError(f"bad {what} {item!r}, expected name=value", EXIT_USAGE)
        name, _, val = item.partition("=")
        try:
            out[name] = float(val)
        except ValueError:
            raise CliError(f"bad {what} value {val!r}", EXIT_USAGE)
    return out


def _summaries(p, gs, g):
    p2 = extract.substitute_dontcares(p)
    sT = summarize.summarize(extract.make_cost_estimator(p2, gs, g), "T")
    sE = summarize.summarize(extract.make_error_estimator(p2, gs, g), "E")
    return sT, sE


# ---------------------------------------------------------------------------
# subcommands


def cmd_parse(args) -> int:
    p = _load_program(args)
    gs = _gateset(args)
    diags = ir.validate(p, gs)
    for d in diags:
        print(d, file=sys.stderr)
    if diags:
        return EXIT_PARSE
    print(f"ok: {len(p.subroutines)} subroutine(s), entry {p.entry_name}")
    return EXIT_OK


def cmd_extract(args) -> int:
    p, gs = _validated(args)
    g = _granularity(args)
    p2 = extract.substitute_dontcares(p)
    make = extract.make_cost_estimator if args.counter == "T" else extract.make_error_estimator
    print(ir.emit_dsl(make(p2, gs, g)))
    return EXIT_OK


def cmd_summarize(args) -> int:
    p, gs = _validated(args)
    sT, sE = _summaries(p, gs, _granularity(args))
    s = sT if args.counter == "T" else sE
    if args.format == "json":
        print(s.to_json())
    else:
        print(E.to_text(s.expression, args.format))
    return EXIT_OK


def cmd_optimize(args) -> int:
    if (args.eps_budget is None) == (args.t_budget is None):
        raise CliError("give exactly one of --eps-budget or --t-budget", EXIT_USAGE)
    p, gs = _validated(args)
    g = _granularity(args)
    sT, sE = _summaries(p, gs, g)
    fixed = _keyvals(args.param, "--param")
    domains = {
        v.mangled_name: v.domain for v in extract.collect_epsilons(p, g, gs)
    }
    cfg = anneal.AnnealConfig(
        iterations=args.iters, restarts=args.restarts, seed=args.seed, domains=domains
    )
    try:
        if args.eps_budget is not None:
            result = anneal.solve_min_cost(sT.expression, sE.expression, args.eps_budget, fixed, cfg)
        else:
            result = anneal.solve_min_error(sT.expression, sE.expression, args.t_budget, fixed, cfg)
    except errors.Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(result.to_json())
    return EXIT_OK


def cmd_count(args) -> int:
    p, gs = _validated(args)
    env = _keyvals(args.param, "--param")
    env.update(_keyvals(args.eps, "--eps"))
    counts = oracle.instantiate(extract.substitute_dontcares(p), env, gs)
    print(counts.to_json())
    return EXIT_OK


def _median_eval_ns(fn, reps: int) -> float:
    fn()
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - t0)
    return float(statistics.median(samples))


def cmd_bench(args) -> int:
    p, gs = _validated(args)
    name = args.stdlib or args.input
    g = _granularity(args)
    sizes = [int(s) for s in args.sizes.split(",") if s]
    if not sizes:
        raise CliError("--sizes must list at least one size", EXIT_USAGE)
    sT, sE = _summaries(p, gs, g)
    p2 = extract.substitute_dontcares(p)
    est_t = oracle.compile_estimator(extract.make_cost_estimator(p2, gs, g))
    est_e = oracle.compile_estimator(extract.make_error_estimator(p2, gs, g))
    eps = dict(BENCH_EPS)
    eps.update(_keyvals(args.eps, "--eps"))
    order = sorted(
        (E.free_vars(sT.expression) | E.free_vars(sE.expression)) - {"n"}
    )
    sym_t = E.compile_expr(sT.expression, ["n"] + order)
    sym_e = E.compile_expr(sE.expression, ["n"] + order)
    missing = [q for q in order if q not in eps]
    if missing:
        raise CliError(f"bench needs --eps for: {', '.join(missing)}", EXIT_USAGE)
    tail = [eps[q] for q in order]
    print("program,n,mode,median_ns,iterations")
    modes = ("symbolic", "oracle") if args.mode == "both" else (args.mode,)
    for n in sizes:
        env = dict(eps)
        env["n"] = n
        for mode in modes:
            if mode == "symbolic":
                ns = _median_eval_ns(lambda: (sym_t(float(n), *tail), sym_e(float(n), *tail)), args.reps)
            else:
                ns = _median_eval_ns(lambda: (est_t(env), est_e(env)), args.reps)
            print(f"{name},{n},{mode},{ns:.0f},{args.reps}")
    return EXIT_OK


def cmd_stdlib(args) -> int:
    if args.action == "list":
        for name in stdlib.NAMES:
            print(name)
        return EXIT_OK
    if not args.name:
        raise CliError("stdlib emit requires a program name", EXIT_USAGE)
    kw = {} if args.n is None else {"n": args.n}
    try:
        print(stdlib.source(args.name, **kw), end="")
    except KeyError as exc:
        raise CliError(str(exc), EXIT_USAGE)
    except TypeError:
        raise CliError(f"{args.name} does not take a size parameter", EXIT_USAGE)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing


def _add_common(sp, gateset=True, depth=True):
    sp.add_argument("input", nargs="?", help="DSL source file ('-' for stdin)")
    sp.add_argument("--stdlib", help="use a built-in program instead of a file")
    if gateset:
        sp.add_argument("--gateset", help="gate-set JSON file (or env QEPSC_GATESET)")
    if depth:
        sp.add_argument("--context-depth", type=int, default=0,
                        help="epsilon split depth (0 = per declaration site)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qepsc", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("parse", help="syntax/validation check")
    _add_common(sp, depth=False)
    sp.set_defaults(fn=cmd_parse)

    sp = sub.add_parser("extract", help="emit an estimator program")
    _add_common(sp)
    sp.add_argument("--counter", choices=("T", "E"), default="T")
    sp.set_defaults(fn=cmd_extract)

    sp = sub.add_parser("summarize", help="closed-form summary of a counter")
    _add_common(sp)
    sp.add_argument("--counter", choices=("T", "E"), default="T")
    sp.add_argument("--format", choices=("sexpr", "wolfram", "latex", "json"), default="json")
    sp.set_defaults(fn=cmd_summarize)

    sp = sub.add_parser("optimize", help="anneal the accuracy assignment")
    _add_common(sp)
    sp.add_argument("--eps-budget", type=float, help="minimize T s.t. E <= budget")
    sp.add_argument("--t-budget", type=float, help="minimize E s.t. T <= budget")
    sp.add_argument("--param", action="append", help="bind a symbol, e.g. n=64")
    sp.add_argument("--iters", type=int, default=1000)
    sp.add_argument("--restarts", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(fn=cmd_optimize)

    sp = sub.add_parser("count", help="oracle gate counts at a full binding")
    _add_common(sp, depth=False)
    sp.add_argument("--param", action="append", help="bind a symbol, e.g. n=4")
    sp.add_argument("--eps", action="append", help="bind an epsilon, e.g. eps_R=1e-3")
    sp.set_defaults(fn=cmd_count)

    sp = sub.add_parser("bench", help="time symbolic vs oracle evaluation (CSV)")
    _add_common(sp)
    sp.add_argument("--sizes", default="8,16,32,64")
    sp.add_argument("--mode", choices=("symbolic", "oracle", "both"), default="both")
    sp.add_argument("--reps", type=int, default=11)
    sp.add_argument("--eps", action="append", help="override benchmark epsilon values")
    sp.set_defaults(fn=cmd_bench)

    sp = sub.add_parser("stdlib", help="list or emit built-in programs")
    sp.add_argument("action", choices=("list", "emit"))
    sp.add_argument("name", nargs="?")
    sp.add_argument("--n", type=int, default=None, help="concrete size for emit")
    sp.set_defaults(fn=cmd_stdlib)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except errors.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        errors.MissingVariable,
        errors.NonFiniteResult,
        errors.NonIntegerBound,
        errors.UnknownGate,
        ZeroDivisionError,
    ) as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
