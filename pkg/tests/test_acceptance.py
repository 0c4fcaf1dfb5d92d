"""End-to-end acceptance checks, one per shipped guarantee.

Each test prints a single PASS/FAIL line so the suite output doubles as a
checklist.  These exercise the public API the way the README describes it.
"""

import math
import time

import numpy as np
import pytest

from qepsc import cli, expr as E, ir, stdlib
from qepsc.anneal import AnnealConfig, solve_min_cost
from qepsc.extract import (
    collect_epsilons,
    make_cost_estimator,
    make_error_estimator,
    substitute_dontcares,
)
from qepsc.oracle import compile_estimator
from qepsc.parser import parse
from qepsc.summarize import summarize, summarize_program


from conftest import report_criterion as _report


def _summary_env(summary, n, eps_by_source, program):
    env = {"n": float(n)}
    by_mangled = {v.mangled_name: v.source_name for v in collect_epsilons(program)}
    for m in summary.epsilons:
        env[m] = eps_by_source[by_mangled.get(m, m)]
    return env


# ---------------------------------------------------------------------------
# 1. exact QFT closed forms


def test_criterion_1_qft_closed_forms():
    t0 = time.perf_counter()
    p = stdlib.build("qft")
    sT = summarize(make_cost_estimator(p), "T")
    sE = summarize(make_error_estimator(p), "E")
    fT = E.compile_expr(sT.expression, ["n", "eps_R"])
    fE = E.compile_expr(sE.expression, ["n", "eps_R"])
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 129))
        eps = float(np.exp(rng.uniform(np.log(1e-12), np.log(0.1))))
        want_e = 1.5 * eps * n * (n - 1)
        want_t = 3.246 * n * (n - 1) * math.log(1 / eps)
        worst = max(
            worst,
            abs(fE(float(n), eps) - want_e) / want_e,
            abs(fT(float(n), eps) - want_t) / want_t,
        )
    dt = time.perf_counter() - t0
    ok = worst < 1e-3 and dt < 1.0
    _report(1, ok, f"QFT closed forms worst rel err {worst:.2e} in {dt:.2f}s")


# ---------------------------------------------------------------------------
# 2. approximate QFT closed forms, both min branches


def test_criterion_2_aqft_closed_forms():
    p = stdlib.build("aqft")
    sT = summarize(make_cost_estimator(p), "T")
    sE = summarize(make_error_estimator(p), "E")
    fT = E.compile_expr(sT.expression, ["n", "eps_QFT", "eps_R"])
    fE = E.compile_expr(sE.expression, ["n", "eps_QFT", "eps_R"])
    q = stdlib.build("qft")
    qT = E.compile_expr(summarize(make_cost_estimator(q), "T").expression, ["n", "eps_R"])
    rng = np.random.default_rng(4096)
    worst = 0.0
    exact_diff = 0.0
    pruned = unpruned = 0
    while pruned < 200 or unpruned < 200:
        n = int(rng.integers(2, 129))
        er = float(np.exp(rng.uniform(np.log(1e-12), np.log(0.1))))
        eq = float(np.exp(rng.uniform(np.log(1e-12), np.log(0.4))))
        l = math.ceil(math.log(n / eq) / math.log(2)) + 3
        if n * l <= n * (n - 1) / 2:
            if pruned >= 200:
                continue
            pruned += 1
            want_t = 6.492 * n * math.log(1 / er) * l
            want_e = 3 * er * n * l + eq
            worst = max(
                worst,
                abs(fT(float(n), eq, er) - want_t) / want_t,
                abs(fE(float(n), eq, er) - want_e) / want_e,
            )
        else:
            if unpruned >= 200:
                continue
            unpruned += 1
            # exact-QFT branch binds: must equal the qft program's T form
            exact_diff = max(exact_diff, abs(fT(float(n), eq, er) - qT(float(n), er)))
    ok = worst < 1e-3 and exact_diff == 0.0
    _report(
        2,
        ok,
        f"AQFT pruned-branch worst rel err {worst:.2e}; "
        f"unpruned branch differs from QFT by {exact_diff:.1e}",
    )


# ---------------------------------------------------------------------------
# 3. summaries never undercut the concrete oracle


def test_criterion_3_oracle_soundness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(777)
    worst_exact = 0.0
    ub_violations = 0
    for name in stdlib.NAMES:
        p = stdlib.build(name)
        eps_vars = collect_epsilons(p)
        n_hi = 12 if name == "shor" else 32
        for counter, make in (("T", make_cost_estimator), ("E", make_error_estimator)):
            ep = make(p)
            s = summarize(ep, counter)
            # the compiled estimator runs the same control flow as the
            # tree-walking interpreter (their agreement is unit-tested)
            fast = compile_estimator(ep)
            for _ in range(50):
                env = {"n": float(rng.integers(1, n_hi + 1))}
                for v in eps_vars:
                    # scheduling accuracies control trip counts, so keep
                    # them large enough that the oracle finishes quickly
                    lo = 1e-2 if v.source_name in ("eps_QPE", "eps_TE") else 1e-9
                    env[v.mangled_name] = float(
                        np.exp(rng.uniform(np.log(lo), np.log(0.3)))
                    )
                want = fast(env)
                got = E.evaluate(s.expression, env)
                if s.kind is E.SummaryKind.EXACT:
                    denom = max(abs(want), 1e-30)
                    worst_exact = max(worst_exact, abs(got - want) / denom)
                elif got < want * (1 - 1e-9) - 1e-12:
                    ub_violations += 1
    dt = time.perf_counter() - t0
    ok = worst_exact < 1e-6 and ub_violations == 0 and dt < 60.0
    _report(
        3,
        ok,
        f"exact summaries worst rel err {worst_exact:.2e}, "
        f"{ub_violations} bound violations, {dt:.1f}s",
    )


# ---------------------------------------------------------------------------
# 4. every bundled program summarizes without leftover control flow


def test_criterion_4_full_symbolization():
    residual = []
    for name in stdlib.NAMES:
        for counter in ("T", "E"):
            s = summarize_program(stdlib.build(name), counter)
            if s.residual_control_flow:
                residual.append((name, counter))
    _report(4, not residual, f"programs with residual control flow: {residual or 'none'}")


# ---------------------------------------------------------------------------
# 5. power-sum closed forms are exact


def test_criterion_5_power_sums():
    bad = 0
    for p in range(5):
        body = E.Pow(E.Var("i"), E.IntConst(p)) if p else E.ONE
        closed, kind = E.sum_elim(E.Sum("i", E.ZERO, E.Var("N"), body))
        assert kind is E.SummaryKind.EXACT
        for N in range(0, 1001):
            want = float(sum(i**p for i in range(N)))
            if E.evaluate(closed, {"N": N}) != want:
                bad += 1
    _report(5, bad == 0, f"power sums p=0..4, N<=1000: {bad} mismatches")


# ---------------------------------------------------------------------------
# 6. annealer finds the constrained optimum


def test_criterion_6_annealer_quality():
    t = E.read_sexpr("(+ (log (/ 1 e1)) (* 3 (log (/ 1 e2))))")
    e = E.read_sexpr("(+ e1 e2)")
    budget = 1e-2
    # fine 1-D grid along the active constraint e1 + e2 = budget
    grid = min(
        math.log(1 / x) + 3 * math.log(1 / (budget - x))
        for x in np.linspace(budget * 1e-4, budget * (1 - 1e-4), 20001)
    )
    worst_gap = 0.0
    infeasible = 0
    for seed in range(10):
        r = solve_min_cost(t, e, budget, cfg=AnnealConfig(seed=seed))
        worst_gap = max(worst_gap, (r.achieved_cost - grid) / abs(grid))
        a = r.assignment
        if a["e1"] + a["e2"] > budget * (1 + 1e-12):
            infeasible += 1
    ok = worst_gap < 0.05 and infeasible == 0
    _report(
        6,
        ok,
        f"annealer worst gap to grid optimum {worst_gap:.2%}, "
        f"{infeasible} budget violations over 10 seeds",
    )


# ---------------------------------------------------------------------------
# 7. end-to-end optimization of the flagship example is fast


def test_criterion_7_workflow_speed():
    p = stdlib.build("qpe_with_aqft")
    sT = summarize_program(p, "T")
    sE = summarize_program(p, "E")
    domains = {v.mangled_name: v.domain for v in collect_epsilons(p)}
    cfg = AnnealConfig(iterations=999, restarts=1, seed=0, domains=domains)
    t0 = time.perf_counter()
    r = solve_min_cost(sT.expression, sE.expression, 5e-3, {"n": 8}, cfg)
    dt = time.perf_counter() - t0
    achieved = E.evaluate(sE.expression, {"n": 8, **r.assignment})
    ok = (
        r.feasible
        and r.evaluations <= 2000
        and dt < 1.0
        and achieved <= 5e-3 * (1 + 1e-9)
    )
    _report(
        7,
        ok,
        f"feasible={r.feasible}, {r.evaluations} evaluations, {dt * 1e3:.0f} ms, "
        f"E={achieved:.3e} vs budget 5e-3",
    )


# ---------------------------------------------------------------------------
# 8. symbolic evaluation is near size-independent; oracle cost grows


def _median_ns(fn, reps=101):
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - t0)
    samples.sort()
    return samples[len(samples) // 2]


def test_criterion_8_scaling():
    t0 = time.perf_counter()
    results = {}
    for name in ("qpe_with_aqft", "shor"):
        p = stdlib.build(name)
        sT = summarize_program(p, "T")
        order = ["n"] + sorted(E.free_vars(sT.expression) - {"n"})
        fT = E.compile_expr(sT.expression, order)
        p2 = substitute_dontcares(p)
        est = compile_estimator(make_cost_estimator(p2))
        eps = {
            v.mangled_name: cli.BENCH_EPS[v.source_name] for v in collect_epsilons(p)
        }
        tail = [eps[q] for q in order[1:]]
        sym = {
            n: _median_ns(lambda n=n: fT(float(n), *tail)) for n in (8, 1024)
        }
        orc = {}
        for n in (8, 16, 32, 64):
            env = dict(eps)
            env["n"] = n
            est(env)  # warm the jit before timing
            orc[n] = _median_ns(lambda env=env: est(env), reps=11)
        xs = [math.log(n) for n in orc]
        ys = [math.log(v) for v in orc.values()]
        slope = np.polyfit(xs, ys, 1)[0]
        results[name] = (sym[1024] / sym[8], slope)
    dt = time.perf_counter() - t0
    sym_ratio = results["qpe_with_aqft"][0]
    qpe_slope = results["qpe_with_aqft"][1]
    shor_slope = results["shor"][1]
    ok = sym_ratio <= 3.0 and qpe_slope >= 0.9 and shor_slope >= 2.0 and dt < 600
    _report(
        8,
        ok,
        f"symbolic t(1024)/t(8)={sym_ratio:.2f}, oracle slopes "
        f"qpe_with_aqft={qpe_slope:.2f}, shor={shor_slope:.2f}, bench {dt:.0f}s",
    )


# ---------------------------------------------------------------------------
# 9. summarized totals respond monotonically to every accuracy knob


def test_criterion_9_monotonicity():
    rng = np.random.default_rng(31)
    violations = []
    for name in stdlib.NAMES:
        p = stdlib.build(name)
        eps_vars = collect_epsilons(p)
        if not eps_vars:
            continue
        sT = summarize_program(p, "T")
        sE = summarize_program(p, "E")
        for _ in range(30):
            base = {"n": float(rng.integers(2, 17))}
            for v in eps_vars:
                lo = 1e-2 if v.source_name in ("eps_QPE", "eps_TE") else 1e-9
                base[v.mangled_name] = float(
                    np.exp(rng.uniform(np.log(lo), np.log(0.2)))
                )
            for v in eps_vars:
                bumped = dict(base)
                bumped[v.mangled_name] = base[v.mangled_name] * 2.0
                te0, te1 = (
                    E.evaluate(sT.expression, base),
                    E.evaluate(sT.expression, bumped),
                )
                ee0, ee1 = (
                    E.evaluate(sE.expression, base),
                    E.evaluate(sE.expression, bumped),
                )
                if te1 > te0 * (1 + 1e-9):
                    violations.append((name, "T", v.mangled_name))
                if ee1 < ee0 * (1 - 1e-9):
                    violations.append((name, "E", v.mangled_name))
    by_prog = sorted({(n, c) for n, c, _ in violations})
    _report(
        9,
        not violations,
        f"{len(violations)} finite-difference violations"
        + (f" in {by_prog}" if violations else ""),
    )


# ---------------------------------------------------------------------------
# 10. determinism and round-trips


def test_criterion_10_determinism_round_trip(capsys):
    argv = [
        "optimize", "--stdlib", "qft", "--param", "n=8",
        "--eps-budget", "0.01", "--iters", "200", "--restarts", "2", "--seed", "5",
    ]
    cli.main(argv)
    first = capsys.readouterr().out
    cli.main(argv)
    second = capsys.readouterr().out
    byte_identical = first == second and first

    fixed_point = all(
        parse(ir.emit_dsl(stdlib.build(name))) == stdlib.build(name)
        for name in stdlib.NAMES
    )

    sexpr_ok = True
    for name in stdlib.NAMES:
        for counter in ("T", "E"):
            s = summarize_program(stdlib.build(name), counter)
            back = E.read_sexpr(E.to_text(s.expression, "sexpr"))
            env = {"n": 6.0}
            for m in s.epsilons:
                env[m] = 0.05
            a = E.evaluate(s.expression, env)
            b = E.evaluate(back, env)
            if not math.isclose(a, b, rel_tol=1e-12):
                sexpr_ok = False

    ok = bool(byte_identical) and fixed_point and sexpr_ok
    _report(
        10,
        ok,
        f"seeded CLI byte-identical={bool(byte_identical)}, "
        f"pretty-print fixed point={fixed_point}, sexpr round-trip={sexpr_ok}",
    )
