import pytest

from qepsc import expr as E
from qepsc import ir, stdlib
from qepsc.errors import NotApplicable
from qepsc.extract import (
    Granularity,
    collect_epsilons,
    hoist_conditional,
    make_cost_estimator,
    make_error_estimator,
    substitute_dontcares,
)
from qepsc.oracle import interpret
from qepsc.parser import parse, parse_cexpr


def _has_node(p, pred):
    found = []

    def walk(stmts):
        for s in stmts:
            if pred(s):
                found.append(s)
            for attr in ("body", "then_body", "else_body"):
                if hasattr(s, attr):
                    walk(getattr(s, attr))

    for sub in p.subroutines:
        walk(sub.body)
    return bool(found)


def test_dontcare_args_are_zeroed():
    p = parse(
        "def f(@dontcare theta: real) { Rz(theta); }"
        "def main() { f(1.2); f(3.4); }"
    )
    q = substitute_dontcares(p)
    main = next(s for s in q.subroutines if s.name == "main")
    assert main.body[0].args == (E.Const(0.0),)
    assert main.body[1].args == (E.Const(0.0),)
    # the two calls are now structurally identical
    assert main.body[0] == main.body[1]


def test_dontcare_leaves_gate_args_alone():
    # only subroutine-call arguments bound to @dontcare params change
    p = parse("def f(@dontcare x: real) { Rz(x); } def main() { Rz(1.2); f(1.2); }")
    q = substitute_dontcares(p)
    main = next(s for s in q.subroutines if s.name == "main")
    assert main.body[0].args == (E.Const(1.2),)


def test_dontcare_noop_without_flags():
    p = parse("def f(x: real) { Rz(x); } def main() { f(1.2); }")
    assert substitute_dontcares(p) == p


def test_cost_estimator_has_no_gates_or_epsilon_decls():
    p = stdlib.build("qft")
    ep = make_cost_estimator(p)
    assert not _has_node(ep, lambda s: type(s).__name__ == "GateCall")
    assert not _has_node(ep, lambda s: type(s).__name__ == "EpsilonDecl")


def test_qft_cost_value():
    ep = make_cost_estimator(stdlib.build("qft"))
    (eps,) = collect_epsilons(stdlib.build("qft"))
    # 6 controlled rotations of 3 Rz each, 15 T per Rz
    assert interpret(ep, {"n": 4, eps.mangled_name: 2**-10}) == pytest.approx(270.0)


def test_qft_error_value():
    ep = make_error_estimator(stdlib.build("qft"))
    (eps,) = collect_epsilons(stdlib.build("qft"))
    assert interpret(ep, {"n": 4, eps.mangled_name: 0.01}) == pytest.approx(0.18)


def test_single_t_gate():
    p = parse("def main() { T(); }")
    assert interpret(make_cost_estimator(p), {}) == 1.0
    assert interpret(make_error_estimator(p), {}) == 0.0


def test_clifford_gates_are_free():
    p = parse("def main() { H(); S(); CNOT(); X(); Z(); M(); }")
    assert interpret(make_cost_estimator(p), {}) == 0.0
    assert interpret(make_error_estimator(p), {}) == 0.0


def test_collect_epsilons_depth0_qft():
    eps = collect_epsilons(stdlib.build("qft"))
    assert [e.source_name for e in eps] == ["eps_R"]


def test_collect_epsilons_depth0_aqft():
    names = sorted(e.source_name for e in collect_epsilons(stdlib.build("aqft")))
    assert names == ["eps_QFT", "eps_R"]


def test_collect_epsilons_depth1_aqft_splits_rotation_sites():
    eps = collect_epsilons(stdlib.build("aqft"), Granularity(1))
    rz = [e for e in eps if e.source_name == "eps_R"]
    assert len(rz) >= 2  # distinct rotation sites get distinct variables
    assert len({e.mangled_name for e in eps}) == len(eps)


def test_collect_epsilons_refinement():
    # deeper granularity only ever splits variables, never merges them
    p = stdlib.build("qpe_with_aqft")
    prev = len(collect_epsilons(p, Granularity(0)))
    for d in (1, 2, 3):
        cur = len(collect_epsilons(p, Granularity(d)))
        assert cur >= prev
        prev = cur


def test_granularity_split_estimator_matches_merged():
    # giving every site the same value must reproduce the depth-0 number
    p = stdlib.build("aqft")
    e0 = make_cost_estimator(p)
    e1 = make_cost_estimator(p, granularity=Granularity(1))
    env0 = {"n": 6}
    env1 = {"n": 6}
    for v in collect_epsilons(p):
        env0[v.mangled_name] = 1e-4
    for v in collect_epsilons(p, Granularity(1)):
        env1[v.mangled_name] = 1e-4
    assert interpret(e0, env0) == pytest.approx(interpret(e1, env1))


def test_epsilon_domain_default():
    (eps,) = collect_epsilons(stdlib.build("qft"))
    assert eps.domain == (1e-18, 0.5)


def test_hoist_simple_guard():
    f = parse("def main(n: int, l: int) { for j in 0 .. n { if j <= l { T(); } } }")
    loop = f.subroutines[0].body[0]
    new = hoist_conditional(loop)
    hi = new.hi
    # new bound is min(n, l + 1)
    for n in range(0, 8):
        for l in range(-1, 8):
            env = {"n": n, "l": l}
            assert E.evaluate(hi, env) == min(n, l + 1)
    assert new.body[0] == loop.body[0].then_body[0]


def test_hoist_strict_guard():
    f = parse("def main(n: int, c: int) { for j in 0 .. n { if j < c { T(); } } }")
    new = hoist_conditional(f.subroutines[0].body[0])
    for n in range(0, 6):
        for c in range(0, 6):
            assert E.evaluate(new.hi, {"n": n, "c": c}) == min(n, c)


def test_hoist_reversed_comparison():
    f = parse("def main(n: int, c: int) { for j in 0 .. n { if c >= j { T(); } } }")
    new = hoist_conditional(f.subroutines[0].body[0])
    for n in range(0, 6):
        for c in range(0, 6):
            assert E.evaluate(new.hi, {"n": n, "c": c}) == min(n, c + 1)


def test_hoist_dependent_loop_bound():
    src = "def main(n: int, i: int, l: int) { for j in 0 .. n - 1 - i { if j <= l { Rz(0.1); } } }"
    new = hoist_conditional(parse(src).subroutines[0].body[0])
    for n in range(0, 7):
        for i in range(0, n):
            for l in range(0, 7):
                assert E.evaluate(new.hi, {"n": n, "i": i, "l": l}) == min(n - 1 - i, l + 1)


def test_hoist_not_applicable():
    cases = [
        # guard depends on the index nonlinearly
        "def main(n: int, l: int) { for j in 0 .. n { if j * j <= l { T(); } } }",
        # guard mentions a let that varies with the index: not invariant
        "def main(n: int) { for j in 0 .. n { if j <= j + 1 { T(); } } }",
        # else branch present
        "def main(n: int, l: int) { for j in 0 .. n { if j <= l { T(); } else { H(); } } }",
        # more than one statement in the loop
        "def main(n: int, l: int) { for j in 0 .. n { H(); if j <= l { T(); } } }",
        # body is not a conditional at all
        "def main(n: int) { for j in 0 .. n { T(); } }",
    ]
    for src in cases:
        loop = parse(src).subroutines[0].body[-1]
        with pytest.raises(NotApplicable):
            hoist_conditional(loop)


def test_estimators_preserve_user_increments():
    p = ir.Program(
        (
            ir.Subroutine(
                "main",
                (),
                (
                    ir.Increment("T", parse_cexpr("7")),
                    ir.Increment("E", parse_cexpr("0.25")),
                ),
            ),
        ),
        "main",
    )
    assert interpret(make_cost_estimator(p), {}) == 7.0
    assert interpret(make_error_estimator(p), {}) == 0.25
