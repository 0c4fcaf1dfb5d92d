import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qepsc import expr as E
from qepsc.errors import MissingVariable, UnsupportedExponent


def test_evaluate_arithmetic():
    e = E.Add(E.Mul(E.Var("x"), E.Const(2.0)), E.IntConst(3))
    assert E.evaluate(e, {"x": 4}) == 11.0


def test_evaluate_missing_variable():
    with pytest.raises(MissingVariable):
        E.evaluate(E.Var("nope"), {})


def test_evaluate_division_by_zero_constant():
    with pytest.raises(ZeroDivisionError):
        E.Div(E.ONE, E.Const(0.0))


def test_evaluate_sum_half_open():
    s = E.Sum("i", E.IntConst(0), E.Var("n"), E.Var("i"))
    assert E.evaluate(s, {"n": 5}) == 10.0
    assert E.evaluate(s, {"n": 0}) == 0.0
    assert E.evaluate(s, {"n": -3}) == 0.0  # empty range


def test_evaluate_min_max_ceil_floor_log():
    env = {"x": 2.5}
    assert E.evaluate(E.Min(E.Var("x"), E.IntConst(2)), env) == 2.0
    assert E.evaluate(E.Max(E.Var("x"), E.IntConst(2)), env) == 2.5
    assert E.evaluate(E.Ceil(E.Var("x")), env) == 3.0
    assert E.evaluate(E.Floor(E.Var("x")), env) == 2.0
    assert E.evaluate(E.Log(E.Var("x")), env) == math.log(2.5)
    assert E.evaluate(E.Exp2(E.IntConst(10)), env) == 1024.0


def test_log2_helper():
    assert E.evaluate(E.log2(E.Const(8.0)), {}) == pytest.approx(3.0)


def test_simplify_identities():
    x = E.Var("x")
    assert E.simplify(E.Add(x, E.IntConst(0))) == x
    assert E.simplify(E.Mul(x, E.IntConst(1))) == x
    assert E.simplify(E.Mul(x, E.IntConst(0))) == E.IntConst(0)
    assert E.simplify(E.Div(x, E.IntConst(1))) == x
    assert E.simplify(E.Pow(x, E.IntConst(1))) == x
    assert E.simplify(E.Pow(x, E.IntConst(0))) == E.IntConst(1)
    assert E.simplify(E.Sub(x, x)) == E.IntConst(0)
    assert E.simplify(E.Min(x, x)) == x


def test_simplify_collects_like_terms():
    x = E.Var("x")
    e = E.simplify(E.Add(x, E.Add(x, x)))
    assert e == E.Mul(E.IntConst(3), x)


def test_simplify_constant_condition():
    c = E.Cond(E.Cmp("<", E.IntConst(1), E.IntConst(2)), E.Var("a"), E.Var("b"))
    assert E.simplify(c) == E.Var("a")


def test_simplify_is_value_preserving_qft_form():
    e = E.Mul(
        E.Add(E.Var("n"), E.Var("n")),
        E.Log(E.Div(E.ONE, E.Var("eps"))),
    )
    s = E.simplify(e)
    env = {"n": 7, "eps": 1e-3}
    assert E.evaluate(s, env) == pytest.approx(E.evaluate(e, env))


def test_free_vars_and_sum_binding():
    s = E.Sum("i", E.IntConst(0), E.Var("n"), E.Mul(E.Var("i"), E.Var("c")))
    assert E.free_vars(s) == {"n", "c"}


def test_substitute_respects_sum_shadowing():
    s = E.Sum("i", E.IntConst(0), E.Var("n"), E.Var("i"))
    out = E.substitute(s, {"i": E.IntConst(9), "n": E.IntConst(4)})
    assert E.evaluate(out, {}) == 6.0  # 0+1+2+3


@pytest.mark.parametrize("p", range(5))
@pytest.mark.parametrize("n", [0, 1, 2, 7, 100, 1000])
def test_faulhaber_exact(p, n):
    closed = E.evaluate(E.faulhaber(p, E.IntConst(n)), {})
    brute = float(sum(i**p for i in range(n)))
    assert closed == pytest.approx(brute, rel=0, abs=1e-6 * max(1.0, brute))


def test_faulhaber_unsupported_exponent():
    with pytest.raises(UnsupportedExponent):
        E.faulhaber(7, E.Var("n"))


def test_sum_elim_invariant_body():
    s = E.Sum("i", E.IntConst(0), E.Var("n"), E.Const(0.02))
    out, kind = E.sum_elim(s)
    assert kind is E.SummaryKind.EXACT
    assert E.evaluate(out, {"n": 5}) == pytest.approx(0.1)


def test_sum_elim_polynomial_body():
    s = E.Sum("i", E.IntConst(0), E.Var("n"), E.Var("i"))
    out, kind = E.sum_elim(s)
    assert kind is E.SummaryKind.EXACT
    for n in (0, 1, 4, 9):
        assert E.evaluate(out, {"n": n}) == n * (n - 1) / 2


def test_sum_elim_geometric_body():
    s = E.Sum("i", E.IntConst(0), E.Var("n"), E.Exp2(E.Var("i")))
    out, kind = E.sum_elim(s)
    assert kind is E.SummaryKind.EXACT
    for n in (0, 1, 5, 20):
        assert E.evaluate(out, {"n": n}) == 2.0**n - 1


def test_sum_elim_min_is_sound_upper_bound():
    body = E.Min(E.Sub(E.Var("n"), E.Var("i")), E.Var("l"))
    s = E.Sum("i", E.IntConst(0), E.Var("n"), body)
    out, kind = E.sum_elim(s)
    assert kind is E.SummaryKind.UPPER_BOUND
    for n, l in ((5, 2), (5, 100), (12, 7)):
        exact = sum(min(n - i, l) for i in range(n))
        assert E.evaluate(out, {"n": n, "l": l}) >= exact


def test_sum_elim_max_is_sound_upper_bound():
    body = E.Max(E.Var("i"), E.Sub(E.Var("n"), E.Var("i")))
    s = E.Sum("i", E.IntConst(0), E.Var("n"), body)
    out, kind = E.sum_elim(s)
    assert kind is E.SummaryKind.UPPER_BOUND
    for n in (1, 4, 11):
        exact = sum(max(i, n - i) for i in range(n))
        assert E.evaluate(out, {"n": n}) >= exact


def test_sum_elim_residual_when_no_rule_applies():
    s = E.Sum("i", E.IntConst(0), E.Var("n"), E.Log(E.Add(E.Var("i"), E.ONE)))
    out, kind = E.sum_elim(s)
    assert isinstance(out, E.Sum)
    assert kind is E.SummaryKind.EXACT


def test_to_text_sexpr_round_trip():
    e = E.Mul(
        E.Min(E.Ceil(E.log2(E.Div(E.Var("n"), E.Var("eps")))), E.Var("n")),
        E.Const(1.5),
    )
    assert E.read_sexpr(E.to_text(e, "sexpr")) == E.simplify(e)


def test_to_text_formats():
    e = E.Mul(E.Const(1.5), E.Var("eps_R"))
    assert E.to_text(e, "sexpr") == "(* 1.5 eps_R)"
    assert "1.5*eps_R" == E.to_text(e, "wolfram")
    assert "\\varepsilon_{R}" in E.to_text(e, "latex")


def test_equivalence_check_detects_equal_and_unequal():
    n = E.Var("n")
    e1 = E.Mul(n, E.Sub(n, E.ONE))
    e2 = E.Sub(E.Mul(n, n), n)
    doms = {"n": (1, 200)}
    assert E.equivalence_check(e1, e2, doms)
    assert not E.equivalence_check(e1, E.Mul(n, n), doms)


_small = st.floats(min_value=0.01, max_value=100.0, allow_nan=False)


@given(a=_small, b=_small, c=_small)
@settings(max_examples=60, deadline=None)
def test_compile_expr_matches_evaluate(a, b, c):
    e = E.Add(
        E.Mul(E.Var("a"), E.Log(E.Add(E.Var("b"), E.ONE))),
        E.Min(E.Var("c"), E.Ceil(E.Var("a"))),
    )
    fn = E.compile_expr(e, ["a", "b", "c"])
    env = {"a": a, "b": b, "c": c}
    assert fn(a, b, c) == pytest.approx(E.evaluate(e, env), rel=1e-12)


@given(n=st.integers(min_value=0, max_value=60), p=st.integers(min_value=0, max_value=4))
@settings(max_examples=80, deadline=None)
def test_sum_elim_polynomial_matches_brute_force(n, p):
    s = E.Sum("i", E.IntConst(0), E.Var("n"), E.Pow(E.Var("i"), E.IntConst(p)))
    out, kind = E.sum_elim(s)
    assert kind is E.SummaryKind.EXACT
    assert E.evaluate(out, {"n": n}) == pytest.approx(float(sum(i**p for i in range(n))))
