"""Immutable symbolic expressions: evaluation, simplification, closed-form
summation and text emission.

Expressions are plain frozen trees.  Natural log is the canonical logarithm;
``log2(x)`` is represented as ``Log(x)/Log(2)``.  ``Sum`` ranges are half-open:
the index runs over integers ``lo <= i < hi``.
"""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass

from .errors import MissingVariable, NonFiniteResult, UnsupportedExponent


class SymExpr:
    """Base class for expression nodes. Nodes are immutable and hashable."""

    __slots__ = ()

    # arithmetic sugar, convenient for builders and tests
    def __add__(self, other):
        return Add(self, _coerce(other))

    def __radd__(self, other):
        return Add(_coerce(other), self)

    def __sub__(self, other):
        return Sub(self, _coerce(other))

    def __rsub__(self, other):
        return Sub(_coerce(other), self)

    def __mul__(self, other):
        return Mul(self, _coerce(other))

    def __rmul__(self, other):
        return Mul(_coerce(other), self)

    def __truediv__(self, other):
        return Div(self, _coerce(other))

    def __rtruediv__(self, other):
        return Div(_coerce(other), self)

    def __pow__(self, other):
        return Pow(self, _coerce(other))


def _coerce(x) -> SymExpr:
    if isinstance(x, SymExpr):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(x, int):
        return IntConst(x)
    if isinstance(x, float):
        return Const(x)
    raise TypeError(f"cannot coerce {x!r} to SymExpr")


@dataclass(frozen=True, slots=True)
class Const(SymExpr):
    value: float


@dataclass(frozen=True, slots=True)
class IntConst(SymExpr):
    value: int


@dataclass(frozen=True, slots=True)
class Var(SymExpr):
    name: str


@dataclass(frozen=True, slots=True)
class Add(SymExpr):
    lhs: SymExpr
    rhs: SymExpr


@dataclass(frozen=True, slots=True)
class Sub(SymExpr):
    lhs: SymExpr
    rhs: SymExpr


@dataclass(frozen=True, slots=True)
class Mul(SymExpr):
    lhs: SymExpr
    rhs: SymExpr


class Div(SymExpr):
    __slots__ = ("lhs", "rhs")

    def __init__(self, lhs: SymExpr, rhs: SymExpr):
        if isinstance(rhs, (Const, IntConst)) and rhs.value == 0:
            raise ZeroDivisionError("division by constant zero")
        object.__setattr__(self, "lhs", lhs)
        object.__setattr__(self, "rhs", rhs)

    def __setattr__(self, *a):
        raise AttributeError("SymExpr nodes are immutable")

    def __eq__(self, other):
        return isinstance(other, Div) and self.lhs == other.lhs and self.rhs == other.rhs

    def __hash__(self):
        return hash((Div, self.lhs, self.rhs))

    def __repr__(self):
        return f"Div({self.lhs!r}, {self.rhs!r})"


@dataclass(frozen=True, slots=True)
class Pow(SymExpr):
    base: SymExpr
    exp: SymExpr


@dataclass(frozen=True, slots=True)
class Min(SymExpr):
    lhs: SymExpr
    rhs: SymExpr


@dataclass(frozen=True, slots=True)
class Max(SymExpr):
    lhs: SymExpr
    rhs: SymExpr


@dataclass(frozen=True, slots=True)
class Ceil(SymExpr):
    arg: SymExpr


@dataclass(frozen=True, slots=True)
class Floor(SymExpr):
    arg: SymExpr


@dataclass(frozen=True, slots=True)
class Log(SymExpr):
    """Natural logarithm."""

    arg: SymExpr


@dataclass(frozen=True, slots=True)
class Exp2(SymExpr):
    arg: SymExpr


@dataclass(frozen=True, slots=True)
class Sum(SymExpr):
    """Bounded sum of body over integer index in [lo, hi)."""

    index: str
    lo: SymExpr
    hi: SymExpr
    body: SymExpr


@dataclass(frozen=True, slots=True)
class Cond(SymExpr):
    predicate: SymExpr
    then_expr: SymExpr
    else_expr: SymExpr


CMP_OPS = ("<", "<=", "=", ">=", ">")


@dataclass(frozen=True, slots=True)
class Cmp(SymExpr):
    op: str
    lhs: SymExpr
    rhs: SymExpr

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"bad comparison operator {self.op!r}")


class SummaryKind(enum.Enum):
    EXACT = "exact"
    UPPER_BOUND = "upper_bound"

    def combine(self, other: "SummaryKind") -> "SummaryKind":
        # UpperBound absorbs
        if self is SummaryKind.UPPER_BOUND or other is SummaryKind.UPPER_BOUND:
            return SummaryKind.UPPER_BOUND
        return SummaryKind.EXACT


ZERO = IntConst(0)
ONE = IntConst(1)
TWO = IntConst(2)

Env = dict


def log2(x: SymExpr) -> SymExpr:
    return Div(Log(x), Log(TWO))


# ---------------------------------------------------------------------------
# evaluation


def evaluate(expr: SymExpr, env: Env) -> float:
    """Evaluate *expr* at *env*.

    Raises MissingVariable for unbound names and NonFiniteResult for
    overflow, log of a non-positive value or division by zero.
    """
    v = _eval(expr, env)
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if not math.isfinite(v):
        raise NonFiniteResult(f"non-finite result {v}")
    return float(v)


def _eval(e: SymExpr, env: Env):
    t = type(e)
    if t is Const or t is IntConst:
        return e.value
    if t is Var:
        try:
            return env[e.name]
        except KeyError:
            raise MissingVariable(e.name) from None
    if t is Add:
        return _eval(e.lhs, env) + _eval(e.rhs, env)
    if t is Sub:
        return _eval(e.lhs, env) - _eval(e.rhs, env)
    if t is Mul:
        return _eval(e.lhs, env) * _eval(e.rhs, env)
    if t is Div:
        d = _eval(e.rhs, env)
        if d == 0:
            raise NonFiniteResult("division by zero")
        return _eval(e.lhs, env) / d
    if t is Pow:
        try:
            v = _eval(e.base, env) ** _eval(e.exp, env)
        except (OverflowError, ZeroDivisionError) as exc:
            raise NonFiniteResult(str(exc)) from None
        if isinstance(v, complex):
            raise NonFiniteResult("complex power result")
        return v
    if t is Min:
        return min(_eval(e.lhs, env), _eval(e.rhs, env))
    if t is Max:
        return max(_eval(e.lhs, env), _eval(e.rhs, env))
    if t is Ceil:
        return float(math.ceil(_eval(e.arg, env)))
    if t is Floor:
        return float(math.floor(_eval(e.arg, env)))
    if t is Log:
        v = _eval(e.arg, env)
        if v <= 0:
            raise NonFiniteResult(f"log of non-positive value {v}")
        return math.log(v)
    if t is Exp2:
        try:
            return 2.0 ** _eval(e.arg, env)
        except OverflowError as exc:
            raise NonFiniteResult(str(exc)) from None
    if t is Sum:
        lo = _eval(e.lo, env)
        hi = _eval(e.hi, env)
        if lo != int(lo) or hi != int(hi):
            raise NonFiniteResult(f"non-integer sum bounds [{lo}, {hi})")
        total = 0.0
        inner = dict(env)
        for i in range(int(lo), int(hi)):
            inner[e.index] = i
            total += _eval(e.body, inner)
        return total
    if t is Cond:
        if _eval(e.predicate, env):
            return _eval(e.then_expr, env)
        return _eval(e.else_expr, env)
    if t is Cmp:
        a = _eval(e.lhs, env)
        b = _eval(e.rhs, env)
        if e.op == "<":
            return a < b
        if e.op == "<=":
            return a <= b
        if e.op == "=":
            return a == b
        if e.op == ">=":
            return a >= b
        return a > b
    raise TypeError(f"not an expression node: {e!r}")


def free_vars(expr: SymExpr) -> set:
    """Free variable names; Sum indices are bound within their body."""
    out: set = set()
    _free(expr, out, frozenset())
    return out


def _free(e: SymExpr, out: set, bound: frozenset):
    t = type(e)
    if t is Var:
        if e.name not in bound:
            out.add(e.name)
    elif t in (Const, IntConst):
        pass
    elif t is Sum:
        _free(e.lo, out, bound)
        _free(e.hi, out, bound)
        _free(e.body, out, bound | {e.index})
    elif t in (Ceil, Floor, Log, Exp2):
        _free(e.arg, out, bound)
    elif t is Pow:
        _free(e.base, out, bound)
        _free(e.exp, out, bound)
    elif t is Cond:
        _free(e.predicate, out, bound)
        _free(e.then_expr, out, bound)
        _free(e.else_expr, out, bound)
    else:
        _free(e.lhs, out, bound)
        _free(e.rhs, out, bound)


def substitute(expr: SymExpr, mapping: dict) -> SymExpr:
    """Replace free variables by expressions. Sum indices shadow the mapping."""
    if not mapping:
        return expr
    return _subst(expr, mapping)


def _subst(e: SymExpr, m: dict) -> SymExpr:
    t = type(e)
    if t is Var:
        return m.get(e.name, e)
    if t in (Const, IntConst):
        return e
    if t is Sum:
        inner = {k: v for k, v in m.items() if k != e.index}
        return Sum(e.index, _subst(e.lo, m), _subst(e.hi, m), _subst(e.body, inner))
    if t in (Ceil, Floor, Log, Exp2):
        return t(_subst(e.arg, m))
    if t is Pow:
        return Pow(_subst(e.base, m), _subst(e.exp, m))
    if t is Cond:
        return Cond(_subst(e.predicate, m), _subst(e.then_expr, m), _subst(e.else_expr, m))
    if t is Cmp:
        return Cmp(e.op, _subst(e.lhs, m), _subst(e.rhs, m))
    return t(_subst(e.lhs, m), _subst(e.rhs, m))


# ---------------------------------------------------------------------------
# simplification


def _is_const(e: SymExpr) -> bool:
    return type(e) in (Const, IntConst)


def _const(value) -> SymExpr:
    if isinstance(value, int):
        return IntConst(value)
    if isinstance(value, float) and value.is_integer() and abs(value) < 2**53:
        return IntConst(int(value))
    return Const(value)


def _key(e: SymExpr) -> str:
    return to_text(e, "sexpr", _presimplify=False)


def simplify(expr: SymExpr) -> SymExpr:
    """Value-preserving simplification: constant folding, identity removal,
    Add/Mul flattening with a canonical term ordering."""
    t = type(expr)
    if t in (Const, IntConst, Var):
        return expr

    if t in (Add, Mul):
        terms = []
        _flatten(expr, t, terms)
        terms = [simplify(x) for x in terms]
        cval = 0 if t is Add else 1
        rest = []
        for x in terms:
            if _is_const(x):
                cval = cval + x.value if t is Add else cval * x.value
            else:
                rest.append(x)
        if t is Mul and cval == 0:
            return IntConst(0)
        if t is Add and len(rest) > 1:
            # collect like terms: x + x + x -> 3 * x
            rest.sort(key=_key)
            grouped = []
            i = 0
            while i < len(rest):
                j = i
                while j < len(rest) and rest[j] == rest[i]:
                    j += 1
                if j - i > 1:
                    grouped.append(simplify(Mul(IntConst(j - i), rest[i])))
                else:
                    grouped.append(rest[i])
                i = j
            rest = grouped
        rest.sort(key=_key)
        identity = 0 if t is Add else 1
        if cval != identity or not rest:
            rest.insert(0, _const(cval))
        out = rest[0]
        for x in rest[1:]:
            out = t(out, x)
        return out

    if t is Sub:
        a = simplify(expr.lhs)
        b = simplify(expr.rhs)
        if _is_const(a) and _is_const(b):
            return _const(a.value - b.value)
        if _is_const(b) and b.value == 0:
            return a
        if a == b:
            return IntConst(0)
        return Sub(a, b)

    if t is Div:
        a = simplify(expr.lhs)
        b = simplify(expr.rhs)
        if _is_const(b):
            if b.value == 1:
                return a
            if _is_const(a):
                if isinstance(a.value, int) and isinstance(b.value, int) and a.value % b.value == 0:
                    return IntConst(a.value // b.value)
                return _const(a.value / b.value)
        if _is_const(a) and a.value == 0:
            return IntConst(0)
        return Div(a, b)

    if t is Pow:
        a = simplify(expr.base)
        b = simplify(expr.exp)
        if _is_const(b):
            if b.value == 1:
                return a
            if b.value == 0:
                return IntConst(1)
            if _is_const(a):
                return _const(a.value**b.value)
        return Pow(a, b)

    if t in (Min, Max):
        a = simplify(expr.lhs)
        b = simplify(expr.rhs)
        if a == b:
            return a
        if _is_const(a) and _is_const(b):
            v = min(a.value, b.value) if t is Min else max(a.value, b.value)
            return _const(v)
        if _key(b) < _key(a):
            a, b = b, a
        return t(a, b)

    if t in (Ceil, Floor):
        a = simplify(expr.arg)
        if _is_const(a):
            f = math.ceil if t is Ceil else math.floor
            return IntConst(f(a.value))
        if isinstance(a, IntConst) or type(a) in (Ceil, Floor):
            return a
        return t(a)

    if t is Log:
        a = simplify(expr.arg)
        if _is_const(a) and a.value > 0:
            return Const(math.log(a.value))
        return Log(a)

    if t is Exp2:
        a = simplify(expr.arg)
        if _is_const(a):
            return _const(2.0**a.value)
        return Exp2(a)

    if t is Sum:
        lo = simplify(expr.lo)
        hi = simplify(expr.hi)
        body = simplify(expr.body)
        if _is_const(body) and body.value == 0:
            return IntConst(0)
        return Sum(expr.index, lo, hi, body)

    if t is Cond:
        p = simplify(expr.predicate)
        a = simplify(expr.then_expr)
        b = simplify(expr.else_expr)
        if _is_const(p):
            return a if p.value else b
        if a == b:
            return a
        return Cond(p, a, b)

    if t is Cmp:
        a = simplify(expr.lhs)
        b = simplify(expr.rhs)
        if _is_const(a) and _is_const(b):
            return IntConst(int(evaluate(Cmp(expr.op, a, b), {})))
        return Cmp(expr.op, a, b)

    raise TypeError(f"not an expression node: {expr!r}")


def _flatten(e: SymExpr, t, out: list):
    if type(e) is t:
        _flatten(e.lhs, t, out)
        _flatten(e.rhs, t, out)
    else:
        out.append(e)


# ---------------------------------------------------------------------------
# closed-form summation


# Closed forms of sum_{i=0}^{N-1} i^p, written with m = N - 1.
def faulhaber(p: int, N: SymExpr) -> SymExpr:
    """Polynomial of degree p+1 in N equal to sum_{i=0}^{N-1} i^p."""
    if not 0 <= p <= 6:
        raise UnsupportedExponent(f"exponent {p} outside [0, 6]")
    m = Sub(N, ONE)
    if p == 0:
        return simplify(N)
    if p == 1:
        return simplify(Div(Mul(N, m), TWO))
    if p == 2:
        return simplify(Div(Mul(Mul(N, m), Sub(Mul(TWO, N), ONE)), IntConst(6)))
    if p == 3:
        sq = Div(Mul(N, m), TWO)
        return simplify(Mul(sq, sq))
    mp1 = N
    two_m_p1 = Sub(Mul(TWO, N), ONE)
    if p == 4:
        poly = Sub(Add(Mul(IntConst(3), Mul(m, m)), Mul(IntConst(3), m)), ONE)
        return simplify(Div(Mul(Mul(Mul(m, mp1), two_m_p1), poly), IntConst(30)))
    if p == 5:
        poly = Sub(Add(Mul(TWO, Mul(m, m)), Mul(TWO, m)), ONE)
        return simplify(Div(Mul(Mul(Mul(m, m), Mul(mp1, mp1)), poly), IntConst(12)))
    # p == 6
    m2 = Mul(m, m)
    poly = Add(Sub(Add(Mul(IntConst(3), Mul(m2, m2)), Mul(IntConst(6), Mul(m2, m))), Mul(IntConst(3), m)), ONE)
    return simplify(Div(Mul(Mul(Mul(m, mp1), two_m_p1), poly), IntConst(42)))


def _poly_in(e: SymExpr, index: str):
    """Coefficients [c0, c1, ...] st e == sum ck * index^k, or None.

    Coefficients must not mention the index.
    """
    t = type(e)
    if t is Var and e.name == index:
        return [ZERO, ONE]
    if index not in free_vars(e):
        return [e]
    if t is Add:
        a = _poly_in(e.lhs, index)
        b = _poly_in(e.rhs, index)
        if a is None or b is None:
            return None
        out = [ZERO] * max(len(a), len(b))
        for k, c in enumerate(a):
            out[k] = Add(out[k], c)
        for k, c in enumerate(b):
            out[k] = Add(out[k], c)
        return out
    if t is Sub:
        a = _poly_in(e.lhs, index)
        b = _poly_in(e.rhs, index)
        if a is None or b is None:
            return None
        out = [ZERO] * max(len(a), len(b))
        for k, c in enumerate(a):
            out[k] = Add(out[k], c)
        for k, c in enumerate(b):
            out[k] = Sub(out[k], c)
        return out
    if t is Mul:
        a = _poly_in(e.lhs, index)
        b = _poly_in(e.rhs, index)
        if a is None or b is None:
            return None
        out = [ZERO] * (len(a) + len(b) - 1)
        for i, ca in enumerate(a):
            for j, cb in enumerate(b):
                out[i + j] = Add(out[i + j], Mul(ca, cb))
        return out
    if t is Div and index not in free_vars(e.rhs):
        a = _poly_in(e.lhs, index)
        if a is None:
            return None
        return [Div(c, e.rhs) for c in a]
    if t is Pow and isinstance(e.exp, IntConst) and 0 <= e.exp.value <= 6:
        a = _poly_in(e.base, index)
        if a is None:
            return None
        out = [ONE]
        for _ in range(e.exp.value):
            nxt = [ZERO] * (len(out) + len(a) - 1)
            for i, ca in enumerate(out):
                for j, cb in enumerate(a):
                    nxt[i + j] = Add(nxt[i + j], Mul(ca, cb))
            out = nxt
        return out
    return None


def sum_elim(s: Sum):
    """Eliminate a bounded Sum where possible.

    Returns (expr, SummaryKind).  Rules, in order: index-invariant body;
    polynomial body via Faulhaber; Min body bounded by the min of the sums
    (upper bound); Max body bounded by the sum of the sums (upper bound);
    otherwise the Sum is returned unchanged (residual).
    """
    if not isinstance(s, Sum):
        raise TypeError("sum_elim expects a Sum node")
    index, lo, hi = s.index, s.lo, s.hi
    body = simplify(s.body)

    # split additive bodies
    if type(body) in (Add, Sub):
        t = type(body)
        ea, ka = sum_elim(Sum(index, lo, hi, body.lhs))
        eb, kb = sum_elim(Sum(index, lo, hi, body.rhs))
        if t is Sub and kb is not SummaryKind.EXACT:
            # an over-approximated subtrahend would flip the bound direction
            return Sum(index, simplify(lo), simplify(hi), body), SummaryKind.EXACT
        return simplify(t(ea, eb)), ka.combine(kb)

    # factor index-free multiplicands out
    if type(body) is Mul:
        factors = []
        _flatten(body, Mul, factors)
        invariant = [f for f in factors if index not in free_vars(f)]
        varying = [f for f in factors if index in free_vars(f)]
        if invariant and varying:
            core = varying[0]
            for f in varying[1:]:
                core = Mul(core, f)
            inner, kind = sum_elim(Sum(index, lo, hi, core))
            out = inner
            for f in invariant:
                out = Mul(out, f)
            return simplify(out), kind

    trip = Sub(hi, lo)

    if index not in free_vars(body):
        return simplify(Mul(body, trip)), SummaryKind.EXACT

    coeffs = _poly_in(body, index)
    if coeffs is not None and len(coeffs) - 1 <= 6:
        # sum_{i=lo}^{hi-1} i^k = F_k(hi) - F_k(lo)
        total: SymExpr = ZERO
        for k, c in enumerate(coeffs):
            piece = Sub(faulhaber(k, hi), faulhaber(k, lo))
            total = Add(total, Mul(c, piece))
        return simplify(total), SummaryKind.EXACT

    # geometric body: sum_{i=lo}^{hi-1} k^i = (k^hi - k^lo) / (k - 1)
    base = None
    if type(body) is Exp2 and body.arg == Var(index):
        base = TWO
    elif (
        type(body) is Pow
        and body.exp == Var(index)
        and index not in free_vars(body.base)
    ):
        base = body.base
    if base is not None and simplify(base) != ONE:
        num = Sub(Pow(base, hi), Pow(base, lo))
        return simplify(Div(num, Sub(base, ONE))), SummaryKind.EXACT

    if type(body) is Min:
        ea, ka = sum_elim(Sum(index, lo, hi, body.lhs))
        eb, kb = sum_elim(Sum(index, lo, hi, body.rhs))
        return simplify(Min(ea, eb)), SummaryKind.UPPER_BOUND

    if type(body) is Max:
        # sum max(g, h) <= sum g + sum h; max(sum g, sum h) would not be
        # an upper bound, so the sound bound is the sum of both sums.
        ea, ka = sum_elim(Sum(index, lo, hi, body.lhs))
        eb, kb = sum_elim(Sum(index, lo, hi, body.rhs))
        return simplify(Add(ea, eb)), SummaryKind.UPPER_BOUND

    return Sum(index, simplify(lo), simplify(hi), body), SummaryKind.EXACT


# ---------------------------------------------------------------------------
# text emission


def to_text(expr: SymExpr, fmt: str = "sexpr", *, _presimplify: bool = True) -> str:
    """Render *expr* as text.  fmt is one of sexpr | wolfram | latex.

    Expressions are canonicalized (simplified) before emission so that the
    sexpr form round-trips through read_sexpr onto the simplified tree.
    """
    if _presimplify:
        expr = simplify(expr)
    if fmt == "sexpr":
        return _sexpr(expr)
    if fmt == "wolfram":
        return _wolfram(expr, 0)
    if fmt == "latex":
        return _latex(expr)
    raise ValueError(f"unknown format {fmt!r}")


def _num(v) -> str:
    if isinstance(v, int):
        return str(v)
    return repr(v)


_SEXPR_HEADS = {
    Add: "+",
    Sub: "-",
    Mul: "*",
    Div: "/",
    Pow: "^",
    Min: "min",
    Max: "max",
}


def _sexpr(e: SymExpr) -> str:
    t = type(e)
    if t in (Const, IntConst):
        return _num(e.value)
    if t is Var:
        return e.name
    if t in _SEXPR_HEADS:
        return f"({_SEXPR_HEADS[t]} {_sexpr(e.lhs if t is not Pow else e.base)} {_sexpr(e.rhs if t is not Pow else e.exp)})"
    if t is Ceil:
        return f"(ceil {_sexpr(e.arg)})"
    if t is Floor:
        return f"(floor {_sexpr(e.arg)})"
    if t is Log:
        return f"(log {_sexpr(e.arg)})"
    if t is Exp2:
        return f"(exp2 {_sexpr(e.arg)})"
    if t is Sum:
        return f"(sum {e.index} {_sexpr(e.lo)} {_sexpr(e.hi)} {_sexpr(e.body)})"
    if t is Cond:
        return f"(cond {_sexpr(e.predicate)} {_sexpr(e.then_expr)} {_sexpr(e.else_expr)})"
    if t is Cmp:
        return f"({e.op} {_sexpr(e.lhs)} {_sexpr(e.rhs)})"
    raise TypeError(f"not an expression node: {e!r}")


# precedence levels for infix emission
_PREC = {Cmp: 1, Add: 2, Sub: 2, Mul: 3, Div: 3, Pow: 4}


def _wolfram(e: SymExpr, parent_prec: int) -> str:
    t = type(e)
    if t in (Const, IntConst):
        s = _num(e.value)
        return f"({s})" if e.value < 0 and parent_prec > 0 else s
    if t is Var:
        return e.name
    if t in (Add, Sub, Mul, Div, Pow):
        prec = _PREC[t]
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/", Pow: "^"}[t]
        if t is Pow:
            s = f"{_wolfram(e.base, prec + 1)}{op}{_wolfram(e.exp, prec)}"
        else:
            s = f"{_wolfram(e.lhs, prec)}{op}{_wolfram(e.rhs, prec + 1)}"
        return f"({s})" if prec < parent_prec else s
    if t is Min:
        return f"Min[{_wolfram(e.lhs, 0)}, {_wolfram(e.rhs, 0)}]"
    if t is Max:
        return f"Max[{_wolfram(e.lhs, 0)}, {_wolfram(e.rhs, 0)}]"
    if t is Ceil:
        return f"Ceiling[{_wolfram(e.arg, 0)}]"
    if t is Floor:
        return f"Floor[{_wolfram(e.arg, 0)}]"
    if t is Log:
        return f"Log[{_wolfram(e.arg, 0)}]"
    if t is Exp2:
        return f"2^{_wolfram(e.arg, _PREC[Pow])}"
    if t is Sum:
        return (
            f"Sum[{_wolfram(e.body, 0)}, "
            f"{{{e.index}, {_wolfram(e.lo, 0)}, {_wolfram(Sub(e.hi, ONE), 0)}}}]"
        )
    if t is Cond:
        return f"If[{_wolfram(e.predicate, 0)}, {_wolfram(e.then_expr, 0)}, {_wolfram(e.else_expr, 0)}]"
    if t is Cmp:
        op = {"=": "=="}.get(e.op, e.op)
        return f"{_wolfram(e.lhs, 2)} {op} {_wolfram(e.rhs, 2)}"
    raise TypeError(f"not an expression node: {e!r}")


def _latex_var(name: str) -> str:
    if name.startswith("eps_"):
        rest = name[4:].replace("_", r"\_")
        return rf"\varepsilon_{{{rest}}}"
    if name == "eps":
        return r"\varepsilon"
    if "_" in name or len(name) > 1:
        return rf"\mathit{{{name}}}".replace("_", r"\_")
    return name


def _latex(e: SymExpr, parent_prec: int = 0) -> str:
    t = type(e)
    if t in (Const, IntConst):
        return _num(e.value)
    if t is Var:
        return _latex_var(e.name)
    if t in (Add, Sub):
        op = "+" if t is Add else "-"
        prec = 2
        s = f"{_latex(e.lhs, prec)} {op} {_latex(e.rhs, prec + 1)}"
        return rf"\left({s}\right)" if prec < parent_prec else s
    if t is Mul:
        s = rf"{_latex(e.lhs, 3)} \cdot {_latex(e.rhs, 4)}"
        return rf"\left({s}\right)" if 3 < parent_prec else s
    if t is Div:
        return rf"\frac{{{_latex(e.lhs)}}}{{{_latex(e.rhs)}}}"
    if t is Pow:
        return rf"{{{_latex(e.base, 5)}}}^{{{_latex(e.exp)}}}"
    if t is Min:
        return rf"\min\left({_latex(e.lhs)}, {_latex(e.rhs)}\right)"
    if t is Max:
        return rf"\max\left({_latex(e.lhs)}, {_latex(e.rhs)}\right)"
    if t is Ceil:
        return rf"\left\lceil {_latex(e.arg)}\right\rceil"
    if t is Floor:
        return rf"\left\lfloor {_latex(e.arg)}\right\rfloor"
    if t is Log:
        return rf"\log\left({_latex(e.arg)}\right)"
    if t is Exp2:
        return rf"2^{{{_latex(e.arg)}}}"
    if t is Sum:
        return rf"\sum_{{{e.index}={_latex(e.lo)}}}^{{{_latex(Sub(e.hi, ONE))}}} {_latex(e.body, 3)}"
    if t is Cond:
        return (
            rf"\begin{{cases}}{_latex(e.then_expr)} & {_latex(e.predicate)}"
            rf"\\{_latex(e.else_expr)} & \text{{otherwise}}\end{{cases}}"
        )
    if t is Cmp:
        op = {"<": "<", "<=": r"\leq", "=": "=", ">=": r"\geq", ">": ">"}[e.op]
        return f"{_latex(e.lhs, 2)} {op} {_latex(e.rhs, 2)}"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# sexpr reader


def read_sexpr(text: str) -> SymExpr:
    """Parse the sexpr emission format back into an expression tree."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def parse():
        nonlocal pos
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            head = tokens[pos]
            pos += 1
            args = []
            while tokens[pos] != ")":
                args.append(parse())
            pos += 1
            return _build(head, args)
        if tok == ")":
            raise ValueError("unbalanced parenthesis")
        return _atom(tok)

    def _atom(tok: str) -> SymExpr:
        try:
            return IntConst(int(tok))
        except ValueError:
            pass
        try:
            return Const(float(tok))
        except ValueError:
            pass
        return Var(tok)

    def _build(head: str, args) -> SymExpr:
        binary = {
            "+": Add, "-": Sub, "*": Mul, "/": Div, "^": Pow,
            "min": Min, "max": Max,
        }
        if head in binary:
            if len(args) < 2:
                raise ValueError(f"{head} needs at least 2 arguments")
            out = binary[head](args[0], args[1])
            for a in args[2:]:
                out = binary[head](out, a)
            return out
        unary = {"ceil": Ceil, "floor": Floor, "log": Log, "exp2": Exp2}
        if head in unary:
            (a,) = args
            return unary[head](a)
        if head == "sum":
            idx, lo, hi, body = args
            if not isinstance(idx, Var):
                raise ValueError("sum index must be a name")
            return Sum(idx.name, lo, hi, body)
        if head == "cond":
            p, a, b = args
            return Cond(p, a, b)
        if head in CMP_OPS:
            a, b = args
            return Cmp(head, a, b)
        raise ValueError(f"unknown head {head!r}")

    out = parse()
    if pos != len(tokens):
        raise ValueError("trailing tokens after expression")
    return out


# sum of terms left-associated to match the simplifier's Add flattening;
# read_sexpr builds left-associated chains too, so round trips line up.


def equivalence_check(
    e1: SymExpr,
    e2: SymExpr,
    domains: dict,
    trials: int = 100,
    rel_tol: float = 1e-9,
    seed: int = 0,
) -> bool:
    """Randomized pointwise equivalence.

    *domains* maps variable name to (lo, hi); when both endpoints are Python
    ints the variable is sampled as an integer.
    """
    rng = random.Random(seed)
    names = sorted(free_vars(e1) | free_vars(e2))
    for name in names:
        if name not in domains:
            raise MissingVariable(name)
    for _ in range(trials):
        env = {}
        for name in names:
            lo, hi = domains[name]
            if isinstance(lo, int) and isinstance(hi, int):
                env[name] = rng.randint(lo, hi)
            else:
                env[name] = math.exp(rng.uniform(math.log(lo), math.log(hi))) if lo > 0 else rng.uniform(lo, hi)
        v1 = evaluate(e1, env)
        v2 = evaluate(e2, env)
        if abs(v1 - v2) > rel_tol * max(1.0, abs(v1)):
            return False
    return True


# ---------------------------------------------------------------------------
# compilation to a python callable


def _py_src(e: SymExpr, names: dict) -> str:
    x = _py_src
    t = type(e)
    if t in (Const, IntConst):
        return repr(float(e.value))
    if t is Var:
        if e.name not in names:
            raise MissingVariable(e.name)
        return names[e.name]
    if t is Add:
        return f"({x(e.lhs, names)} + {x(e.rhs, names)})"
    if t is Sub:
        return f"({x(e.lhs, names)} - {x(e.rhs, names)})"
    if t is Mul:
        return f"({x(e.lhs, names)} * {x(e.rhs, names)})"
    if t is Div:
        return f"({x(e.lhs, names)} / {x(e.rhs, names)})"
    if t is Pow:
        return f"({x(e.base, names)} ** {x(e.exp, names)})"
    if t is Min:
        return f"min({x(e.lhs, names)}, {x(e.rhs, names)})"
    if t is Max:
        return f"max({x(e.lhs, names)}, {x(e.rhs, names)})"
    if t is Ceil:
        return f"(math.ceil({x(e.arg, names)}) * 1.0)"
    if t is Floor:
        return f"(math.floor({x(e.arg, names)}) * 1.0)"
    if t is Log:
        return f"math.log({x(e.arg, names)})"
    if t is Exp2:
        return f"(2.0 ** {x(e.arg, names)})"
    if t is Cmp:
        op = "==" if e.op == "=" else e.op
        return f"(1.0 if {x(e.lhs, names)} {op} {x(e.rhs, names)} else 0.0)"
    if t is Cond:
        p = e.predicate
        if type(p) is Cmp:
            op = "==" if p.op == "=" else p.op
            pred = f"{x(p.lhs, names)} {op} {x(p.rhs, names)}"
        else:
            pred = f"{x(p, names)} != 0.0"
        return f"({x(e.then_expr, names)} if {pred} else {x(e.else_expr, names)})"
    raise TypeError(f"cannot compile {t.__name__} node")


def compile_expr(expr: SymExpr, order: list):
    """Compile to a positional callable f(v0, v1, ...) following *order*.

    Falls back to an evaluate() closure for nodes without a direct python
    form (residual Sums).
    """
    names = {q: f"_x{i}" for i, q in enumerate(order)}
    args = ", ".join(names[q] for q in order)
    try:
        src = _py_src(expr, names)
    except TypeError:
        def fallback(*values):
            return evaluate(expr, dict(zip(order, values)))
        return fallback
    ns = {"math": math}
    exec(compile(f"def _f({args}):\n    return {src}\n", "<symexpr>", "exec"), ns)
    return ns["_f"]
