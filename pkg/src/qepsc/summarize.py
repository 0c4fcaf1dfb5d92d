"""Closed-form summarization of estimator programs.

Walks an estimator program bottom-up, turning each subroutine into a symbolic
expression over its parameters and the accuracy variables.  Loops become Sum
nodes which are then eliminated where possible (invariant body, polynomial
body via Faulhaber, Min/Max bodies as bounds); data-dependent branches become
Max bounds.  The result is a Summary carrying the expression, its kind
(Exact or UpperBound) and whether any residual Sum survived.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import expr as E
from . import ir
from .errors import NotApplicable


@dataclass(frozen=True, slots=True)
class Summary:
    counter: str
    expression: E.SymExpr
    kind: E.SummaryKind
    symbols: tuple          # entry parameters the expression depends on
    epsilons: tuple         # accuracy variable names appearing in it
    residual_control_flow: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "counter": self.counter,
                "kind": self.kind.value,
                "expression": E.to_text(self.expression, "sexpr"),
                "symbols": list(self.symbols),
                "epsilons": list(self.epsilons),
                "residualControlFlow": self.residual_control_flow,
            },
            indent=2,
        )


def _has_sum(e: E.SymExpr) -> bool:
    if isinstance(e, E.Sum):
        return True
    for f in ("lhs", "rhs", "arg", "base", "exp", "operand", "predicate", "then_expr", "else_expr"):
        child = getattr(e, f, None)
        if child is not None and isinstance(child, E.SymExpr) and _has_sum(child):
            return True
    return False


class _Summarizer:
    def __init__(self, program: ir.Program, counter: str):
        self.program = program
        self.counter = counter
        self.memo: dict = {}

    def subroutine(self, name: str):
        if name in self.memo:
            return self.memo[name]
        sub = self.program.subroutine(name)
        env = {q.name: E.Var(q.name) for q in sub.params}
        result = self.body(sub.body, env)
        self.memo[name] = result
        return result

    def body(self, stmts, env):
        env = dict(env)
        total = E.ZERO
        kind = E.SummaryKind.EXACT
        for st in stmts:
            if isinstance(st, ir.Let):
                env[st.name] = E.simplify(E.substitute(st.value, env))
                continue
            part, pkind = self.stmt(st, env)
            if part is not None:
                total = E.Add(total, part)
                kind = kind.combine(pkind)
        return E.simplify(total), kind

    def stmt(self, st, env):
        if isinstance(st, ir.Increment):
            if st.counter != self.counter:
                return None, E.SummaryKind.EXACT
            return E.substitute(st.amount, env), E.SummaryKind.EXACT
        if isinstance(st, ir.Call):
            body_expr, kind = self.subroutine(st.callee)
            params = [q.name for q in self.program.subroutine(st.callee).params]
            binding = {
                q: E.simplify(E.substitute(a, env)) for q, a in zip(params, st.args)
            }
            return E.substitute(body_expr, binding), kind
        if isinstance(st, ir.For):
            return self.loop(st, env)
        if isinstance(st, ir.If):
            cond = E.simplify(E.substitute(st.cond, env))
            if isinstance(cond, (E.Const, E.IntConst)):
                chosen = st.then_body if cond.value else st.else_body
                return self.body(chosen, env)
            t, tk = self.body(st.then_body, env)
            f, fk = self.body(st.else_body, env)
            if t == f:
                return t, tk.combine(fk)
            return E.Max(t, f), E.SummaryKind.UPPER_BOUND
        if isinstance(st, ir.MeasureBranch):
            t, tk = self.body(st.then_body, env)
            f, fk = self.body(st.else_body, env)
            if t == f:
                kind = tk.combine(fk)
            elif self.counter == "E":
                # either branch runs alone: the diamond norm error of the
                # branching channel is bounded by the larger branch, exactly
                kind = tk.combine(fk)
            else:
                kind = E.SummaryKind.UPPER_BOUND
            return (t if t == f else E.Max(t, f)), kind
        raise TypeError(f"statement {type(st).__name__} not allowed in estimator programs")

    def loop(self, st: ir.For, env):
        from .extract import hoist_conditional

        try:
            st = hoist_conditional(st)
        except NotApplicable:
            pass
        inner_env = dict(env)
        inner_env[st.index] = E.Var(st.index)
        body_expr, kind = self.body(st.body, inner_env)
        lo = E.simplify(E.substitute(st.lo, env))
        hi = E.simplify(E.substitute(st.hi, env))
        summed, skind = E.sum_elim(E.Sum(st.index, lo, hi, body_expr))
        return summed, kind.combine(skind)


def summarize(estimator: ir.Program, counter: str) -> Summary:
    """Summarize one counter of an estimator program into a closed form."""
    s = _Summarizer(estimator, counter)
    body_expr, kind = s.subroutine(estimator.entry_name)
    expr = E.simplify(body_expr)
    fv = E.free_vars(expr)
    params = tuple(q.name for q in estimator.entry.params if q.name in fv)
    eps = tuple(sorted(fv - set(params)))
    return Summary(counter, expr, kind, params, eps, _has_sum(expr))


def summarize_program(
    program: ir.Program,
    counter: str,
    gateset: ir.GateSet | None = None,
    granularity=None,
) -> Summary:
    """Convenience pipeline: don't cares, estimator extraction, summary."""
    from . import extract

    gs = gateset or ir.default_clifford_t()
    g = granularity or extract.Granularity()
    p = extract.substitute_dontcares(program)
    est = (
        extract.make_cost_estimator(p, gs, g)
        if counter == "T"
        else extract.make_error_estimator(p, gs, g)
    )
    return summarize(est, counter)


# ---------------------------------------------------------------------------
# standalone rewrites


def merge_increments(p: ir.Program) -> ir.Program:
    """Fuse runs of adjacent increments to the same counter."""

    def fuse(body):
        out: list = []
        for st in body:
            if isinstance(st, ir.For):
                st = ir.For(st.index, st.lo, st.hi, fuse(st.body), st.loc)
            elif isinstance(st, ir.If):
                st = ir.If(st.cond, fuse(st.then_body), fuse(st.else_body), st.loc)
            elif isinstance(st, ir.MeasureBranch):
                st = ir.MeasureBranch(fuse(st.then_body), fuse(st.else_body))
            if (
                isinstance(st, ir.Increment)
                and out
                and isinstance(out[-1], ir.Increment)
                and out[-1].counter == st.counter
            ):
                prev = out.pop()
                st = ir.Increment(st.counter, E.simplify(E.Add(prev.amount, st.amount)), prev.loc)
            out.append(st)
        return tuple(out)

    subs = tuple(ir.Subroutine(s.name, s.params, fuse(s.body)) for s in p.subroutines)
    return ir.Program(subs, p.entry_name, p.gate_set_ref)


def lift_loop_increment(loop: ir.For) -> ir.Increment:
    """Replace a loop whose body is a single increment by one increment of
    the summed amount; requires the closed form to be exact and sum-free."""
    if len(loop.body) != 1 or not isinstance(loop.body[0], ir.Increment):
        raise NotApplicable("loop body is not a single increment")
    inc = loop.body[0]
    summed, kind = E.sum_elim(E.Sum(loop.index, loop.lo, loop.hi, inc.amount))
    if kind is not E.SummaryKind.EXACT or _has_sum(summed):
        raise NotApplicable("no exact closed form for the loop total")
    return ir.Increment(inc.counter, E.simplify(summed), loop.loc)
