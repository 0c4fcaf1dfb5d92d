"""Concrete reference semantics for estimator programs.

Two execution paths with identical semantics: a plain tree-walking
interpreter (the readable reference) and a compiler that turns the estimator
into Python source, optionally jitted with numba.  Set QEPSC_NO_NUMBA=1 to
force the pure-Python compiled path.  Also provides gate-count instantiation
of full programs and wall-clock timing for the scaling benchmark.
"""

from __future__ import annotations

import json
import math
import os
import statistics
import time
from dataclasses import dataclass, field

from . import expr as E
from . import ir
from .errors import (
    InvalidRepetitions,
    MissingVariable,
    NonFiniteResult,
    NonIntegerBound,
    UnknownGate,
)


def _as_int_bound(v: float) -> int:
    if v != math.floor(v):
        raise NonIntegerBound(f"loop bound {v!r} is not an integer")
    return int(v)


# ---------------------------------------------------------------------------
# tree-walking interpreter


def interpret(ep: ir.Program, env: dict) -> float:
    """Execute the estimator's full control flow, returning the accumulated
    counter total.  MeasureBranch takes the max over both branches."""
    entry = ep.entry
    params = [q.name for q in entry.params if q.kind != "qureg"]
    for q in params:
        if q not in env:
            raise MissingVariable(q)
    total = _run_sub(ep, entry, {q: float(env[q]) for q in params}, env)
    if not math.isfinite(total):
        raise NonFiniteResult(f"counter total is {total!r}")
    return total


def _run_sub(ep: ir.Program, sub: ir.Subroutine, scope: dict, env: dict) -> float:
    return _run_body(ep, sub.body, scope, env)


def _run_body(ep, body, scope, env) -> float:
    acc = 0.0
    for st in body:
        if isinstance(st, ir.Increment):
            acc += _ev(st.amount, scope, env)
        elif isinstance(st, ir.Let):
            scope = dict(scope)
            scope[st.name] = _ev(st.value, scope, env)
        elif isinstance(st, ir.For):
            lo = _as_int_bound(_ev(st.lo, scope, env))
            hi = _as_int_bound(_ev(st.hi, scope, env))
            inner = dict(scope)
            for i in range(lo, hi):
                inner[st.index] = float(i)
                acc += _run_body(ep, st.body, inner, env)
        elif isinstance(st, ir.If):
            branch = st.then_body if _ev(st.cond, scope, env) else st.else_body
            acc += _run_body(ep, branch, scope, env)
        elif isinstance(st, ir.MeasureBranch):
            acc += max(
                _run_body(ep, st.then_body, scope, env),
                _run_body(ep, st.else_body, scope, env),
            )
        elif isinstance(st, ir.Call):
            callee = ep.subroutine(st.callee)
            params = [q.name for q in callee.params if q.kind != "qureg"]
            binding = {q: _ev(a, scope, env) for q, a in zip(params, st.args)}
            acc += _run_sub(ep, callee, binding, env)
        else:
            raise TypeError(f"statement {type(st).__name__} not allowed in estimators")
    return acc


def _ev(e: E.SymExpr, scope: dict, env: dict) -> float:
    merged = dict(env)
    merged.update(scope)
    return E.evaluate(e, merged)


# ---------------------------------------------------------------------------
# compiler: estimator -> python source (optionally numba-jitted)


def _use_numba() -> bool:
    return os.environ.get("QEPSC_NO_NUMBA", "") not in ("1", "true", "yes")


class _PyEmitter:
    """Emits python source for an estimator program."""

    def __init__(self, ep: ir.Program):
        self.ep = ep
        self.lines: list = []
        self.tmp = 0
        self.eps_names = sorted(free_epsilons(ep))
        self.eps_py = {name: f"_e{i}" for i, name in enumerate(self.eps_names)}

    def fresh(self) -> str:
        self.tmp += 1
        return f"_t{self.tmp}"

    def emit(self) -> str:
        self.lines.append("import math")
        for sub in self.ep.subroutines:
            self.func(sub)
        return "\n".join(self.lines)

    def func(self, sub: ir.Subroutine):
        params = [q.name for q in sub.params if q.kind != "qureg"]
        names = {q: f"v_{q}" for q in params}
        args = [names[q] for q in params] + [self.eps_py[e] for e in self.eps_names]
        self.lines.append(f"def f_{sub.name}({', '.join(args)}):")
        self.lines.append("    _acc = 0.0")
        self.body(sub.body, names, 1)
        self.lines.append("    return _acc")
        self.lines.append("")

    def body(self, body, names, depth):
        pad = "    " * depth
        emitted = False
        for st in body:
            emitted = True
            if isinstance(st, ir.Increment):
                self.lines.append(f"{pad}_acc += {self.ex(st.amount, names)}")
            elif isinstance(st, ir.Let):
                names = dict(names)
                names[st.name] = f"v_{st.name}_{self.fresh()}"
                self.lines.append(f"{pad}{names[st.name]} = {self.ex(st.value, names)}")
            elif isinstance(st, ir.For):
                lo, hi = self.fresh(), self.fresh()
                self.lines.append(f"{pad}{lo} = {self.ex(st.lo, names)}")
                self.lines.append(f"{pad}{hi} = {self.ex(st.hi, names)}")
                self.lines.append(
                    f"{pad}if {lo} != math.floor({lo}) or {hi} != math.floor({hi}):"
                )
                self.lines.append(f"{pad}    raise ValueError('non-integer loop bound')")
                inner = dict(names)
                inner[st.index] = f"v_{st.index}_{self.fresh()}"
                self.lines.append(
                    f"{pad}for {inner[st.index]} in range(int({lo}), int({hi})):"
                )
                self.body(st.body, inner, depth + 1)
            elif isinstance(st, ir.If):
                self.lines.append(f"{pad}if {self.pred(st.cond, names)}:")
                self.body(st.then_body, names, depth + 1)
                if st.else_body:
                    self.lines.append(f"{pad}else:")
                    self.body(st.else_body, names, depth + 1)
            elif isinstance(st, ir.MeasureBranch):
                save, then = self.fresh(), self.fresh()
                self.lines.append(f"{pad}{save} = _acc")
                self.body(st.then_body, names, depth)
                self.lines.append(f"{pad}{then} = _acc")
                self.lines.append(f"{pad}_acc = {save}")
                self.body(st.else_body, names, depth)
                self.lines.append(f"{pad}_acc = max({then}, _acc)")
            elif isinstance(st, ir.Call):
                callee = self.ep.subroutine(st.callee)
                params = [q for q in callee.params if q.kind != "qureg"]
                args = [self.ex(a, names) for a in st.args]
                args += [self.eps_py[e] for e in self.eps_names]
                self.lines.append(f"{pad}_acc += f_{st.callee}({', '.join(args)})")
            else:
                raise TypeError(f"statement {type(st).__name__} not allowed in estimators")
        if not emitted:
            self.lines.append(f"{pad}pass")

    def pred(self, e, names) -> str:
        if isinstance(e, E.Cmp):
            op = "==" if e.op == "=" else e.op
            return f"({self.ex(e.lhs, names)} {op} {self.ex(e.rhs, names)})"
        return f"({self.ex(e, names)} != 0.0)"

    def ex(self, e, names) -> str:
        x = self.ex
        if isinstance(e, (E.Const, E.IntConst)):
            return repr(float(e.value))
        if isinstance(e, E.Var):
            if e.name in names:
                return names[e.name]
            if e.name in self.eps_py:
                return self.eps_py[e.name]
            raise MissingVariable(e.name)
        if isinstance(e, E.Add):
            return f"({x(e.lhs, names)} + {x(e.rhs, names)})"
        if isinstance(e, E.Sub):
            return f"({x(e.lhs, names)} - {x(e.rhs, names)})"
        if isinstance(e, E.Mul):
            return f"({x(e.lhs, names)} * {x(e.rhs, names)})"
        if isinstance(e, E.Div):
            return f"({x(e.lhs, names)} / {x(e.rhs, names)})"
        if isinstance(e, E.Pow):
            return f"({x(e.base, names)} ** {x(e.exp, names)})"
        if isinstance(e, E.Min):
            return f"min({x(e.lhs, names)}, {x(e.rhs, names)})"
        if isinstance(e, E.Max):
            return f"max({x(e.lhs, names)}, {x(e.rhs, names)})"
        if isinstance(e, E.Ceil):
            return f"(math.ceil({x(e.arg, names)}) * 1.0)"
        if isinstance(e, E.Floor):
            return f"(math.floor({x(e.arg, names)}) * 1.0)"
        if isinstance(e, E.Log):
            return f"math.log({x(e.arg, names)})"
        if isinstance(e, E.Exp2):
            return f"(2.0 ** {x(e.arg, names)})"
        if isinstance(e, E.Cond):
            return (
                f"({x(e.then_expr, names)} if {self.pred(e.predicate, names)}"
                f" else {x(e.else_expr, names)})"
            )
        if isinstance(e, E.Cmp):
            return f"(1.0 if {self.pred(e, names)} else 0.0)"
        raise TypeError(f"cannot compile {type(e).__name__} node")


def free_epsilons(ep: ir.Program) -> set:
    """Names referenced in a subroutine body but not bound by its parameters,
    lets, or loop indices: the accuracy variables."""
    out: set = set()

    def scan_body(body, bound):
        bound = set(bound)
        for st in body:
            if isinstance(st, ir.Increment):
                out.update(E.free_vars(st.amount) - bound)
            elif isinstance(st, ir.Let):
                out.update(E.free_vars(st.value) - bound)
                bound.add(st.name)
            elif isinstance(st, ir.For):
                out.update((E.free_vars(st.lo) | E.free_vars(st.hi)) - bound)
                scan_body(st.body, bound | {st.index})
            elif isinstance(st, ir.If):
                out.update(E.free_vars(st.cond) - bound)
                scan_body(st.then_body, bound)
                scan_body(st.else_body, bound)
            elif isinstance(st, ir.MeasureBranch):
                scan_body(st.then_body, bound)
                scan_body(st.else_body, bound)
            elif isinstance(st, ir.Call):
                for a in st.args:
                    out.update(E.free_vars(a) - bound)

    for sub in ep.subroutines:
        scan_body(sub.body, {q.name for q in sub.params})
    return out


@dataclass
class CompiledEstimator:
    param_names: tuple
    epsilon_names: tuple
    source: str
    _fn: object
    jitted: bool

    def __call__(self, env: dict) -> float:
        args = []
        for q in self.param_names:
            if q not in env:
                raise MissingVariable(q)
            args.append(float(env[q]))
        for q in self.epsilon_names:
            if q not in env:
                raise MissingVariable(q)
            args.append(float(env[q]))
        try:
            total = self._fn(*args)
        except ValueError as exc:
            raise NonIntegerBound(str(exc)) from exc
        if not math.isfinite(total):
            raise NonFiniteResult(f"counter total is {total!r}")
        return total


def compile_estimator(ep: ir.Program, force_pure: bool = False) -> CompiledEstimator:
    """Compile an estimator program to a callable; numba-jitted unless
    QEPSC_NO_NUMBA is set or force_pure is given."""
    emitter = _PyEmitter(ep)
    src = emitter.emit()
    ns: dict = {}
    exec(compile(src, "<estimator>", "exec"), ns)
    jitted = False
    if _use_numba() and not force_pure:
        import numba

        for sub in ep.subroutines:
            ns[f"f_{sub.name}"] = numba.njit(ns[f"f_{sub.name}"])
        # rebind globals so calls resolve to dispatchers
        for sub in ep.subroutines:
            ns[f"f_{sub.name}"].py_func.__globals__.update(ns)
        jitted = True
    entry = ep.entry
    params = tuple(q.name for q in entry.params if q.kind != "qureg")
    return CompiledEstimator(
        params, tuple(emitter.eps_names), src, ns[f"f_{entry.name}"], jitted
    )


# ---------------------------------------------------------------------------
# gate-count instantiation


@dataclass
class GateCounts:
    counts: dict = field(default_factory=dict)
    t_cost: float = 0.0
    error: float = 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "counts": {k: self.counts[k] for k in sorted(self.counts)},
                "tCost": self.t_cost,
                "error": self.error,
            },
            indent=2,
        )


def instantiate(p: ir.Program, env: dict, gateset: ir.GateSet | None = None) -> GateCounts:
    """Stream the gate sequence (no state simulation), tallying per-gate
    counts and the GateSet-weighted cost/error totals.  Intrinsic gate
    epsilons and declared epsilons read their value from env by name."""
    gs = gateset or ir.default_clifford_t()
    names = p.names()

    def run(sub: ir.Subroutine, scope: dict, gc: GateCounts):
        run_body(sub.body, scope, gc)

    def run_body(body, scope, gc):
        for st in body:
            if isinstance(st, (ir.GateCall, ir.Call)) and (
                isinstance(st, ir.GateCall) or st.callee not in names
            ):
                gate = st.gate if isinstance(st, ir.GateCall) else st.callee
                if gate not in gs:
                    raise UnknownGate(gate)
                gd = gs[gate]
                gc.counts[gate] = gc.counts.get(gate, 0) + 1
                gc.t_cost += _ev(gd.t_cost, {}, env)
                gc.error += _ev(gd.error_contribution, {}, env)
            elif isinstance(st, ir.Call):
                callee = p.subroutine(st.callee)
                params = [q.name for q in callee.params if q.kind != "qureg"]
                binding = {q: _ev(a, scope, env) for q, a in zip(params, st.args)}
                run(callee, binding, gc)
            elif isinstance(st, ir.EpsilonDecl):
                if st.name not in env:
                    raise MissingVariable(st.name)
                gc.error += float(env[st.name])
            elif isinstance(st, ir.Let):
                scope = dict(scope)
                scope[st.name] = _ev(st.value, scope, env)
            elif isinstance(st, ir.For):
                lo = _as_int_bound(_ev(st.lo, scope, env))
                hi = _as_int_bound(_ev(st.hi, scope, env))
                inner = dict(scope)
                for i in range(lo, hi):
                    inner[st.index] = float(i)
                    run_body(st.body, inner, gc)
            elif isinstance(st, ir.If):
                branch = st.then_body if _ev(st.cond, scope, env) else st.else_body
                run_body(branch, scope, gc)
            elif isinstance(st, ir.MeasureBranch):
                a, b = GateCounts(), GateCounts()
                run_body(st.then_body, scope, a)
                run_body(st.else_body, scope, b)
                # totals take the max per counter; counts follow the branch
                # with the larger cost
                big = a if a.t_cost >= b.t_cost else b
                for k, v in big.counts.items():
                    gc.counts[k] = gc.counts.get(k, 0) + v
                gc.t_cost += max(a.t_cost, b.t_cost)
                gc.error += max(a.error, b.error)
            elif isinstance(st, ir.Increment):
                pass  # user-level counters do not contribute gates
            else:
                raise TypeError(f"unexpected statement {type(st).__name__}")

    entry = p.entry
    params = [q.name for q in entry.params if q.kind != "qureg"]
    for q in params:
        if q not in env:
            raise MissingVariable(q)
    gc = GateCounts()
    run(entry, {q: float(env[q]) for q in params}, gc)
    return gc


# ---------------------------------------------------------------------------
# timing


def time_estimate(ep: ir.Program, env: dict, repetitions: int) -> dict:
    """Median wall-clock nanoseconds for one estimator evaluation, measured
    over `repetitions` runs of the compiled form (compile time excluded)."""
    if repetitions < 1:
        raise InvalidRepetitions(f"repetitions must be >= 1, got {repetitions}")
    fn = compile_estimator(ep)
    fn(env)  # warm-up (numba compilation happens here)
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter_ns()
        fn(env)
        samples.append(time.perf_counter_ns() - t0)
    return {
        "median_ns": float(statistics.median(samples)),
        "min_ns": float(min(samples)),
        "mean_ns": float(statistics.fmean(samples)),
        "repetitions": repetitions,
    }
