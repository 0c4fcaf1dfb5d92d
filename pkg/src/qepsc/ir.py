"""Quantum-DSL abstract syntax tree, gate-set cost models, validation,
pretty-printing and JSON import/export."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import expr as E
from .errors import ConfigError

KINDS = ("int", "real", "qureg")
COUNTERS = ("T", "E")


@dataclass(frozen=True, slots=True)
class Loc:
    line: int = 0
    col: int = 0


_NOLOC = Loc()


@dataclass(frozen=True, slots=True)
class Param:
    name: str
    kind: str
    dont_care: bool = False


class Stmt:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class GateCall(Stmt):
    gate: str
    args: tuple
    loc: Loc = field(default=_NOLOC, compare=False)


@dataclass(frozen=True, slots=True)
class Call(Stmt):
    callee: str
    args: tuple
    loc: Loc = field(default=_NOLOC, compare=False)


@dataclass(frozen=True, slots=True)
class For(Stmt):
    index: str
    lo: E.SymExpr
    hi: E.SymExpr
    body: tuple
    loc: Loc = field(default=_NOLOC, compare=False)


@dataclass(frozen=True, slots=True)
class If(Stmt):
    cond: E.SymExpr
    then_body: tuple
    else_body: tuple
    loc: Loc = field(default=_NOLOC, compare=False)


@dataclass(frozen=True, slots=True)
class EpsilonDecl(Stmt):
    name: str
    loc: Loc = field(default=_NOLOC, compare=False)


@dataclass(frozen=True, slots=True)
class Let(Stmt):
    name: str
    value: E.SymExpr
    loc: Loc = field(default=_NOLOC, compare=False)


@dataclass(frozen=True, slots=True)
class MeasureBranch(Stmt):
    then_body: tuple
    else_body: tuple
    loc: Loc = field(default=_NOLOC, compare=False)


@dataclass(frozen=True, slots=True)
class Increment(Stmt):
    """Counter increment; appears only in estimator programs and dumps."""

    counter: str
    amount: E.SymExpr
    loc: Loc = field(default=_NOLOC, compare=False)


@dataclass(frozen=True, slots=True)
class Subroutine:
    name: str
    params: tuple
    body: tuple


@dataclass(frozen=True, slots=True)
class Program:
    subroutines: tuple
    entry_name: str
    gate_set_ref: str = "clifford+t"

    def subroutine(self, name: str) -> Subroutine:
        for s in self.subroutines:
            if s.name == name:
                return s
        raise KeyError(name)

    @property
    def entry(self) -> Subroutine:
        return self.subroutine(self.entry_name)

    def names(self):
        return {s.name for s in self.subroutines}


# ---------------------------------------------------------------------------
# gate sets


@dataclass(frozen=True, slots=True)
class GateDef:
    t_cost: E.SymExpr
    error_contribution: E.SymExpr
    intrinsic_epsilon: str | None = None


@dataclass(frozen=True, slots=True)
class GateSet:
    name: str
    gates: dict

    def __contains__(self, gate: str) -> bool:
        return gate in self.gates

    def __getitem__(self, gate: str) -> GateDef:
        return self.gates[gate]


def _rotation_gate(eps_name: str = "eps_R") -> GateDef:
    eps = E.Var(eps_name)
    return GateDef(
        t_cost=E.Mul(E.Const(1.5), E.log2(E.Div(E.ONE, eps))),
        error_contribution=eps,
        intrinsic_epsilon=eps_name,
    )


def default_clifford_t() -> GateSet:
    zero = GateDef(E.ZERO, E.ZERO)
    gates = {g: zero for g in ("H", "S", "CNOT", "X", "Z", "M")}
    gates["T"] = GateDef(E.ONE, E.ZERO)
    gates["Rz"] = _rotation_gate()
    gates["Rx"] = _rotation_gate()
    return GateSet("clifford+t", gates)


def load_gateset(doc: str) -> GateSet:
    """Parse a gate-set config (JSON text).

    Starts from the Clifford+T defaults; a top-level ``gates`` object
    overrides or adds entries.  Each entry may set ``tCost`` and
    ``errorContribution`` (expressions over the entry's ``intrinsicEpsilon``
    or constants).  ``"replace": true`` drops the defaults entirely.
    """
    from .parser import parse_cexpr

    doc = doc.strip()
    if not doc:
        return default_clifford_t()
    try:
        data = json.loads(doc)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", str(exc)) from None
    if not isinstance(data, dict):
        raise ConfigError("<document>", "expected a JSON object")

    base = default_clifford_t()
    gates = {} if data.get("replace") else dict(base.gates)
    for gname, entry in (data.get("gates") or {}).items():
        if not isinstance(entry, dict):
            raise ConfigError(gname, "expected an object")
        intrinsic = entry.get("intrinsicEpsilon")
        if intrinsic is not None and not isinstance(intrinsic, str):
            raise ConfigError(gname, "intrinsicEpsilon must be a string")
        prev = gates.get(gname)

        def _expr(key, default):
            raw = entry.get(key)
            if raw is None:
                return default
            if isinstance(raw, (int, float)):
                return E._coerce(raw)
            if not isinstance(raw, str):
                raise ConfigError(gname, f"{key} must be a number or expression string")
            try:
                return parse_cexpr(raw)
            except Exception as exc:
                raise ConfigError(gname, f"{key}: {exc}") from None

        t_cost = _expr("tCost", prev.t_cost if prev else E.ZERO)
        error = _expr("errorContribution", prev.error_contribution if prev else E.ZERO)
        if intrinsic is None and prev is not None:
            intrinsic = prev.intrinsic_epsilon
        refs = E.free_vars(t_cost) | E.free_vars(error)
        if refs - ({intrinsic} if intrinsic else set()):
            raise ConfigError(gname, f"unexpected free variables {sorted(refs)}")
        if intrinsic is not None and intrinsic not in refs:
            intrinsic = None
        gates[gname] = GateDef(t_cost, error, intrinsic)
    return GateSet(str(data.get("name", "custom")), gates)


def load_gateset_file(path: str) -> GateSet:
    with open(path, encoding="utf-8") as fh:
        return load_gateset(fh.read())


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True, slots=True)
class Diagnostic:
    code: str
    message: str
    loc: Loc = field(default=_NOLOC, compare=False)

    def __str__(self):
        return f"{self.code}: {self.message}"


def validate(program: Program, gateset: GateSet | None = None) -> list:
    """Check program invariants; returns a list of Diagnostics (empty = ok)."""
    gs = gateset or default_clifford_t()
    diags: list = []
    names = [s.name for s in program.subroutines]
    seen = set()
    for n in names:
        if n in seen:
            diags.append(Diagnostic("DuplicateSubroutine", f"subroutine {n!r} defined twice"))
        seen.add(n)
    if program.entry_name not in seen:
        diags.append(Diagnostic("MissingEntry", f"entry {program.entry_name!r} not defined"))

    calls: dict = {s.name: set() for s in program.subroutines}

    for sub in program.subroutines:
        pseen = set()
        for p in sub.params:
            if p.name in pseen:
                diags.append(Diagnostic("DuplicateParam", f"{sub.name}: parameter {p.name!r} repeated"))
            pseen.add(p.name)
            if p.kind not in KINDS:
                diags.append(Diagnostic("BadKind", f"{sub.name}: unknown kind {p.kind!r}"))
            if p.dont_care and p.kind == "qureg":
                diags.append(Diagnostic("DontCareKind", f"{sub.name}: don't care on qureg parameter {p.name!r}"))
        eps_seen: set = set()
        _validate_body(sub, sub.body, pseen.copy(), eps_seen, program, gs, diags, calls[sub.name])

    # call-graph acyclicity (DFS over known names)
    color: dict = {}

    def dfs(n: str) -> bool:
        color[n] = 1
        for m in calls.get(n, ()):
            if m not in calls:
                continue
            c = color.get(m, 0)
            if c == 1:
                return True
            if c == 0 and dfs(m):
                return True
        color[n] = 2
        return False

    for n in calls:
        if color.get(n, 0) == 0 and dfs(n):
            diags.append(Diagnostic("RecursiveCall", f"call cycle through {n!r}"))
            break
    return diags


def _validate_body(sub, body, scope, eps_seen, program, gs, diags, callees):
    for st in body:
        if isinstance(st, EpsilonDecl):
            if st.name in eps_seen:
                diags.append(Diagnostic("DuplicateEpsilon", f"{sub.name}: epsilon {st.name!r} repeated", st.loc))
            eps_seen.add(st.name)
            scope.add(st.name)
        elif isinstance(st, Let):
            _check_expr(sub, st.value, scope, diags, st.loc)
            scope.add(st.name)
        elif isinstance(st, For):
            _check_expr(sub, st.lo, scope, diags, st.loc)
            _check_expr(sub, st.hi, scope, diags, st.loc)
            if st.index in scope:
                diags.append(Diagnostic("ShadowedIndex", f"{sub.name}: loop index {st.index!r} shadows a name", st.loc))
            inner = scope | {st.index}
            _validate_body(sub, st.body, inner, eps_seen, program, gs, diags, callees)
        elif isinstance(st, If):
            _check_expr(sub, st.cond, scope, diags, st.loc)
            _validate_body(sub, st.then_body, scope.copy(), eps_seen, program, gs, diags, callees)
            _validate_body(sub, st.else_body, scope.copy(), eps_seen, program, gs, diags, callees)
        elif isinstance(st, MeasureBranch):
            _validate_body(sub, st.then_body, scope.copy(), eps_seen, program, gs, diags, callees)
            _validate_body(sub, st.else_body, scope.copy(), eps_seen, program, gs, diags, callees)
        elif isinstance(st, (Call, GateCall)):
            name = st.callee if isinstance(st, Call) else st.gate
            for a in st.args:
                _check_expr(sub, a, scope, diags, st.loc)
            if name in program.names():
                callees.add(name)
                target = program.subroutine(name)
                nclassical = len(st.args)
                accepts = [p for p in target.params if p.kind != "qureg"]
                if nclassical != len(accepts):
                    diags.append(
                        Diagnostic(
                            "ArityMismatch",
                            f"{sub.name}: {name} expects {len(accepts)} classical arguments, got {nclassical}",
                            st.loc,
                        )
                    )
            elif name not in gs:
                diags.append(Diagnostic("UnresolvedCallee", f"{sub.name}: unknown callee {name!r}", st.loc))
        elif isinstance(st, Increment):
            if st.counter not in COUNTERS:
                diags.append(Diagnostic("BadCounter", f"{sub.name}: unknown counter {st.counter!r}", st.loc))
            _check_expr(sub, st.amount, scope, diags, st.loc, allow_free=True)
        else:
            diags.append(Diagnostic("BadStatement", f"{sub.name}: unexpected statement {st!r}"))


def _check_expr(sub, e, scope, diags, loc, allow_free=False):
    if allow_free:
        return
    for name in sorted(E.free_vars(e)):
        if name not in scope:
            diags.append(Diagnostic("UnresolvedName", f"{sub.name}: name {name!r} not in scope", loc))


# ---------------------------------------------------------------------------
# pretty printer


def emit_dsl(program: Program) -> str:
    out = []
    for sub in program.subroutines:
        params = ", ".join(
            ("@dontcare " if p.dont_care else "") + f"{p.name}: {p.kind}" for p in sub.params
        )
        out.append(f"def {sub.name}({params}) {{")
        _emit_body(sub.body, out, 1)
        out.append("}")
        out.append("")
    return "\n".join(out)


def _emit_body(body, out, depth):
    pad = "    " * depth
    for st in body:
        if isinstance(st, EpsilonDecl):
            out.append(f"{pad}epsilon {st.name};")
        elif isinstance(st, Let):
            out.append(f"{pad}let {st.name} = {emit_cexpr(st.value)};")
        elif isinstance(st, For):
            out.append(f"{pad}for {st.index} in {emit_cexpr(st.lo)} .. {emit_cexpr(st.hi)} {{")
            _emit_body(st.body, out, depth + 1)
            out.append(pad + "}")
        elif isinstance(st, If):
            out.append(f"{pad}if {emit_cexpr(st.cond)} {{")
            _emit_body(st.then_body, out, depth + 1)
            if st.else_body:
                out.append(pad + "} else {")
                _emit_body(st.else_body, out, depth + 1)
            out.append(pad + "}")
        elif isinstance(st, MeasureBranch):
            out.append(f"{pad}ifmeasure {{")
            _emit_body(st.then_body, out, depth + 1)
            if st.else_body:
                out.append(pad + "} else {")
                _emit_body(st.else_body, out, depth + 1)
            out.append(pad + "}")
        elif isinstance(st, (Call, GateCall)):
            name = st.callee if isinstance(st, Call) else st.gate
            args = ", ".join(emit_cexpr(a) for a in st.args)
            out.append(f"{pad}{name}({args});")
        elif isinstance(st, Increment):
            out.append(f"{pad}inc {st.counter} {emit_cexpr(st.amount)};")
        else:
            raise TypeError(f"cannot emit {st!r}")


def emit_cexpr(e: E.SymExpr, parent_prec: int = 0) -> str:
    t = type(e)
    if t in (E.Const, E.IntConst):
        s = repr(e.value) if isinstance(e.value, float) else str(e.value)
        return f"({s})" if e.value < 0 and parent_prec > 0 else s
    if t is E.Var:
        return e.name
    infix = {E.Add: ("+", 2), E.Sub: ("-", 2), E.Mul: ("*", 3), E.Div: ("/", 3)}
    if t in infix:
        op, prec = infix[t]
        s = f"{emit_cexpr(e.lhs, prec)} {op} {emit_cexpr(e.rhs, prec + 1)}"
        return f"({s})" if prec < parent_prec else s
    if t is E.Pow:
        s = f"{emit_cexpr(e.base, 5)} ^ {emit_cexpr(e.exp, 4)}"
        return f"({s})" if 4 < parent_prec else s
    if t is E.Min:
        return f"min({emit_cexpr(e.lhs)}, {emit_cexpr(e.rhs)})"
    if t is E.Max:
        return f"max({emit_cexpr(e.lhs)}, {emit_cexpr(e.rhs)})"
    if t is E.Ceil:
        return f"ceil({emit_cexpr(e.arg)})"
    if t is E.Floor:
        return f"floor({emit_cexpr(e.arg)})"
    if t is E.Log:
        return f"log({emit_cexpr(e.arg)})"
    if t is E.Exp2:
        return f"2 ^ {emit_cexpr(e.arg, 5)}"
    if t is E.Cmp:
        return f"{emit_cexpr(e.lhs, 2)} {e.op} {emit_cexpr(e.rhs, 2)}"
    if t is E.Cond:
        # no surface syntax; only reachable from synthetic ASTs
        return f"cond({emit_cexpr(e.predicate)}, {emit_cexpr(e.then_expr)}, {emit_cexpr(e.else_expr)})"
    raise TypeError(f"cannot emit classical expression {e!r}")


# ---------------------------------------------------------------------------
# JSON AST


def expr_to_json(e: E.SymExpr):
    t = type(e)
    if t is E.Const:
        return {"node": "Const", "value": e.value}
    if t is E.IntConst:
        return {"node": "IntConst", "value": e.value}
    if t is E.Var:
        return {"node": "Var", "name": e.name}
    if t in (E.Add, E.Sub, E.Mul, E.Div, E.Min, E.Max, E.Cmp):
        d = {"node": t.__name__, "lhs": expr_to_json(e.lhs), "rhs": expr_to_json(e.rhs)}
        if t is E.Cmp:
            d["op"] = e.op
        return d
    if t is E.Pow:
        return {"node": "Pow", "base": expr_to_json(e.base), "exp": expr_to_json(e.exp)}
    if t in (E.Ceil, E.Floor, E.Log, E.Exp2):
        return {"node": t.__name__, "arg": expr_to_json(e.arg)}
    if t is E.Sum:
        return {
            "node": "Sum",
            "index": e.index,
            "lo": expr_to_json(e.lo),
            "hi": expr_to_json(e.hi),
            "body": expr_to_json(e.body),
        }
    if t is E.Cond:
        return {
            "node": "Cond",
            "predicate": expr_to_json(e.predicate),
            "thenExpr": expr_to_json(e.then_expr),
            "elseExpr": expr_to_json(e.else_expr),
        }
    raise TypeError(f"cannot serialize {e!r}")


def expr_from_json(d) -> E.SymExpr:
    node = d["node"]
    if node == "Const":
        return E.Const(float(d["value"]))
    if node == "IntConst":
        return E.IntConst(int(d["value"]))
    if node == "Var":
        return E.Var(d["name"])
    if node == "Cmp":
        return E.Cmp(d["op"], expr_from_json(d["lhs"]), expr_from_json(d["rhs"]))
    if node in ("Add", "Sub", "Mul", "Div", "Min", "Max"):
        cls = getattr(E, node)
        return cls(expr_from_json(d["lhs"]), expr_from_json(d["rhs"]))
    if node == "Pow":
        return E.Pow(expr_from_json(d["base"]), expr_from_json(d["exp"]))
    if node in ("Ceil", "Floor", "Log", "Exp2"):
        return getattr(E, node)(expr_from_json(d["arg"]))
    if node == "Sum":
        return E.Sum(d["index"], expr_from_json(d["lo"]), expr_from_json(d["hi"]), expr_from_json(d["body"]))
    if node == "Cond":
        return E.Cond(
            expr_from_json(d["predicate"]),
            expr_from_json(d["thenExpr"]),
            expr_from_json(d["elseExpr"]),
        )
    raise ValueError(f"unknown expression node {node!r}")


def _stmt_to_json(st: Stmt):
    if isinstance(st, GateCall):
        return {"node": "GateCall", "gate": st.gate, "args": [expr_to_json(a) for a in st.args]}
    if isinstance(st, Call):
        return {"node": "Call", "callee": st.callee, "args": [expr_to_json(a) for a in st.args]}
    if isinstance(st, For):
        return {
            "node": "For",
            "index": st.index,
            "lo": expr_to_json(st.lo),
            "hi": expr_to_json(st.hi),
            "body": [_stmt_to_json(s) for s in st.body],
        }
    if isinstance(st, If):
        return {
            "node": "If",
            "cond": expr_to_json(st.cond),
            "thenBody": [_stmt_to_json(s) for s in st.then_body],
            "elseBody": [_stmt_to_json(s) for s in st.else_body],
        }
    if isinstance(st, EpsilonDecl):
        return {"node": "EpsilonDecl", "name": st.name}
    if isinstance(st, Let):
        return {"node": "Let", "name": st.name, "value": expr_to_json(st.value)}
    if isinstance(st, MeasureBranch):
        return {
            "node": "MeasureBranch",
            "thenBody": [_stmt_to_json(s) for s in st.then_body],
            "elseBody": [_stmt_to_json(s) for s in st.else_body],
        }
    if isinstance(st, Increment):
        return {"node": "Increment", "counterId": st.counter, "amount": expr_to_json(st.amount)}
    raise TypeError(f"cannot serialize {st!r}")


def _stmt_from_json(d) -> Stmt:
    node = d["node"]
    if node == "GateCall":
        return GateCall(d["gate"], tuple(expr_from_json(a) for a in d["args"]))
    if node == "Call":
        return Call(d["callee"], tuple(expr_from_json(a) for a in d["args"]))
    if node == "For":
        return For(
            d["index"],
            expr_from_json(d["lo"]),
            expr_from_json(d["hi"]),
            tuple(_stmt_from_json(s) for s in d["body"]),
        )
    if node == "If":
        return If(
            expr_from_json(d["cond"]),
            tuple(_stmt_from_json(s) for s in d["thenBody"]),
            tuple(_stmt_from_json(s) for s in d["elseBody"]),
        )
    if node == "EpsilonDecl":
        return EpsilonDecl(d["name"])
    if node == "Let":
        return Let(d["name"], expr_from_json(d["value"]))
    if node == "MeasureBranch":
        return MeasureBranch(
            tuple(_stmt_from_json(s) for s in d["thenBody"]),
            tuple(_stmt_from_json(s) for s in d["elseBody"]),
        )
    if node == "Increment":
        return Increment(d["counterId"], expr_from_json(d["amount"]))
    raise ValueError(f"unknown statement node {node!r}")


def program_to_json(p: Program) -> dict:
    return {
        "entryName": p.entry_name,
        "gateSetRef": p.gate_set_ref,
        "subroutines": [
            {
                "name": s.name,
                "params": [{"name": q.name, "kind": q.kind, "dontCare": q.dont_care} for q in s.params],
                "body": [_stmt_to_json(st) for st in s.body],
            }
            for s in p.subroutines
        ],
    }


def program_from_json(d: dict) -> Program:
    subs = tuple(
        Subroutine(
            s["name"],
            tuple(Param(q["name"], q["kind"], bool(q.get("dontCare"))) for q in s.get("params", [])),
            tuple(_stmt_from_json(st) for st in s.get("body", [])),
        )
        for d_subs in [d["subroutines"]]
        for s in d_subs
    )
    return Program(subs, d["entryName"], d.get("gateSetRef", "clifford+t"))
