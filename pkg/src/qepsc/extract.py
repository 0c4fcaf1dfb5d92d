"""AST transformations deriving the cost/error estimator programs.

Gate calls become ``inc T <cost>`` statements, epsilon declarations become
``inc E <eps>`` statements; classical control flow is preserved verbatim.
Accuracy parameters are inventoried with configurable call-path granularity:
at depth 0 every declaration site yields one shared variable, deeper settings
split by the trailing call-site labels ("callee@stmtIndex") of the context.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import expr as E
from . import ir
from .errors import NotApplicable, UnknownGate

UNLIMITED = -1
EPSILON_DOMAIN = (1e-18, 0.5)


@dataclass(frozen=True, slots=True)
class Granularity:
    context_depth: int = 0  # UNLIMITED for fully split

    def truncate(self, path: tuple) -> tuple:
        if self.context_depth == UNLIMITED:
            return path
        if self.context_depth == 0:
            return ()
        return path[-self.context_depth:]


@dataclass(frozen=True, slots=True)
class EpsilonVar:
    source_name: str
    context_path: tuple
    mangled_name: str
    domain: tuple = EPSILON_DOMAIN


# ---------------------------------------------------------------------------
# don't cares


_DEFAULTS = {"int": E.IntConst(0), "real": E.Const(0.0)}


def substitute_dontcares(p: ir.Program) -> ir.Program:
    """Replace every argument bound to a don't-care parameter by the kind's
    default value (int 0, real 0.0)."""
    sig = {s.name: [q for q in s.params if q.kind != "qureg"] for s in p.subroutines}

    def fix_call(st: ir.Call) -> ir.Call:
        params = sig.get(st.callee)
        if params is None:
            return st
        args = tuple(
            _DEFAULTS[q.kind] if q.dont_care else a
            for a, q in zip(st.args, params)
        )
        return ir.Call(st.callee, args, st.loc)

    def fix_body(body):
        out = []
        for st in body:
            if isinstance(st, ir.Call):
                out.append(fix_call(st))
            elif isinstance(st, ir.For):
                out.append(ir.For(st.index, st.lo, st.hi, fix_body(st.body), st.loc))
            elif isinstance(st, ir.If):
                out.append(ir.If(st.cond, fix_body(st.then_body), fix_body(st.else_body), st.loc))
            elif isinstance(st, ir.MeasureBranch):
                out.append(ir.MeasureBranch(fix_body(st.then_body), fix_body(st.else_body)))
            else:
                out.append(st)
        return tuple(out)

    subs = tuple(ir.Subroutine(s.name, s.params, fix_body(s.body)) for s in p.subroutines)
    return ir.Program(subs, p.entry_name, p.gate_set_ref)


# ---------------------------------------------------------------------------
# call-path walking


def _numbered(body, counter=None):
    """Yield (preorder_index, stmt) for call-ish statements of a body."""
    if counter is None:
        counter = [0]
    for st in body:
        idx = counter[0]
        counter[0] += 1
        yield idx, st
        if isinstance(st, ir.For):
            yield from _numbered(st.body, counter)
        elif isinstance(st, (ir.If, ir.MeasureBranch)):
            yield from _numbered(st.then_body, counter)
            yield from _numbered(st.else_body, counter)


def _walk_sites(p: ir.Program, gs: ir.GateSet, path: tuple, sub: ir.Subroutine, out: list, seen: set):
    """Collect (site_key, source_name, full_path) for every epsilon
    declaration site reachable from *sub* along call path *path*."""
    key = (sub.name, path)
    if key in seen:
        return
    seen.add(key)
    for idx, st in _numbered(sub.body):
        if isinstance(st, ir.EpsilonDecl):
            out.append(((sub.name, st.name), st.name, path))
        elif isinstance(st, ir.Call):
            if st.callee in p.names():
                _walk_sites(p, gs, path + (f"{st.callee}@{idx}",), p.subroutine(st.callee), out, seen)
            elif st.callee in gs:
                gd = gs[st.callee]
                if gd.intrinsic_epsilon:
                    out.append(
                        ((None, gd.intrinsic_epsilon), gd.intrinsic_epsilon, path + (f"{st.callee}@{idx}",))
                    )
        elif isinstance(st, ir.GateCall):
            if st.gate not in gs:
                raise UnknownGate(st.gate)
            gd = gs[st.gate]
            if gd.intrinsic_epsilon:
                out.append(((None, gd.intrinsic_epsilon), gd.intrinsic_epsilon, path + (f"{st.gate}@{idx}",)))


def _mangle(ctx: tuple, name: str) -> str:
    return "::".join(ctx + (name,)) if ctx else name


def collect_epsilons(p: ir.Program, g: Granularity = Granularity(), gateset: ir.GateSet | None = None) -> list:
    """One EpsilonVar per (declaration site x distinct truncated context)."""
    gs = gateset or ir.default_clifford_t()
    raw: list = []
    _walk_sites(p, gs, (), p.entry, raw, set())
    # for decl sites (inside a subroutine) the declaring call path is the
    # context; gate intrinsics already carry their gate label in the path
    grouped: dict = {}
    for site, src, path in raw:
        ctx = g.truncate(path)
        grouped.setdefault((site, ctx), src)
    # disambiguate name collisions between distinct declaration sites
    by_name: dict = {}
    for (site, ctx), src in grouped.items():
        by_name.setdefault(_mangle(ctx, src), set()).add(site)
    out = []
    emitted = set()
    for (site, ctx), src in sorted(grouped.items(), key=lambda kv: (kv[0][1], str(kv[0][0]))):
        name = _mangle(ctx, src)
        if len(by_name[name]) > 1 and site[0] is not None:
            name = _mangle(ctx, f"{site[0]}::{src}")
        if name in emitted:
            continue
        emitted.add(name)
        out.append(EpsilonVar(src, ctx, name))
    return out


def epsilon_mangler(p: ir.Program, g: Granularity, gateset: ir.GateSet | None = None):
    """Returns mangle(site, path) -> variable name, consistent with
    collect_epsilons."""
    gs = gateset or ir.default_clifford_t()
    raw: list = []
    _walk_sites(p, gs, (), p.entry, raw, set())
    grouped: dict = {}
    for site, src, path in raw:
        grouped.setdefault((site, g.truncate(path)), src)
    by_name: dict = {}
    for (site, ctx), src in grouped.items():
        by_name.setdefault(_mangle(ctx, src), set()).add(site)

    def mangle(site, path):
        ctx = g.truncate(path)
        src = site[1]
        name = _mangle(ctx, src)
        if len(by_name.get(name, ())) > 1 and site[0] is not None:
            name = _mangle(ctx, f"{site[0]}::{src}")
        return name

    return mangle


# ---------------------------------------------------------------------------
# estimator construction


def _clone_name(base: str, ctx: tuple) -> str:
    if not ctx:
        return base
    suffix = "_".join(lbl.replace("@", "_") for lbl in ctx)
    return f"{base}__{suffix}"


@dataclass
class _Specializer:
    program: ir.Program
    gs: ir.GateSet
    g: Granularity
    counter: str
    mangle: object
    clones: dict = field(default_factory=dict)
    order: list = field(default_factory=list)

    def request(self, sub_name: str, path: tuple) -> str:
        ctx = self.g.truncate(path)
        key = (sub_name, ctx)
        if key in self.clones:
            return self.clones[key]
        name = _clone_name(sub_name, ctx)
        self.clones[key] = name
        sub = self.program.subroutine(sub_name)
        params = tuple(q for q in sub.params if q.kind != "qureg")
        body = self._convert(sub_name, sub.body, path, [0])
        self.order.append(ir.Subroutine(name, params, body))
        return name

    def _convert(self, owner, body, path, counter):
        out = []
        for st in body:
            idx = counter[0]
            counter[0] += 1
            if isinstance(st, ir.EpsilonDecl):
                if self.counter == "E":
                    name = self.mangle((owner, st.name), path)
                    out.append(ir.Increment("E", E.Var(name), st.loc))
                # dropped for the cost counter
            elif isinstance(st, ir.Call) and st.callee in self.program.names():
                clone = self.request(st.callee, path + (f"{st.callee}@{idx}",))
                out.append(ir.Call(clone, st.args, st.loc))
            elif isinstance(st, (ir.Call, ir.GateCall)):
                gate = st.callee if isinstance(st, ir.Call) else st.gate
                if gate not in self.gs:
                    raise UnknownGate(gate)
                gd = self.gs[gate]
                amount = gd.t_cost if self.counter == "T" else gd.error_contribution
                if E.simplify(amount) == E.ZERO:
                    continue
                if gd.intrinsic_epsilon:
                    mangled = self.mangle(
                        (None, gd.intrinsic_epsilon), path + (f"{gate}@{idx}",)
                    )
                    amount = E.substitute(amount, {gd.intrinsic_epsilon: E.Var(mangled)})
                out.append(ir.Increment(self.counter, amount, st.loc))
            elif isinstance(st, ir.For):
                out.append(
                    ir.For(st.index, st.lo, st.hi, self._convert(owner, st.body, path, counter), st.loc)
                )
            elif isinstance(st, ir.If):
                out.append(
                    ir.If(
                        st.cond,
                        self._convert(owner, st.then_body, path, counter),
                        self._convert(owner, st.else_body, path, counter),
                        st.loc,
                    )
                )
            elif isinstance(st, ir.MeasureBranch):
                out.append(
                    ir.MeasureBranch(
                        self._convert(owner, st.then_body, path, counter),
                        self._convert(owner, st.else_body, path, counter),
                    )
                )
            elif isinstance(st, ir.Let):
                out.append(st)
            elif isinstance(st, ir.Increment):
                if st.counter == self.counter:
                    out.append(st)
            else:
                raise TypeError(f"unexpected statement {st!r}")
        return tuple(out)


def _make_estimator(p: ir.Program, gs: ir.GateSet, counter: str, g: Granularity) -> ir.Program:
    mangle = epsilon_mangler(p, g, gs)
    sp = _Specializer(p, gs, g, counter, mangle)
    entry_clone = sp.request(p.entry_name, ())
    return ir.Program(tuple(sp.order), entry_clone, p.gate_set_ref)


def make_cost_estimator(
    p: ir.Program, gs: ir.GateSet | None = None, granularity: Granularity = Granularity()
) -> ir.Program:
    """Gate calls -> T increments; epsilon declarations removed."""
    return _make_estimator(p, gs or ir.default_clifford_t(), "T", granularity)


def make_error_estimator(
    p: ir.Program, gs: ir.GateSet | None = None, granularity: Granularity = Granularity()
) -> ir.Program:
    """Epsilon declarations and per-gate synthesis errors -> E increments."""
    return _make_estimator(p, gs or ir.default_clifford_t(), "E", granularity)


# ---------------------------------------------------------------------------
# conditional hoisting


def hoist_conditional(loop: ir.For) -> ir.For:
    """Rewrite ``for i in lo..hi { if i < c { body } }`` (c loop-invariant,
    no else branch) into ``for i in lo..min(hi, c) { body }``; ``i <= c``
    tightens to ``min(hi, c+1)``.  Exact, not a bound."""
    if not isinstance(loop, ir.For) or len(loop.body) != 1:
        raise NotApplicable("loop body is not a single statement")
    st = loop.body[0]
    if not isinstance(st, ir.If) or st.else_body:
        raise NotApplicable("body is not an else-free conditional")
    cond = st.cond
    if not isinstance(cond, E.Cmp):
        raise NotApplicable("condition is not a comparison")
    idx = loop.index
    lhs, rhs, op = cond.lhs, cond.rhs, cond.op
    # normalize to (index OP bound)
    if (
        isinstance(rhs, E.Var)
        and rhs.name == idx
        and not (isinstance(lhs, E.Var) and lhs.name == idx)
    ):
        lhs, rhs = rhs, lhs
        op = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}.get(op, op)
    if not (isinstance(lhs, E.Var) and lhs.name == idx):
        raise NotApplicable("condition does not compare the loop index")
    if idx in E.free_vars(rhs):
        raise NotApplicable("bound references the loop index")
    if op == "<":
        new_hi = E.Min(loop.hi, rhs)
    elif op == "<=":
        new_hi = E.Min(loop.hi, E.Add(rhs, E.ONE))
    else:
        raise NotApplicable(f"unsupported comparison {op!r}")
    return ir.For(loop.index, loop.lo, E.simplify(new_hi), st.then_body, loop.loc)
