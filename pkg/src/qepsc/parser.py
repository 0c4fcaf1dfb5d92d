"""Recursive-descent front end for the quantum DSL.

Grammar (whitespace-insensitive, '#' starts a line comment):

    program    := subroutine+
    subroutine := "def" IDENT "(" [param ("," param)*] ")" block
    param      := ["@dontcare"] IDENT ":" ("int" | "real" | "qureg")
    block      := "{" stmt* "}"
    stmt       := "epsilon" IDENT ";" | "let" IDENT "=" cexpr ";"
                | "for" IDENT "in" cexpr ".." cexpr block
                | "if" cexpr block ["else" block]
                | "ifmeasure" block ["else" block]
                | "inc" ("T" | "E") cexpr ";"
                | IDENT "(" [cexpr ("," cexpr)*] ")" ";"

Classical expressions support + - * / ^ with the usual precedence,
comparisons, unary minus and the builtins min, max, ceil, floor, log, log2.
The first subroutine is the entry point unless one is named "main".
"""

from __future__ import annotations

import re

from . import expr as E
from . import ir
from .errors import DslSyntaxError, DuplicateDefinition

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<float>\d+\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\.\.|<=|>=|[-+*/^<>=(){},;:@])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"def", "epsilon", "let", "for", "in", "if", "else", "ifmeasure", "inc"}
_FUNCS = {"min", "max", "ceil", "floor", "log", "log2"}


class _Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.kind}:{self.text!r}@{self.line}:{self.col}"


def _tokenize(source: str):
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise DslSyntaxError(line, col, f"unexpected character {source[pos]!r}")
        text = m.group(0)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0

    @property
    def cur(self) -> _Token:
        return self.tokens[self.pos]

    def _fail(self, expected: str):
        t = self.cur
        shown = t.text or "<eof>"
        raise DslSyntaxError(t.line, t.col, f"expected {expected}, found {shown!r}")

    def accept(self, text: str) -> bool:
        if self.cur.text == text and self.cur.kind in ("op", "ident"):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> _Token:
        t = self.cur
        if not self.accept(text):
            self._fail(repr(text))
        return t

    def ident(self, what="identifier") -> _Token:
        t = self.cur
        if t.kind != "ident" or t.text in _KEYWORDS:
            self._fail(what)
        self.pos += 1
        return t

    # ---- program structure

    def program(self) -> ir.Program:
        subs = []
        while self.cur.kind != "eof":
            subs.append(self.subroutine())
        if not subs:
            self._fail("'def'")
        names = [s.name for s in subs]
        dups = {n for n in names if names.count(n) > 1}
        if dups:
            raise DuplicateDefinition(f"subroutine(s) defined twice: {sorted(dups)}")
        entry = "main" if "main" in names else names[0]
        return ir.Program(tuple(subs), entry)

    def subroutine(self) -> ir.Subroutine:
        self.expect("def")
        name = self.ident("subroutine name").text
        self.expect("(")
        params = []
        if not self.accept(")"):
            while True:
                params.append(self.param())
                if self.accept(")"):
                    break
                self.expect(",")
        body = self.block()
        return ir.Subroutine(name, tuple(params), body)

    def param(self) -> ir.Param:
        dont_care = False
        if self.accept("@"):
            t = self.ident("annotation")
            if t.text != "dontcare":
                raise DslSyntaxError(t.line, t.col, f"unknown annotation @{t.text}")
            dont_care = True
        name = self.ident("parameter name").text
        self.expect(":")
        kind = self.ident("kind").text
        if kind not in ir.KINDS:
            self._fail("'int', 'real' or 'qureg'")
        return ir.Param(name, kind, dont_care)

    def block(self) -> tuple:
        self.expect("{")
        stmts = []
        while not self.accept("}"):
            stmts.append(self.stmt())
        return tuple(stmts)

    def stmt(self) -> ir.Stmt:
        t = self.cur
        loc = ir.Loc(t.line, t.col)
        if self.accept("epsilon"):
            name = self.ident("epsilon name").text
            self.expect(";")
            return ir.EpsilonDecl(name, loc)
        if self.accept("let"):
            name = self.ident("name").text
            self.expect("=")
            value = self.cexpr()
            self.expect(";")
            return ir.Let(name, value, loc)
        if self.accept("for"):
            index = self.ident("loop index").text
            self.expect("in")
            lo = self.cexpr()
            self.expect("..")
            hi = self.cexpr()
            body = self.block()
            return ir.For(index, lo, hi, body, loc)
        if self.accept("if"):
            cond = self.cexpr()
            then_body = self.block()
            else_body = self.block() if self.accept("else") else ()
            return ir.If(cond, then_body, else_body, loc)
        if self.accept("ifmeasure"):
            then_body = self.block()
            else_body = self.block() if self.accept("else") else ()
            return ir.MeasureBranch(then_body, else_body, loc)
        if self.accept("inc"):
            counter = self.ident("counter").text
            if counter not in ir.COUNTERS:
                raise DslSyntaxError(t.line, t.col, f"unknown counter {counter!r}")
            amount = self.cexpr()
            self.expect(";")
            return ir.Increment(counter, amount, loc)
        name = self.ident("statement").text
        self.expect("(")
        args = []
        if not self.accept(")"):
            while True:
                args.append(self.cexpr())
                if self.accept(")"):
                    break
                self.expect(",")
        self.expect(";")
        # gate vs subroutine call is resolved against the gate set later
        return ir.Call(name, tuple(args), loc)

    # ---- classical expressions

    def cexpr(self) -> E.SymExpr:
        lhs = self.additive()
        for op in ("<=", ">=", "<", ">", "="):
            if self.cur.text == op and self.cur.kind == "op":
                self.pos += 1
                return E.Cmp(op, lhs, self.additive())
        return lhs

    def additive(self) -> E.SymExpr:
        e = self.multiplicative()
        while True:
            if self.accept("+"):
                e = E.Add(e, self.multiplicative())
            elif self.accept("-"):
                e = E.Sub(e, self.multiplicative())
            else:
                return e

    def multiplicative(self) -> E.SymExpr:
        e = self.unary()
        while True:
            if self.accept("*"):
                e = E.Mul(e, self.unary())
            elif self.accept("/"):
                e = E.Div(e, self.unary())
            else:
                return e

    def unary(self) -> E.SymExpr:
        if self.accept("-"):
            return E.Sub(E.ZERO, self.unary())
        return self.power()

    def power(self) -> E.SymExpr:
        base = self.atom()
        if self.accept("^"):
            return E.Pow(base, self.unary())
        return base

    def atom(self) -> E.SymExpr:
        t = self.cur
        if t.kind == "int":
            self.pos += 1
            return E.IntConst(int(t.text))
        if t.kind == "float":
            self.pos += 1
            return E.Const(float(t.text))
        if self.accept("("):
            e = self.cexpr()
            self.expect(")")
            return e
        if t.kind == "ident" and t.text in _FUNCS:
            self.pos += 1
            self.expect("(")
            args = [self.cexpr()]
            while self.accept(","):
                args.append(self.cexpr())
            self.expect(")")
            return self._builtin(t, args)
        if t.kind == "ident" and t.text not in _KEYWORDS:
            self.pos += 1
            return E.Var(t.text)
        self._fail("expression")

    def _builtin(self, t: _Token, args) -> E.SymExpr:
        binary = {"min": E.Min, "max": E.Max}
        unary = {"ceil": E.Ceil, "floor": E.Floor, "log": E.Log}
        if t.text in binary:
            if len(args) < 2:
                raise DslSyntaxError(t.line, t.col, f"{t.text} needs two arguments")
            out = binary[t.text](args[0], args[1])
            for a in args[2:]:
                out = binary[t.text](out, a)
            return out
        if len(args) != 1:
            raise DslSyntaxError(t.line, t.col, f"{t.text} takes one argument")
        if t.text == "log2":
            return E.log2(args[0])
        return unary[t.text](args[0])


def parse(source: str) -> ir.Program:
    return _Parser(source).program()


def parse_cexpr(source: str) -> E.SymExpr:
    p = _Parser(source)
    e = p.cexpr()
    if p.cur.kind != "eof":
        p._fail("end of expression")
    return e
