"""Recursive-descent parser for the fault-analysis input language.

A source file is a list of statements ending with ``return``, a line holding
only ``%%``, then the attack success condition::

    noprop m, e ;
    prime {p}, {q} ;
    dp := { e^-1 mod (p-1) } ;
    ...
    return S ;
    %%
    _ != @ /\\ ( _ =[p] @ \\/ _ =[q] @ )

Expression precedence, loosest first: ``mod``; ``+ -``; ``*``; ``^`` (right
associative); unary ``-``. In conditions comparisons bind tighter than
``/\\``, which binds tighter than ``\\/``. Lines starting with ``#`` are
comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .terms import (
    ONE,
    ZERO,
    Assign,
    Cond,
    CondKind,
    DeclNoProp,
    DeclPrime,
    Kind,
    Pos,
    Program,
    Return,
    SiteId,
    Term,
    Verif,
    var,
)

KEYWORDS = {"noprop", "prime", "if", "abort", "with", "return", "mod"}
SPECIAL = {"_", "@"}


class ParseError(Exception):
    def __init__(self, line: int, col: int, message: str, expected: tuple[str, ...] = ()):
        self.line = line
        self.col = col
        self.message = message
        self.expected = expected
        exp = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{line}:{col}: {message}{exp}")


@dataclass(frozen=True)
class Token:
    kind: str  # 'id', 'num', 'kw', 'op', 'eof'
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<id>[a-zA-Z][a-zA-Z0-9_']*)
  | (?P<num>[0-9]+)
  | (?P<op>:=|!=\[|=\[|!=|=|/\\|\\/|[{}()+\-*^;,\[\]_@])
    """,
    re.VERBOSE,
)


def tokenize(text: str, first_line: int = 1) -> list[Token]:
    toks: list[Token] = []
    for lineno, line in enumerate(text.split("\n"), start=first_line):
        if line.lstrip().startswith("#"):
            continue
        i = 0
        while i < len(line):
            m = _TOKEN_RE.match(line, i)
            if m is None:
                raise ParseError(lineno, i + 1, f"unexpected character {line[i]!r}")
            kind = m.lastgroup
            s = m.group()
            if kind == "id" and s in KEYWORDS:
                kind = "kw"
            if kind != "ws":
                toks.append(Token(kind, s, lineno, i + 1))
            i = m.end()
    last = first_line + text.count("\n")
    toks.append(Token("eof", "", last, 1))
    return toks


class _Parser:
    def __init__(self, toks: list[Token], declared: set[str], attack: bool):
        self.toks = toks
        self.i = 0
        self.declared = declared
        self.attack = attack
        self.furthest: Optional[ParseError] = None

    # -- token helpers -----------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def fail(self, message: str, expected: tuple[str, ...] = ()) -> ParseError:
        t = self.tok
        err = ParseError(t.line, t.col, message, expected)
        f = self.furthest
        if f is None or (err.line, err.col) >= (f.line, f.col):
            self.furthest = err
        return err

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("op", "kw") and t.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            got = self.tok.text or "end of input"
            raise self.fail(f"unexpected {got!r}", (repr(text),))
        t = self.tok
        self.i += 1
        return t

    def pos(self) -> Pos:
        return Pos(self.tok.line, self.tok.col)

    # -- expressions -------------------------------------------------------
    def expr(self) -> Term:
        t = self.add_expr()
        while self.at("mod"):
            self.i += 1
            t = Term(Kind.MOD, (t, self.add_expr()))
        return t

    def add_expr(self) -> Term:
        t = self.mul_expr()
        while self.at("+") or self.at("-"):
            minus = self.tok.text == "-"
            self.i += 1
            rhs = self.mul_expr()
            t = Term(Kind.SUM, (t, Term(Kind.NEG, (rhs,)) if minus else rhs))
        return t

    def mul_expr(self) -> Term:
        t = self.pow_expr()
        while self.at("*"):
            self.i += 1
            t = Term(Kind.PROD, (t, self.pow_expr()))
        return t

    def pow_expr(self) -> Term:
        base = self.unary()
        if self.at("^"):
            self.i += 1
            return Term(Kind.POW, (base, self.pow_expr()))
        return base

    def unary(self) -> Term:
        if self.at("-"):
            self.i += 1
            return Term(Kind.NEG, (self.unary(),))
        return self.atom()

    def atom(self) -> Term:
        t = self.tok
        if self.at("("):
            self.i += 1
            e = self.expr()
            self.expect(")")
            return e
        if self.at("{"):
            self.i += 1
            e = self.expr()
            self.expect("}")
            if e.protected:
                raise ParseError(t.line, t.col, "nested protection braces")
            return e.replace(protected=True)
        if t.kind == "num":
            if t.text not in ("0", "1"):
                raise self.fail(f"only the literals 0 and 1 are allowed, got {t.text}")
            self.i += 1
            return ZERO if t.text == "0" else ONE
        if t.kind == "id":
            if t.text not in self.declared:
                raise ParseError(t.line, t.col, f"undeclared variable {t.text!r}")
            self.i += 1
            return var(t.text)
        if t.kind == "op" and t.text in SPECIAL:
            if not self.attack:
                raise ParseError(t.line, t.col, f"{t.text!r} is only allowed in the attack condition")
            self.i += 1
            return var(t.text)
        raise self.fail(f"unexpected {t.text or 'end of input'!r}", ("expression",))

    # -- conditions --------------------------------------------------------
    def cond(self) -> Cond:
        c = self.and_cond()
        while self.at("\\/"):
            self.i += 1
            c = Cond(CondKind.OR, subs=(c, self.and_cond()))
        return c

    def and_cond(self) -> Cond:
        c = self.prim_cond()
        while self.at("/\\"):
            self.i += 1
            c = Cond(CondKind.AND, subs=(c, self.prim_cond()))
        return c

    def prim_cond(self) -> Cond:
        if self.at("(") or self.at("{"):
            opener = self.tok
            save = self.i
            try:
                self.i += 1
                c = self.cond()
                self.expect(")" if opener.text == "(" else "}")
                if opener.text == "{":
                    if c.protected:
                        raise ParseError(opener.line, opener.col, "nested protection braces")
                    c = Cond(c.kind, c.terms, c.subs, protected=True)
                return c
            except ParseError as err:
                if "undeclared" in err.message or "only allowed" in err.message:
                    raise
                self.i = save
        return self.comparison()

    def comparison(self) -> Cond:
        lhs = self.expr()
        if self.at("="):
            self.i += 1
            return Cond(CondKind.EQ, (lhs, self.expr()))
        if self.at("!="):
            self.i += 1
            return Cond(CondKind.NEQ, (lhs, self.expr()))
        if self.at("=[") or self.at("!=["):
            kind = CondKind.EQMOD if self.tok.text == "=[" else CondKind.NEQMOD
            self.i += 1
            n = self.expr()
            self.expect("]")
            return Cond(kind, (lhs, n, self.expr()))
        raise self.fail(f"unexpected {self.tok.text or 'end of input'!r}",
                        ("'='", "'!='", "'=['", "'!=['"))

    # -- statements --------------------------------------------------------
    def decl_vars(self) -> tuple[tuple[str, bool], ...]:
        out = []
        while True:
            prot = False
            if self.at("{"):
                self.i += 1
                prot = True
            t = self.tok
            if t.kind != "id":
                raise self.fail("expected a variable name", ("variable",))
            self.declare(t)
            self.i += 1
            if prot:
                self.expect("}")
            out.append((t.text, prot))
            if not self.at(","):
                return tuple(out)
            self.i += 1

    def declare(self, t: Token) -> None:
        if t.text in self.declared:
            raise ParseError(t.line, t.col, f"duplicate declaration of {t.text!r}")
        self.declared.add(t.text)

    def statements(self) -> list:
        out = []
        while True:
            p = self.pos()
            t = self.tok
            if self.at("noprop") or self.at("prime"):
                self.i += 1
                vs = self.decl_vars()
                out.append(DeclNoProp(vs, p) if t.text == "noprop" else DeclPrime(vs, p))
            elif self.at("if"):
                self.i += 1
                c = self.cond()
                self.expect("abort")
                self.expect("with")
                out.append(Verif(c, self.expr(), p))
            elif self.at("return"):
                self.i += 1
                out.append(Return(self.expr(), p))
                self.expect(";")
                if self.tok.kind != "eof":
                    raise self.fail("statements after return", ("'%%'",))
                return out
            elif t.kind == "id":
                self.i += 1
                self.expect(":=")
                e = self.expr()
                self.declare(t)
                out.append(Assign(t.text, e, p))
            elif t.kind == "eof":
                raise self.fail("missing return statement", ("'return'",))
            else:
                raise self.fail(f"unexpected {t.text!r}", ("statement",))
            self.expect(";")


def _annotate(t: Term, stmt: int, path: tuple[int, ...]) -> Term:
    args = tuple(_annotate(a, stmt, path + (i,)) for i, a in enumerate(t.args))
    return t.replace(args=args, site=SiteId(stmt, path))


def _annotate_cond(c: Cond, stmt: int, path: tuple[int, ...]) -> Cond:
    if c.kind in (CondKind.AND, CondKind.OR):
        subs = tuple(_annotate_cond(s, stmt, path + (i,)) for i, s in enumerate(c.subs))
        return Cond(c.kind, subs=subs, protected=c.protected, site=SiteId(stmt, path))
    terms = tuple(_annotate(x, stmt, path + (i,)) for i, x in enumerate(c.terms))
    return Cond(c.kind, terms, protected=c.protected, site=SiteId(stmt, path))


def assign_sites(statements) -> tuple:
    out = []
    for i, st in enumerate(statements):
        if isinstance(st, Assign):
            st = Assign(st.var, _annotate(st.expr, i, ()), st.pos)
        elif isinstance(st, Verif):
            st = Verif(_annotate_cond(st.cond, i, (0,)), _annotate(st.error, i, (1,)), st.pos)
        elif isinstance(st, Return):
            st = Return(_annotate(st.expr, i, ()), st.pos)
        out.append(st)
    return tuple(out)


def _run(p: _Parser, fn):
    try:
        return fn()
    except ParseError as err:
        # report the deepest failure seen while backtracking
        f = p.furthest
        if f is not None and (f.line, f.col) > (err.line, err.col):
            raise f from None
        raise


def parse(source: str) -> Program:
    lines = source.split("\n")
    sep = [i for i, ln in enumerate(lines) if ln.strip() == "%%"]
    if not sep:
        raise ParseError(len(lines), 1, "missing '%%' line before the attack condition")
    if len(sep) > 1:
        raise ParseError(sep[1] + 1, 1, "more than one '%%' line")
    s = sep[0]
    body = "\n".join(lines[:s])
    tail = "\n".join(lines[s + 1:])

    declared: set[str] = set()
    p = _Parser(tokenize(body, 1), declared, attack=False)
    stmts = _run(p, p.statements)

    q = _Parser(tokenize(tail, s + 2), declared, attack=True)

    def _attack():
        c = q.cond()
        if q.tok.kind != "eof":
            raise q.fail(f"unexpected {q.tok.text!r} after the attack condition")
        return c

    attack = _run(q, _attack)
    return Program(assign_sites(stmts), _annotate_cond(attack, len(stmts), (0,)))


def parse_file(path) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
