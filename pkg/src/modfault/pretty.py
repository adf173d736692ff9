"""Concrete-syntax printing of terms, conditions and programs.

Output re-parses to a structurally equal tree (protection flags included).
"""

from __future__ import annotations

from .terms import (
    Assign,
    Cond,
    CondKind,
    DeclNoProp,
    DeclPrime,
    Kind,
    Program,
    Return,
    Term,
    Verif,
)

# binding strength; higher binds tighter
_MOD, _ADD, _MUL, _POW, _NEG, _ATOM = 1, 2, 3, 4, 5, 6

_PREC = {
    Kind.MOD: _MOD,
    Kind.SUM: _ADD,
    Kind.PROD: _MUL,
    Kind.POW: _POW,
    Kind.NEG: _NEG,
}


def _prec(t: Term) -> int:
    if t.protected:
        return _ATOM
    return _PREC.get(t.kind, _ATOM)


def show_term(t: Term, need: int = 0) -> str:
    s = _show(t)
    if t.protected:
        return "{ " + s + " }"
    if _prec(t) < need:
        return "(" + s + ")"
    return s


def _show(t: Term) -> str:
    k = t.kind
    if k == Kind.ZERO:
        return "0"
    if k == Kind.ONE:
        return "1"
    if k == Kind.VAR:
        return t.name
    if k == Kind.OPAQUE:
        where = f"@{t.site}" if t.site is not None else ""
        return ("ZERO" if t.is_zero else "RANDOM") + where
    if k == Kind.NEG:
        x = t.args[0]
        # -a^b would read back as (-a)^b
        inner = show_term(x, _NEG if x.kind == Kind.NEG else _ATOM)
        return "-" + inner
    if k == Kind.SUM:
        parts = [show_term(t.args[0], _ADD)]
        for c in t.args[1:]:
            if c.kind == Kind.NEG and not c.protected:
                x = c.args[0]
                parts.append("- " + show_term(x, _MUL))
            else:
                parts.append("+ " + show_term(c, _MUL))
        return " ".join(parts)
    if k == Kind.PROD:
        return " * ".join(
            [show_term(t.args[0], _MUL)] + [show_term(c, _POW) for c in t.args[1:]]
        )
    if k == Kind.POW:
        b, e = t.args
        return show_term(b, _NEG if b.kind == Kind.NEG else _ATOM) + "^" + show_term(e, _POW)
    if k == Kind.MOD:
        a, n = t.args
        return show_term(a, _MOD) + " mod " + show_term(n, _MUL)
    raise ValueError(k)


_OR, _AND, _CMP = 1, 2, 3


def show_cond(c: Cond, need: int = 0) -> str:
    if c.kind in (CondKind.AND, CondKind.OR):
        own = _AND if c.kind == CondKind.AND else _OR
        op = " /\\ " if c.kind == CondKind.AND else " \\/ "
        s = show_cond(c.subs[0], own) + op + show_cond(c.subs[1], own + 1)
    elif c.kind == CondKind.FORCED:
        s = "TRUE" if c.value else "FALSE"
        own = _CMP
    elif c.kind == CondKind.RANDOM:
        s = "RANDOM_COND" + (f"@{c.site}" if c.site is not None else "")
        own = _CMP
    else:
        own = _CMP
        ts = [show_term(x) for x in c.terms]
        if c.kind == CondKind.EQ:
            s = f"{ts[0]} = {ts[1]}"
        elif c.kind == CondKind.NEQ:
            s = f"{ts[0]} != {ts[1]}"
        elif c.kind == CondKind.EQMOD:
            s = f"{ts[0]} =[{ts[1]}] {ts[2]}"
        else:
            s = f"{ts[0]} !=[{ts[1]}] {ts[2]}"
    if c.protected:
        return "{ " + s + " }"
    return f"( {s} )" if own < need else s


def _show_decl_vars(vs) -> str:
    return ", ".join("{" + n + "}" if prot else n for n, prot in vs)


def show_statement(st) -> str:
    if isinstance(st, DeclNoProp):
        return f"noprop {_show_decl_vars(st.vars)} ;"
    if isinstance(st, DeclPrime):
        return f"prime {_show_decl_vars(st.vars)} ;"
    if isinstance(st, Assign):
        return f"{st.var} := {show_term(st.expr)} ;"
    if isinstance(st, Verif):
        return f"if {show_cond(st.cond)} abort with {show_term(st.error)} ;"
    if isinstance(st, Return):
        return f"return {show_term(st.expr)} ;"
    raise TypeError(st)


def show_program(p: Program) -> str:
    lines = [show_statement(st) for st in p.statements]
    lines.append("%%")
    lines.append(show_cond(p.attack))
    return "\n".join(lines) + "\n"
