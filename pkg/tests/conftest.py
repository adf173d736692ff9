from pathlib import Path

import pytest

from modfault.parser import parse_file

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "modfault" / "fixtures"
NAMES = ("unprotected", "shamir", "aumuller")


def load(name):
    return parse_file(FIXTURES / f"{name}.fj")


@pytest.fixture(scope="session")
def programs():
    return {n: load(n) for n in NAMES}


def same_tree(a, b):
    """Equal up to site ids, protection flags included."""
    if a.kind != b.kind or a.name != b.name or a.protected != b.protected:
        return False
    return len(a.args) == len(b.args) and all(same_tree(x, y) for x, y in zip(a.args, b.args))


def same_cond(a, b):
    if a.kind != b.kind or a.protected != b.protected:
        return False
    return (len(a.terms) == len(b.terms) and len(a.subs) == len(b.subs)
            and all(same_tree(x, y) for x, y in zip(a.terms, b.terms))
            and all(same_cond(x, y) for x, y in zip(a.subs, b.subs)))


def same_program(a, b):
    from modfault.terms import Assign, DeclNoProp, DeclPrime, Return, Verif

    if len(a.statements) != len(b.statements) or not same_cond(a.attack, b.attack):
        return False
    for x, y in zip(a.statements, b.statements):
        if type(x) is not type(y):
            return False
        if isinstance(x, (DeclNoProp, DeclPrime)) and x.vars != y.vars:
            return False
        if isinstance(x, Assign) and (x.var != y.var or not same_tree(x.expr, y.expr)):
            return False
        if isinstance(x, Return) and not same_tree(x.expr, y.expr):
            return False
        if isinstance(x, Verif) and not (same_cond(x.cond, y.cond)
                                         and same_tree(x.error, y.error)):
            return False
    return True
