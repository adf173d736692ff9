"""Term trees, conditions, statements and programs.

Terms are immutable. Every term carries an interned structural ``key`` that
ignores site ids and protection flags, so structural equality is an integer
comparison and terms can be used as memo keys.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterator, Optional


class Kind(IntEnum):
    # value order is the rank used by term_order
    ZERO = 0
    ONE = 1
    VAR = 2
    NEG = 3
    POW = 4
    MOD = 5
    PROD = 6
    SUM = 7
    OPAQUE = 8


NULL = "Null"
RANDOM = "Random"

_intern: dict[tuple, int] = {}
_intern_lock = threading.Lock()


def _intern_sig(sig: tuple) -> int:
    k = _intern.get(sig)
    if k is None:
        with _intern_lock:
            k = _intern.setdefault(sig, len(_intern))
    return k


@dataclass(frozen=True)
class SiteId:
    """Address of a fault site.

    ``path`` is the preorder path inside statement ``stmt``; ``cell`` names a
    declared variable faulted as a memory cell.
    """

    stmt: int
    path: tuple[int, ...] = ()
    cell: Optional[str] = None

    def __str__(self) -> str:
        if self.cell is not None:
            return f"s{self.stmt}:{self.cell}"
        return f"s{self.stmt}:" + ".".join(map(str, self.path))

    def sort_key(self) -> tuple:
        return (self.stmt, self.cell is None, self.cell or "", self.path)

    @classmethod
    def parse(cls, text: str) -> "SiteId":
        """Inverse of ``str``: ``s4:0.1``, ``s7:`` or ``s1:p``."""
        head, sep, tail = text.partition(":")
        if not sep or not head.startswith("s") or not head[1:].isdigit():
            raise ValueError(f"bad site id {text!r}")
        stmt = int(head[1:])
        if not tail:
            return cls(stmt)
        parts = tail.split(".")
        if all(x.isdigit() for x in parts):
            return cls(stmt, tuple(int(x) for x in parts))
        if len(parts) == 1:
            return cls(stmt, cell=tail)
        raise ValueError(f"bad site id {text!r}")


@dataclass(frozen=True, eq=False, repr=False)
class Term:
    kind: Kind
    args: tuple["Term", ...] = ()
    name: str = ""
    protected: bool = False
    site: Optional[SiteId] = None
    key: int = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind in (Kind.VAR, Kind.OPAQUE):
            sig = (self.kind, self.name)
        else:
            sig: tuple = (self.kind,) + tuple(a.key for a in self.args)
        object.__setattr__(self, "key", _intern_sig(sig))

    # -- convenience -------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return self.kind == Kind.ZERO or (self.kind == Kind.OPAQUE and self.name.startswith(NULL))

    @property
    def is_one(self) -> bool:
        return self.kind == Kind.ONE

    @property
    def is_leaf(self) -> bool:
        return not self.args

    @property
    def is_inverse(self) -> bool:
        """``x^-1``: left symbolic, meaningful only under a modulus."""
        return (
            self.kind == Kind.POW
            and self.args[1].kind == Kind.NEG
            and self.args[1].args[0].kind == Kind.ONE
        )

    def sort_key(self) -> tuple:
        sk = self.__dict__.get("_sk")
        if sk is None:
            sk = (int(self.kind), self.name, tuple(a.sort_key() for a in self.args))
            object.__setattr__(self, "_sk", sk)
        return sk

    def with_args(self, args) -> "Term":
        return Term(self.kind, tuple(args), self.name, self.protected, self.site)

    def replace(self, **kw) -> "Term":
        d = dict(kind=self.kind, args=self.args, name=self.name,
                 protected=self.protected, site=self.site)
        d.update(kw)
        return Term(**d)

    def walk(self) -> Iterator["Term"]:
        yield self
        for a in self.args:
            yield from a.walk()

    def __repr__(self) -> str:
        from .pretty import show_term

        return f"Term({show_term(self)})"


ZERO = Term(Kind.ZERO)
ONE = Term(Kind.ONE)


def var(name: str) -> Term:
    return Term(Kind.VAR, name=name)


def neg(x: Term) -> Term:
    return Term(Kind.NEG, (x,))


def add(*xs: Term) -> Term:
    return Term(Kind.SUM, tuple(xs))


def sub(a: Term, b: Term) -> Term:
    return Term(Kind.SUM, (a, neg(b)))


def mul(*xs: Term) -> Term:
    return Term(Kind.PROD, tuple(xs))


def power(b: Term, e: Term) -> Term:
    return Term(Kind.POW, (b, e))


def mod(a: Term, n: Term) -> Term:
    return Term(Kind.MOD, (a, n))


def inverse(x: Term) -> Term:
    return power(x, neg(ONE))


def null_fault(site: SiteId) -> Term:
    # per-site name keeps provenance through memoized simplification
    return Term(Kind.OPAQUE, name=f"{NULL}#{site}", site=site)


def random_fault(site: SiteId) -> Term:
    return Term(Kind.OPAQUE, name=f"{RANDOM}#{site}", site=site)


def is_random(t: Term) -> bool:
    return t.kind == Kind.OPAQUE and t.name.startswith(RANDOM)


def structural_equal(a: Term, b: Term) -> bool:
    return a.key == b.key


def term_order(a: Term, b: Term) -> int:
    ka, kb = a.sort_key(), b.sort_key()
    return (ka > kb) - (ka < kb)


def check_flat(t: Term) -> bool:
    """True if no Sum directly contains a Sum (same for Prod) and n-ary nodes have >= 2 children."""
    for node in t.walk():
        if node.kind in (Kind.SUM, Kind.PROD):
            if len(node.args) < 2:
                return False
            if any(c.kind == node.kind for c in node.args):
                return False
    return True


# -- conditions and statements ---------------------------------------------


class CondKind(Enum):
    EQ = "="
    NEQ = "!="
    EQMOD = "=[]"
    NEQMOD = "!=[]"
    AND = "/\\"
    OR = "\\/"
    # produced only by fault injection
    FORCED = "forced"
    RANDOM = "random"


@dataclass(frozen=True)
class Cond:
    """Verification or attack condition.

    Atoms hold ``terms``: ``(lhs, rhs)`` for EQ/NEQ and ``(lhs, modulus, rhs)``
    for EQMOD/NEQMOD, which is also the order of their fault-site paths.
    """

    kind: CondKind
    terms: tuple[Term, ...] = ()
    subs: tuple["Cond", ...] = ()
    protected: bool = False
    site: Optional[SiteId] = None
    value: bool = False

    @property
    def is_atom(self) -> bool:
        return self.kind in (CondKind.EQ, CondKind.NEQ, CondKind.EQMOD, CondKind.NEQMOD)

    def children(self) -> tuple:
        return self.subs if self.kind in (CondKind.AND, CondKind.OR) else self.terms


@dataclass(frozen=True)
class Pos:
    line: int
    col: int


@dataclass(frozen=True)
class DeclNoProp:
    vars: tuple[tuple[str, bool], ...]  # (name, protected)
    pos: Pos = Pos(0, 0)


@dataclass(frozen=True)
class DeclPrime:
    vars: tuple[tuple[str, bool], ...]
    pos: Pos = Pos(0, 0)


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Term
    pos: Pos = Pos(0, 0)


@dataclass(frozen=True)
class Verif:
    cond: Cond
    error: Term
    pos: Pos = Pos(0, 0)


@dataclass(frozen=True)
class Return:
    expr: Term
    pos: Pos = Pos(0, 0)


Statement = DeclNoProp | DeclPrime | Assign | Verif | Return


class VarKind(Enum):
    NOPROP = "noprop"
    PRIME = "prime"
    DEFINED = "defined"


@dataclass(frozen=True)
class VarInfo:
    name: str
    kind: VarKind
    protected: bool = False
    value: Optional[Term] = None


@dataclass(frozen=True)
class Program:
    statements: tuple[Statement, ...]
    attack: Cond
    # permanent cell faults: declared variable -> replacement term
    cell_faults: tuple[tuple[str, Term], ...] = ()

    def inputs(self) -> dict[str, VarInfo]:
        out = {}
        for st in self.statements:
            if isinstance(st, (DeclNoProp, DeclPrime)):
                kind = VarKind.PRIME if isinstance(st, DeclPrime) else VarKind.NOPROP
                for name, prot in st.vars:
                    out[name] = VarInfo(name, kind, prot)
        return out

    @property
    def primes(self) -> frozenset[str]:
        return frozenset(n for n, v in self.inputs().items() if v.kind == VarKind.PRIME)

    @property
    def returned(self) -> Term:
        st = self.statements[-1]
        assert isinstance(st, Return)
        return st.expr

    def verifications(self) -> list[int]:
        return [i for i, st in enumerate(self.statements) if isinstance(st, Verif)]


# -- fault plans and outcomes ----------------------------------------------


class FaultType(Enum):
    ZEROING = "zeroing"
    RANDOMIZING = "randomizing"


class Timing(Enum):
    PERMANENT = "permanent"
    TRANSIENT = "transient"


@dataclass(frozen=True)
class Fault:
    site: SiteId
    type: FaultType
    timing: Timing

    def __str__(self) -> str:
        return f"{self.type.value[0].upper()}@{self.site}"


@dataclass(frozen=True)
class FaultPlan:
    faults: tuple[Fault, ...]

    @property
    def multiplicity(self) -> int:
        return len(self.faults)

    @property
    def type_signature(self) -> str:
        types = {f.type for f in self.faults}
        if len(types) == 1:
            return next(iter(types)).value
        return "mixed"

    def __str__(self) -> str:
        return " + ".join(str(f) for f in self.faults) or "(genuine)"


class Verdict(Enum):
    DETECTED = "detected"
    HARMLESS = "harmless"
    ATTACK = "attack"
    ERROR = "error"


@dataclass(frozen=True)
class Outcome:
    plan: FaultPlan
    verdict: Verdict
    check: Optional[int] = None  # 1-based verification number for DETECTED
    witness: Optional[Term] = None  # simplified faulted return for ATTACK
    branch: tuple[tuple[SiteId, bool], ...] = ()  # random-condition choices
    message: str = ""
