"""Canonicalizing rewriter over terms in Z and its Z_N subrings.

Rules, applied bottom-up until fixpoint:

* neutral and absorbing elements, double negation, ``x + -x``;
* flattening and stable sorting of sums and products (no distributivity);
* under ``mod N``: inner ``mod M`` erasure when ``N | M``, dropping addends
  that are multiples of ``N``, products with a factor that is a multiple of
  ``N`` vanish, ``x * x^-1`` cancels for prime ``N``;
* Fermat/Euler: under ``mod N`` with ``N`` a declared prime (or a product
  of distinct declared primes) an exponent ``E`` is replaced by
  ``E mod phi(N)``. The base must not be provably a multiple of a prime
  factor of ``N``; its coprimality is assumed and logged as a ``Fact``.

``x mod M`` with ``M`` negative is congruent to ``x`` modulo ``|M|``.
``x mod 0`` is undefined and is left as a value with no properties.
"""

from __future__ import annotations

import threading
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import Optional

from .terms import (
    ONE,
    ZERO,
    Kind,
    Term,
    VarInfo,
    VarKind,
    structural_equal,
)

MAX_PASSES = 64


class PassBoundExceeded(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Fact:
    prop: str  # "CoprimeAssumed"
    subject: Term
    modulus: Term

    def _id(self):
        return (self.prop, self.subject.key, self.modulus.key)

    def __eq__(self, other):
        return isinstance(other, Fact) and self._id() == other._id()

    def __hash__(self):
        return hash(self._id())

    def __str__(self) -> str:
        from .pretty import show_term

        return f"{self.prop}({show_term(self.subject)}, {show_term(self.modulus)})"


def _sorted(xs: list[Term]) -> list[Term]:
    return sorted(xs, key=Term.sort_key)


def _unit(kind: Kind, xs: list[Term]) -> Term:
    if not xs:
        return ZERO if kind == Kind.SUM else ONE
    if len(xs) == 1:
        return xs[0]
    return Term(kind, tuple(_sorted(xs)))


class Simplifier:
    def __init__(self, primes: Iterable[str] = ()):
        self.primes = frozenset(primes)
        self._norm: dict[int, tuple[Term, frozenset]] = {}
        self._red: dict[tuple[int, int], tuple[Term, frozenset]] = {}
        self._mult: dict[tuple[int, int], bool] = {}
        self._local = threading.local()

    def positive(self, e: Term) -> bool:
        """``e`` is known to be >= 1.

        Declared variables are taken as positive and ``p - 1`` is positive
        for a declared prime ``p``.
        """
        k = e.kind
        if k in (Kind.ONE, Kind.VAR):
            return True
        if k in (Kind.PROD, Kind.POW):
            return all(self.positive(a) for a in e.args)
        if k == Kind.SUM:
            minus_ones = sum(1 for a in e.args if a.kind == Kind.NEG and a.args[0].is_one)
            primes = sum(1 for a in e.args if a.kind == Kind.VAR and a.name in self.primes)
            rest = [a for a in e.args if not (a.kind == Kind.NEG and a.args[0].is_one)]
            return minus_ones <= primes and bool(rest) and all(self.positive(a) for a in rest)
        return False

    # -- fact bookkeeping --------------------------------------------------
    @property
    def _stack(self) -> list[set]:
        st = getattr(self._local, "stack", None)
        if st is None:
            st = self._local.stack = []
        return st

    def _record(self, fact: Fact) -> None:
        if self._stack:
            self._stack[-1].add(fact)

    def _cached(self, cache, k, fn, *args) -> Term:
        stack = self._stack
        hit = cache.get(k)
        if hit is not None:
            res, facts = hit
            if stack and facts:
                stack[-1].update(facts)
            return res
        stack.append(set())
        try:
            res = fn(*args)
        finally:
            facts = frozenset(stack.pop())
        cache[k] = (res, facts)
        if stack:
            stack[-1].update(facts)
        return res

    # -- public ------------------------------------------------------------
    def simplify(self, t: Term) -> Term:
        return self.simplify_logged(t)[0]

    def simplify_logged(self, t: Term) -> tuple[Term, frozenset]:
        stack = self._stack
        stack.append(set())
        try:
            for _ in range(MAX_PASSES):
                nxt = self.norm(t)
                if nxt.key == t.key:
                    return nxt, frozenset(stack[-1])
                t = nxt
        finally:
            facts = stack.pop()
            if stack:
                stack[-1].update(facts)
        raise PassBoundExceeded(f"no fixpoint after {MAX_PASSES} passes")

    def provably_zero(self, t: Term) -> bool:
        return self.simplify(t).is_zero

    def equal(self, a: Term, b: Term) -> bool:
        sa, sb = self.simplify(a), self.simplify(b)
        if structural_equal(sa, sb):
            return True
        return self.provably_zero(Term(Kind.SUM, (sa, Term(Kind.NEG, (sb,)))))

    def equal_mod(self, a: Term, b: Term, n: Term) -> bool:
        diff = Term(Kind.SUM, (a, Term(Kind.NEG, (b,))))
        return self.provably_zero(Term(Kind.MOD, (diff, n)))

    # -- normalization -----------------------------------------------------
    def norm(self, t: Term) -> Term:
        return self._cached(self._norm, t.key, self._norm_impl, t)

    def _norm_impl(self, t: Term) -> Term:
        k = t.kind
        if k == Kind.ZERO:
            return ZERO
        if k == Kind.ONE:
            return ONE
        if k == Kind.VAR:
            return Term(Kind.VAR, name=t.name)
        if k == Kind.OPAQUE:
            return t.replace(protected=False) if t.protected else t
        args = [self.norm(a) for a in t.args]
        if k == Kind.NEG:
            return self.neg(args[0])
        if k == Kind.SUM:
            return self.sum(args)
        if k == Kind.PROD:
            return self.prod(args)
        if k == Kind.POW:
            return self.pow(args[0], args[1])
        return self.mod(args[0], args[1])

    def neg(self, x: Term) -> Term:
        if x.is_zero:
            return x
        if x.kind == Kind.NEG:
            return x.args[0]
        if x.kind == Kind.SUM:
            return self.sum([self.neg(c) for c in x.args])
        return Term(Kind.NEG, (x,))

    def sum(self, xs: list[Term]) -> Term:
        flat: list[Term] = []
        for x in xs:
            if x.kind == Kind.SUM:
                flat.extend(x.args)
            elif not x.is_zero:
                flat.append(x)
        # cancel x against -x
        net: dict[int, int] = {}
        rep: dict[int, Term] = {}
        order: list[int] = []
        for x in flat:
            if x.kind == Kind.NEG:
                base, sgn = x.args[0], -1
            else:
                base, sgn = x, 1
            if base.key not in net:
                net[base.key] = 0
                rep[base.key] = base
                order.append(base.key)
            net[base.key] += sgn
        out: list[Term] = []
        for k in order:
            n = net[k]
            if n > 0:
                out.extend([rep[k]] * n)
            elif n < 0:
                out.extend([Term(Kind.NEG, (rep[k],))] * -n)
        return _unit(Kind.SUM, out)

    def prod(self, xs: list[Term]) -> Term:
        flat: list[Term] = []
        sign = 1
        todo = list(xs)
        while todo:
            x = todo.pop(0)
            if x.is_zero:
                return x
            if x.kind == Kind.PROD:
                todo[:0] = list(x.args)
            elif x.kind == Kind.NEG:
                sign = -sign
                todo.insert(0, x.args[0])
            elif x.kind != Kind.ONE:
                flat.append(x)
        r = _unit(Kind.PROD, flat)
        return self.neg(r) if sign < 0 else r

    def pow(self, b: Term, e: Term) -> Term:
        if e.is_zero:
            return ONE
        if e.kind == Kind.ONE:
            return b
        if b.kind == Kind.ONE:
            return ONE
        if b.is_zero and self.positive(e):
            return b
        inv = Term(Kind.POW, (b, e)).is_inverse
        if b.kind == Kind.POW and not b.is_inverse and not inv:
            return self.pow(b.args[0], self.prod([b.args[1], e]))
        return Term(Kind.POW, (b, e))

    def mod(self, a: Term, n: Term) -> Term:
        if n.is_zero:
            # undefined: kept as a value without properties
            return Term(Kind.MOD, (a, n))
        if n.kind == Kind.ONE:
            return ZERO
        if a.is_one and self.prime_factors(n) is not None:
            return ONE
        r = self.reduce(a, n)
        if self.mult(r, n):
            return ZERO
        if r.kind == Kind.MOD:
            m = r.args[1]
            if n.kind == Kind.PROD and self.positive(m) and self.positive(n) \
                    and any(c.key == m.key for c in n.args):
                # r already lies in [0, m) which is inside [0, n)
                return r
        return Term(Kind.MOD, (r, n))

    # -- multiples ---------------------------------------------------------
    def mult(self, t: Term, n: Term) -> bool:
        """``t`` is provably a multiple of ``n`` (both normalized)."""
        k = (t.key, n.key)
        hit = self._mult.get(k)
        if hit is None:
            hit = self._mult[k] = self._mult_impl(t, n)
        return hit

    def _mult_impl(self, t: Term, n: Term) -> bool:
        if t.is_zero or t.key == n.key or n.kind == Kind.ONE:
            return True
        if n.kind == Kind.NEG:
            return self.mult(t, n.args[0])
        if t.key == self.neg(n).key:
            return True
        k = t.kind
        if k == Kind.NEG:
            return self.mult(t.args[0], n)
        if k == Kind.SUM:
            return all(self.mult(c, n) for c in t.args)
        if k == Kind.MOD:
            m = t.args[1]
            return not m.is_zero and self.mult(t.args[0], n) and self.mult(m, n)
        if k == Kind.POW:
            return self.positive(t.args[1]) and self.mult(t.args[0], n)
        if k == Kind.PROD:
            if any(self.mult(c, n) for c in t.args):
                return True
            if n.kind == Kind.PROD:
                have: dict[int, int] = {}
                for c in t.args:
                    have[c.key] = have.get(c.key, 0) + 1
                for c in n.args:
                    if have.get(c.key, 0) == 0:
                        return False
                    have[c.key] -= 1
                return True
        return False

    # -- reduction modulo n ------------------------------------------------
    def prime_factors(self, n: Term) -> Optional[list[Term]]:
        if n.kind == Kind.VAR and n.name in self.primes:
            return [n]
        if n.kind == Kind.PROD:
            names = [c.name for c in n.args if c.kind == Kind.VAR]
            if len(names) == len(n.args) and len(set(names)) == len(names) \
                    and all(x in self.primes for x in names):
                return list(n.args)
        return None

    def totient(self, factors: list[Term]) -> Term:
        minus_one = Term(Kind.NEG, (ONE,))
        return self.prod([self.sum([p, minus_one]) for p in factors])

    def reduce(self, t: Term, n: Term) -> Term:
        """Normalized term congruent to ``t`` modulo ``n``."""
        return self._cached(self._red, (t.key, n.key), self._reduce_impl, t, n)

    def _reduce_impl(self, t: Term, n: Term) -> Term:
        k = t.kind
        if k == Kind.MOD:
            m = t.args[1]
            if not m.is_zero and self.mult(m, n):
                return self.reduce(t.args[0], n)
            return t
        if k == Kind.SUM:
            cs = [self.reduce(c, n) for c in t.args]
            return self.sum([c for c in cs if not self.mult(c, n)])
        if k == Kind.NEG:
            return self.neg(self.reduce(t.args[0], n))
        if k == Kind.PROD:
            cs = [self.reduce(c, n) for c in t.args]
            if any(self.mult(c, n) for c in cs):
                return ZERO
            return self._cancel_inverses(self.prod(cs), n)
        if k == Kind.POW:
            return self._reduce_pow(t, n)
        return t

    def _cancel_inverses(self, t: Term, n: Term) -> Term:
        if not (n.kind == Kind.VAR and n.name in self.primes):
            return t
        negated = t.kind == Kind.NEG
        body = t.args[0] if negated else t
        if body.kind != Kind.PROD:
            return t
        xs = list(body.args)
        changed = False
        for inv in [x for x in xs if x.is_inverse]:
            base = inv.args[0]
            if inv not in xs or self.mult(base, n):
                continue
            match = next((x for x in xs if x.key == base.key), None)
            if match is None:
                continue
            xs.remove(match)
            xs.remove(inv)
            self._record(Fact("CoprimeAssumed", base, n))
            changed = True
        if not changed:
            return t
        r = self.prod(xs)
        return self.neg(r) if negated else r

    def _reduce_pow(self, t: Term, n: Term) -> Term:
        b, e = t.args
        if t.is_inverse:
            return self.pow(self.reduce(b, n), e)
        b = self.reduce(b, n)
        if b.kind == Kind.POW and not b.is_inverse:
            b, e = b.args[0], self.prod([b.args[1], e])
        factors = self.prime_factors(n)
        if (
            factors is not None
            and not b.is_zero
            and e.kind not in (Kind.ZERO, Kind.ONE)
            and not any(self.mult(b, p) for p in factors)
        ):
            e = self.mod(e, self.totient(factors))
            self._record(Fact("CoprimeAssumed", b, n))
        return self.pow(b, e)


_simplifiers: dict[frozenset, Simplifier] = {}
_lock = threading.Lock()


def simplifier_for(env) -> Simplifier:
    """Shared simplifier for a variable environment or a set of prime names."""
    if isinstance(env, Simplifier):
        return env
    if isinstance(env, Mapping):
        primes = frozenset(
            n for n, v in env.items() if isinstance(v, VarInfo) and v.kind == VarKind.PRIME
        )
    else:
        primes = frozenset(env)
    s = _simplifiers.get(primes)
    if s is None:
        with _lock:
            s = _simplifiers.setdefault(primes, Simplifier(primes))
    return s


def simplify(t: Term, env=()) -> Term:
    return simplifier_for(env).simplify(t)


def provably_zero(t: Term, env=()) -> bool:
    return simplifier_for(env).provably_zero(t)


def equal_mod(a: Term, b: Term, n: Term, env=()) -> bool:
    return simplifier_for(env).equal_mod(a, b, n)
