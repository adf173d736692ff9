"""Brute-force numeric cross-checker over small primes.

Programs are run on concrete integers with faults looked up by site id, so
this module shares no evaluation code with the symbolic engine. Semantics:

* ``a mod n`` is Python's ``%``; the body is computed in the ring of ``n``
  so that ``b^-1`` under a modulus is a modular inverse;
* ``a mod 0`` has no defined value; a fresh random value is drawn for it;
* ``a =[n] b`` is ``(a - b) % n == 0`` and ``a =[0] b`` is ``a == b``;
* a faulted condition takes the boolean given for its site;
* a randomized value (``RANDOM``) is drawn uniformly from the nonzero
  integers as wide as the value it replaces, and never narrower than the
  smallest prime of the instance.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from .analyzer import AnalysisSummary
from .faults import enumerate_sites
from .terms import (
    Assign,
    Cond,
    CondKind,
    DeclNoProp,
    DeclPrime,
    FaultType,
    Kind,
    Outcome,
    Program,
    Return,
    SiteId,
    Term,
    VarKind,
    Verdict,
    Verif,
)

def primes_between(lo: int, hi: int) -> tuple[int, ...]:
    return tuple(n for n in range(max(lo, 2), hi + 1)
                 if all(n % k for k in range(2, math.isqrt(n) + 1)))


PRIME_POOL = primes_between(5, 97)


class _Random:
    def __repr__(self) -> str:
        return "RANDOM"


RANDOM = _Random()


class NonInvertible(ArithmeticError):
    """A modular inverse was requested for a value sharing a factor with the modulus."""


@dataclass(frozen=True)
class Abort:
    check: int  # 1-based verification number


@dataclass(frozen=True)
class ConcreteInstance:
    values: Mapping[str, int]
    p: int
    q: int
    e: int
    d: int
    m: int
    extra: int = 1  # product of the primes other than p and q
    min_width: int = 3  # bits of a randomized value, at least

    @property
    def N(self) -> int:
        return self.p * self.q

    @property
    def signature(self) -> int:
        return pow(self.m, self.d, self.N)


def _coprime(rng: random.Random, lo: int, hi: int, n: int) -> int:
    while True:
        x = rng.randrange(lo, hi)
        if math.gcd(x, n) == 1:
            return x


def sample_instance(program: Program, rng: random.Random,
                    pool: tuple[int, ...] = PRIME_POOL) -> ConcreteInstance:
    """Draw a valuation of every declared input.

    Primes are distinct and taken from ``pool``. ``e`` is invertible
    modulo ``lcm(p-1, q-1)``. ``d`` is a random representative of the inverse
    class, about as large as ``N**2`` so that reducing it by a faulted
    modulus still changes it. ``m`` is coprime to every prime. Other
    unconstrained inputs get values in ``[1, 100]``.
    """
    # declaration order, so a seed gives the same instance in every process
    primes = [n for n, v in program.inputs().items() if v.kind == VarKind.PRIME]
    if len(primes) < 2:
        raise ValueError("an instance needs at least two prime variables")
    chosen = rng.sample(pool, len(primes))
    pv = dict(zip(primes, chosen))
    p = pv.get("p", chosen[0])
    q = pv.get("q", chosen[1])
    lam = math.lcm(p - 1, q - 1)
    e = _coprime(rng, 3, lam, lam) if lam > 3 else 1
    prod = math.prod(chosen)
    d = pow(e, -1, lam) + lam * rng.randrange(1, p * q * prod)
    m = _coprime(rng, 2, p * q, prod)
    values = dict(pv)
    for st in program.statements:
        if isinstance(st, DeclNoProp):
            for name, _ in st.vars:
                values[name] = {"m": m, "e": e, "d": d}.get(name, rng.randint(1, 100))
    extra = math.prod(v for k, v in pv.items() if v not in (p, q))
    return ConcreteInstance(values, p, q, e, d, m, extra, min(chosen).bit_length())


def _short(x: int) -> str:
    return str(x) if abs(x).bit_length() < 64 else f"<{abs(x).bit_length()}-bit value>"


class _Machine:
    def __init__(self, env: dict, faults: Mapping, rng: random.Random,
                 span: int, min_width: int = 1):
        self.env = env
        self.faults = faults
        self.rng = rng
        self.span = span
        self.min_width = min_width

    def _hit(self, site):
        return site is not None and site in self.faults

    def draw(self, genuine: int) -> int:
        w = max(abs(genuine).bit_length(), self.min_width)
        return self.rng.randrange(1, 1 << w)

    def term(self, t: Term, n: Optional[int] = None) -> int:
        """Value of ``t``; only meaningful modulo ``n`` when ``n`` is given."""
        if self._hit(t.site):
            v = self.faults[t.site]
            v = self.draw(self._node(t, n)) if v is RANDOM else int(v)
            return v % n if n else v
        return self._node(t, n)

    def _node(self, t: Term, n: Optional[int]) -> int:
        k = t.kind
        if k == Kind.ZERO:
            return 0
        if k == Kind.ONE:
            return 1
        if k == Kind.VAR:
            v = self.env[t.name]
        elif k == Kind.NEG:
            v = -self.term(t.args[0], n)
        elif k == Kind.SUM:
            v = sum(self.term(a, n) for a in t.args)
        elif k == Kind.PROD:
            v = math.prod(self.term(a, n) for a in t.args)
        elif k == Kind.POW:
            b = self.term(t.args[0], n)
            x = self.term(t.args[1])
            if n:
                try:
                    v = pow(b, x, n)
                except ValueError:
                    raise NonInvertible(f"base not invertible modulo {_short(n)}") from None
            elif x < 0:
                if b not in (1, -1):
                    raise NonInvertible("negative power outside a modulus")
                v = b ** -x  # 1 and -1 are their own inverses
            else:
                v = b ** x
        elif k == Kind.MOD:
            m = self.term(t.args[1])
            if m == 0:
                v = self.rng.randrange(self.span)
            else:
                v = self.term(t.args[0], m) % m
        else:
            raise ValueError(f"cannot evaluate {k.name}")
        return v % n if n else v

    def cond(self, c: Cond) -> bool:
        if self._hit(c.site):
            return bool(self.faults[c.site])
        k = c.kind
        if k == CondKind.AND:
            return self.cond(c.subs[0]) and self.cond(c.subs[1])
        if k == CondKind.OR:
            return self.cond(c.subs[0]) or self.cond(c.subs[1])
        if k in (CondKind.EQ, CondKind.NEQ):
            same = self.term(c.terms[0]) == self.term(c.terms[1])
            return same if k == CondKind.EQ else not same
        a, n, b = c.terms
        nv = self.term(n)
        if nv == 0:
            same = self.term(a) == self.term(b)
        else:
            same = (self.term(a, nv) - self.term(b, nv)) % nv == 0
        return same if k == CondKind.EQMOD else not same


def eval_concrete(program: Program, inst: ConcreteInstance,
                  faults: Mapping[SiteId, Union[int, bool]] = None,
                  rng: Optional[random.Random] = None) -> Union[int, Abort]:
    """Run ``program`` on ``inst``.

    ``faults`` maps a site id to the value that replaces it: an integer or
    ``RANDOM`` for cells and expression sites, a boolean for condition sites.
    """
    faults = dict(faults or {})
    rng = rng or random.Random(0)
    env: dict[str, int] = {}
    mach = _Machine(env, faults, rng, inst.N * inst.extra, inst.min_width)
    check = 0
    for i, st in enumerate(program.statements):
        if isinstance(st, (DeclNoProp, DeclPrime)):
            for name, _ in st.vars:
                sid = SiteId(i, cell=name)
                v = faults.get(sid, inst.values[name])
                env[name] = mach.draw(inst.values[name]) if v is RANDOM else int(v)
        elif isinstance(st, Assign):
            env[st.var] = mach.term(st.expr)
        elif isinstance(st, Verif):
            check += 1
            if mach.cond(st.cond):
                return Abort(check)
        elif isinstance(st, Return):
            return mach.term(st.expr)
    raise ValueError("program has no return statement")


def eval_term(t: Term, values: Mapping[str, int]) -> int:
    """Integer value of a fault-free term."""
    return _Machine(dict(values), {}, random.Random(0), 1).term(t)


def bellcore_extract(S: int, S_hat: int, N: int, m: Optional[int] = None,
                     e: Optional[int] = None) -> Optional[int]:
    """A nontrivial factor of ``N`` from a correct and a faulty signature, or None."""
    if S == S_hat:
        raise ValueError("the two signatures are equal")
    g = math.gcd(N, S - S_hat)
    if 1 < g < N:
        return g
    if m is not None and e is not None:
        g = math.gcd(N, m - pow(S_hat, e, N))
        if 1 < g < N:
            return g
    return None


# -- cross validation ---------------------------------------------------------


@dataclass(frozen=True)
class ValidationRow:
    plan: str
    verdict: Verdict
    trials: int
    extractions: int
    skipped: int  # instances resampled after a non-invertible value
    aborted: int = 0
    unchanged: int = 0  # faulted result equal to the genuine signature

    @property
    def rate(self) -> float:
        return self.extractions / self.trials if self.trials else 0.0

    @property
    def rate_when_changed(self) -> float:
        """Extraction rate over the trials whose result differed from the signature."""
        n = self.trials - self.aborted - self.unchanged
        return self.extractions / n if n else 0.0


@dataclass
class ValidationReport:
    threshold: float
    rows: list[ValidationRow] = field(default_factory=list)

    @property
    def attacks(self) -> list[ValidationRow]:
        return [r for r in self.rows if r.verdict == Verdict.ATTACK]

    @property
    def others(self) -> list[ValidationRow]:
        return [r for r in self.rows if r.verdict != Verdict.ATTACK]

    @property
    def failures(self) -> list[ValidationRow]:
        """Symbolic attacks below the extraction threshold."""
        return [r for r in self.attacks if r.rate < self.threshold]

    @property
    def false_passes(self) -> int:
        return sum(r.extractions for r in self.others)


def _fault_values(o: Outcome, rng: random.Random, cond_sites: set) -> dict:
    branch = dict(o.branch or ())
    out: dict = {}
    for f in o.plan.faults:
        if f.site in cond_sites:
            if f.type == FaultType.ZEROING:
                out[f.site] = False
            else:
                out[f.site] = branch.get(f.site, rng.random() < 0.5)
        elif f.type == FaultType.ZEROING:
            out[f.site] = 0
        else:
            out[f.site] = RANDOM
    return out


def trial_outcome(program: Program, o: Outcome, rng: random.Random,
                  cond_sites: set, pool: tuple[int, ...] = PRIME_POOL,
                  max_resample: int = 50) -> tuple[str, int]:
    """One random trial of plan ``o``.

    Returns the outcome (``"extracted"``, ``"aborted"``, ``"unchanged"`` or
    ``"no factor"``) and the number of resampled instances.
    """
    for skipped in range(max_resample):
        inst = sample_instance(program, rng, pool)
        faults = _fault_values(o, rng, cond_sites)
        try:
            res = eval_concrete(program, inst, faults, rng)
        except NonInvertible:
            continue
        if isinstance(res, Abort):
            return "aborted", skipped
        if res == inst.signature:
            return "unchanged", skipped
        found = bellcore_extract(inst.signature, res, inst.N, inst.m, inst.e)
        return ("extracted" if found else "no factor"), skipped
    return "no factor", max_resample


def cross_validate(summary: AnalysisSummary, trials: int = 100, seed: int = 0,
                   samples: int = 20, threshold: float = 0.9,
                   pool: tuple[int, ...] = PRIME_POOL) -> ValidationReport:
    """Numerically replay every attack and a sample of the other verdicts."""
    rng = random.Random(seed)
    program = summary.program
    catalog = enumerate_sites(program, True, False)
    cond_sites = {s.id for s in catalog.sites(True) if s.role == "cond"}
    attacks = [o for o in summary.outcomes if o.verdict == Verdict.ATTACK]
    rest = [o for o in summary.outcomes
            if o.verdict in (Verdict.DETECTED, Verdict.HARMLESS)]
    if len(rest) > samples:
        rest = rng.sample(rest, samples)
    report = ValidationReport(threshold)
    for o in attacks + rest:
        tally = {"extracted": 0, "aborted": 0, "unchanged": 0, "no factor": 0}
        skipped = 0
        for _ in range(trials):
            status, n = trial_outcome(program, o, rng, cond_sites, pool)
            tally[status] += 1
            skipped += n
        report.rows.append(ValidationRow(str(o.plan), o.verdict, trials, tally["extracted"],
                                         skipped, tally["aborted"], tally["unchanged"]))
    return report
