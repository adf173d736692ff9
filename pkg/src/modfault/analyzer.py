"""Symbolic execution of (faulted) programs and attack classification."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .faults import (
    SiteCatalog,
    apply_fault,
    enumerate_plans,
    enumerate_sites,
    random_condition_sites,
)
from .simplify import PassBoundExceeded, Simplifier, simplifier_for
from .terms import (
    Assign,
    Cond,
    CondKind,
    DeclNoProp,
    DeclPrime,
    Fault,
    FaultPlan,
    FaultType,
    Kind,
    Outcome,
    Program,
    Return,
    SiteId,
    Term,
    Verdict,
    Verif,
    var,
)


class AnalysisError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunResult:
    final: Optional[Term] = None
    aborted: Optional[int] = None  # 1-based verification number
    facts: frozenset = frozenset()
    residues: tuple[Term, ...] = ()
    env: Mapping[str, Term] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        assert (self.aborted is None) != (self.final is None)


def _subst(t: Term, env: Mapping[str, Term]) -> Term:
    if t.kind == Kind.VAR:
        return env[t.name]
    if not t.args:
        return t
    return t.with_args(_subst(a, env) for a in t.args)


def _residues(t: Term) -> list[Term]:
    # symbolic inverses of faulted values cannot be decided; kept for review
    return [x for x in t.walk()
            if x.is_inverse and any(y.kind == Kind.OPAQUE for y in x.args[0].walk())]


class _Eval:
    def __init__(self, simp: Simplifier, env: Mapping[str, Term],
                 choices: Mapping[SiteId, bool]):
        self.simp = simp
        self.env = env
        self.choices = choices
        self.facts: set = set()

    def term(self, t: Term) -> Term:
        r, facts = self.simp.simplify_logged(_subst(t, self.env))
        self.facts |= facts
        return r

    def cond(self, c: Cond) -> bool:
        k = c.kind
        if k == CondKind.FORCED:
            return c.value
        if k == CondKind.RANDOM:
            return self.choices[c.site]
        if k == CondKind.AND:
            return self.cond(c.subs[0]) and self.cond(c.subs[1])
        if k == CondKind.OR:
            return self.cond(c.subs[0]) or self.cond(c.subs[1])
        ts = [self.term(x) for x in c.terms]
        if k in (CondKind.EQ, CondKind.NEQ):
            same = self.simp.equal(ts[0], ts[1])
            return same if k == CondKind.EQ else not same
        same = self.simp.equal_mod(ts[0], ts[2], ts[1])
        # not provably congruent is read as unequal
        return same if k == CondKind.EQMOD else not same


def run(p: Program, choices: Mapping[SiteId, bool] = None,
        simp: Optional[Simplifier] = None) -> RunResult:
    simp = simp or simplifier_for(p.primes)
    env: dict[str, Term] = {}
    cells = dict(p.cell_faults)
    ev = _Eval(simp, env, choices or {})
    check = 0
    for st in p.statements:
        if isinstance(st, (DeclNoProp, DeclPrime)):
            for name, _ in st.vars:
                env[name] = cells.get(name, var(name))
        elif isinstance(st, Assign):
            env[st.var] = ev.term(st.expr)
        elif isinstance(st, Verif):
            check += 1
            if ev.cond(st.cond):
                return RunResult(aborted=check, facts=frozenset(ev.facts), env=env)
        elif isinstance(st, Return):
            final = ev.term(st.expr)
            return RunResult(final=final, facts=frozenset(ev.facts),
                             residues=tuple(_residues(final)), env=env)
    raise AnalysisError("program has no return statement")


def check_attack(genuine: RunResult, faulted: RunResult, cond: Cond,
                 simp: Simplifier) -> bool:
    if faulted.aborted is not None:
        return False
    env = dict(genuine.env)
    env["_"] = genuine.final
    env["@"] = faulted.final
    return _Eval(simp, env, {}).cond(cond)


@dataclass
class AnalysisSummary:
    program: Program
    params: dict
    genuine: Term
    sites: int
    outcomes: list[Outcome]
    facts: frozenset = frozenset()
    warnings: list[str] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.outcomes)

    @property
    def counts(self) -> Counter:
        """(type signature, verdict) -> number of plans."""
        return Counter((o.plan.type_signature, o.verdict) for o in self.outcomes)

    def count(self, verdict: Verdict, signature: Optional[str] = None) -> int:
        return sum(n for (sig, v), n in self.counts.items()
                   if v == verdict and (signature is None or sig == signature))

    @property
    def attacks(self) -> list[Outcome]:
        return [o for o in self.outcomes if o.verdict == Verdict.ATTACK]


def classify(p: Program, genuine: RunResult, plan: FaultPlan,
             simp: Simplifier) -> Outcome:
    faulted = apply_fault(p, plan)
    rand_sites = random_condition_sites(faulted)
    detected: list[int] = []
    harmless = False
    # attacker-favourable: any branch of a randomized condition may be taken
    for values in itertools.product((False, True), repeat=len(rand_sites)):
        choices = dict(zip(rand_sites, values))
        try:
            res = run(faulted, choices, simp)
        except (PassBoundExceeded, RecursionError) as exc:
            return Outcome(plan, Verdict.ERROR, message=f"{type(exc).__name__}: {exc}")
        if res.aborted is not None:
            detected.append(res.aborted)
            continue
        if check_attack(genuine, res, p.attack, simp):
            return Outcome(plan, Verdict.ATTACK, witness=res.final,
                           branch=tuple(sorted(choices.items(), key=lambda kv: kv[0].sort_key())))
        harmless = True
    if harmless:
        return Outcome(plan, Verdict.HARMLESS)
    return Outcome(plan, Verdict.DETECTED, check=min(detected))


def analyze(p: Program, k: int = 1,
            types: Iterable[FaultType] = (FaultType.ZEROING, FaultType.RANDOMIZING),
            allow_transient: bool = False, protect_conditions: bool = False,
            require: Iterable[Fault] = ()) -> AnalysisSummary:
    types = tuple(types)
    require = tuple(require)
    simp = simplifier_for(p.primes)
    genuine = run(p, simp=simp)
    if genuine.aborted is not None:
        raise AnalysisError(f"the unfaulted program aborts at verification {genuine.aborted}")
    catalog: SiteCatalog = enumerate_sites(p, allow_transient, protect_conditions)
    warnings = []
    if k >= 3:
        warnings.append(f"{k} faults: the number of plans grows combinatorially with the fault count")
    outcomes = [classify(p, genuine, plan, simp)
                for plan in enumerate_plans(catalog, k, types, allow_transient, require)]
    params = {
        "faults": k,
        "types": ",".join(t.value for t in sorted(types, key=lambda t: t.value, reverse=True)),
        "transient": allow_transient,
        "protect_conditions": protect_conditions,
        "require": " + ".join(str(f) for f in require),
    }
    return AnalysisSummary(p, params, genuine.final, len(catalog.sites(allow_transient)),
                           outcomes, genuine.facts, warnings)
