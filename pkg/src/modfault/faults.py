"""Fault-site enumeration, fault plans and fault application.

Site convention (frozen; reproduces the published totals 12, 31, 52 for
permanent faults and 66, 120 with transient faults):

========================  =========  ==========================================
site                      timing     where
========================  =========  ==========================================
declared variable cell    permanent  each unbraced name in ``noprop``/``prime``
internal expression node  permanent  every non-leaf node outside ``{...}`` in
                                     assignments, verifications and ``return``
condition node            permanent  every atom and every ``/\\``/``\\/`` of an
                                     unbraced verification condition
leaf occurrence           transient  every ``0``, ``1`` or variable read outside
                                     ``{...}`` (reads of braced inputs included)
========================  =========  ==========================================

Subtraction parses as ``a + -b`` so its ``Neg`` node is a site of its own.
With ``protect_conditions`` the whole condition of every verification,
operands included, is left out of the catalog.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

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
    Program,
    Return,
    SiteId,
    Term,
    Timing,
    Verif,
    null_fault,
    random_fault,
)


class InvalidSite(ValueError):
    pass


@dataclass(frozen=True)
class Site:
    id: SiteId
    timing: Timing
    role: str  # "cell", "node", "leaf" or "cond"
    label: str  # concrete syntax of the faulted subterm


@dataclass(frozen=True)
class SiteCatalog:
    permanent: tuple[Site, ...]
    transient: tuple[Site, ...]

    def sites(self, allow_transient: bool = True) -> list[Site]:
        out = list(self.permanent)
        if allow_transient:
            out.extend(self.transient)
        return sorted(out, key=lambda s: s.id.sort_key())

    def __len__(self) -> int:
        return len(self.permanent) + len(self.transient)


def _expr_sites(t: Term, perm: list, trans: list) -> None:
    from .pretty import show_term

    if t.protected:
        return
    if t.is_leaf:
        trans.append(Site(t.site, Timing.TRANSIENT, "leaf", show_term(t)))
        return
    perm.append(Site(t.site, Timing.PERMANENT, "node", show_term(t)))
    for a in t.args:
        _expr_sites(a, perm, trans)


def _cond_sites(c: Cond, perm: list, trans: list, protect_conditions: bool) -> None:
    from .pretty import show_cond

    if c.protected or protect_conditions:
        return
    perm.append(Site(c.site, Timing.PERMANENT, "cond", show_cond(c)))
    if c.is_atom:
        for x in c.terms:
            _expr_sites(x, perm, trans)
    else:
        for s in c.subs:
            _cond_sites(s, perm, trans, protect_conditions)


def enumerate_sites(p: Program, allow_transient: bool = False,
                    protect_conditions: bool = False) -> SiteCatalog:
    perm: list[Site] = []
    trans: list[Site] = []
    for i, st in enumerate(p.statements):
        if isinstance(st, (DeclNoProp, DeclPrime)):
            for name, prot in st.vars:
                if not prot:
                    perm.append(Site(SiteId(i, cell=name), Timing.PERMANENT, "cell", name))
        elif isinstance(st, (Assign, Return)):
            _expr_sites(st.expr, perm, trans)
        elif isinstance(st, Verif):
            _cond_sites(st.cond, perm, trans, protect_conditions)
            _expr_sites(st.error, perm, trans)
    return SiteCatalog(tuple(perm), tuple(trans) if allow_transient else ())


def plan_count(n_sites: int, k: int, n_types: int) -> int:
    return math.comb(n_sites, k) * n_types ** k


def enumerate_plans(catalog: SiteCatalog, k: int, types: Iterable[FaultType],
                    allow_transient: bool = True,
                    require: Iterable[Fault] = ()) -> Iterator[FaultPlan]:
    """All plans of ``k`` distinct sites times fault types, in a fixed order.

    ``require`` pins faults that every plan must contain; the remaining
    ``k - len(require)`` faults range over the other sites.
    """
    if k < 1:
        raise ValueError("fault count must be >= 1")
    types = sorted(set(types), key=lambda t: t.value, reverse=True)  # zeroing first
    if not types:
        raise ValueError("at least one fault type is required")
    require = tuple(require)
    if len(require) > k:
        raise ValueError("more required faults than the fault count")
    sites = catalog.sites(allow_transient)
    known = {s.id: s for s in sites}
    for f in require:
        if f.site not in known:
            raise InvalidSite(f"required fault targets unknown site {f.site}")
    taken = {f.site for f in require}
    free = [s for s in sites if s.id not in taken]
    for combo in itertools.combinations(free, k - len(require)):
        for ts in itertools.product(types, repeat=len(combo)):
            faults = list(require) + [Fault(s.id, t, s.timing) for s, t in zip(combo, ts)]
            faults.sort(key=lambda f: f.site.sort_key())
            yield FaultPlan(tuple(faults))


# -- applying faults ---------------------------------------------------------


def _fault_term(f: Fault) -> Term:
    return null_fault(f.site) if f.type == FaultType.ZEROING else random_fault(f.site)


def _replace_term(t: Term, path: tuple[int, ...], f: Fault) -> Term:
    if t.protected:
        raise InvalidSite(f"site {f.site} is protected")
    if not path:
        if t.is_leaf and f.timing != Timing.TRANSIENT:
            raise InvalidSite(f"leaf site {f.site} requires a transient fault")
        return _fault_term(f)
    i, rest = path[0], path[1:]
    if t.kind == Kind.OPAQUE:
        return t  # already replaced by an enclosing fault
    if i >= len(t.args):
        raise InvalidSite(f"no site {f.site}")
    args = list(t.args)
    args[i] = _replace_term(args[i], rest, f)
    return t.with_args(args)


def _replace_cond(c: Cond, path: tuple[int, ...], f: Fault) -> Cond:
    if c.kind in (CondKind.FORCED, CondKind.RANDOM):
        return c
    if c.protected:
        raise InvalidSite(f"site {f.site} is protected")
    if not path:
        if f.type == FaultType.ZEROING:
            return Cond(CondKind.FORCED, site=c.site, value=False)
        return Cond(CondKind.RANDOM, site=c.site)
    i, rest = path[0], path[1:]
    if c.is_atom:
        terms = list(c.terms)
        terms[i] = _replace_term(terms[i], rest, f)
        return Cond(c.kind, tuple(terms), protected=c.protected, site=c.site)
    subs = list(c.subs)
    subs[i] = _replace_cond(subs[i], rest, f)
    return Cond(c.kind, subs=tuple(subs), protected=c.protected, site=c.site)


def apply_fault(p: Program, plan: FaultPlan) -> Program:
    stmts = list(p.statements)
    cells = dict(p.cell_faults)
    # deepest first so an enclosing fault overrides the ones inside it
    ordered = sorted(plan.faults, key=lambda f: -len(f.site.path))
    for f in ordered:
        sid = f.site
        if sid.stmt >= len(stmts):
            raise InvalidSite(f"no statement {sid.stmt}")
        st = stmts[sid.stmt]
        if sid.cell is not None:
            if not isinstance(st, (DeclNoProp, DeclPrime)):
                raise InvalidSite(f"{sid} is not a declaration")
            prot = dict(st.vars).get(sid.cell)
            if prot is None:
                raise InvalidSite(f"{sid.cell} is not declared at statement {sid.stmt}")
            if prot:
                raise InvalidSite(f"variable {sid.cell} is protected")
            cells[sid.cell] = _fault_term(f)
        elif isinstance(st, (Assign, Return)):
            e = _replace_term(st.expr, sid.path, f)
            stmts[sid.stmt] = Assign(st.var, e, st.pos) if isinstance(st, Assign) \
                else Return(e, st.pos)
        elif isinstance(st, Verif):
            head, rest = sid.path[0], sid.path[1:]
            if head == 0:
                stmts[sid.stmt] = Verif(_replace_cond(st.cond, rest, f), st.error, st.pos)
            else:
                stmts[sid.stmt] = Verif(st.cond, _replace_term(st.error, rest, f), st.pos)
        else:
            raise InvalidSite(f"no fault site {sid}")
    return Program(tuple(stmts), p.attack, tuple(sorted(cells.items())))


def random_condition_sites(p: Program) -> list[SiteId]:
    out: list[SiteId] = []

    def walk(c: Optional[Cond]) -> None:
        if c.kind == CondKind.RANDOM:
            out.append(c.site)
        elif c.kind in (CondKind.AND, CondKind.OR):
            for s in c.subs:
                walk(s)

    for st in p.statements:
        if isinstance(st, Verif):
            walk(st.cond)
    return out
