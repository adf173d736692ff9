import math

import pytest

from modfault.faults import (
    InvalidSite, apply_fault, enumerate_plans, enumerate_sites, plan_count, random_condition_sites,
)
from modfault.parser import parse
from modfault.terms import (
    Assign, CondKind, Fault, FaultPlan, FaultType, Kind, SiteId, Timing, Verif,
)

Z, R = FaultType.ZEROING, FaultType.RANDOMIZING
BOTH = (Z, R)


def fault(text, ftype=Z, timing=Timing.PERMANENT):
    return Fault(SiteId.parse(text), ftype, timing)


@pytest.mark.parametrize("name, perm, trans", [
    ("unprotected", 12, 25),
    ("shamir", 31, 66),
    ("aumuller", 52, 120),
])
def test_site_totals(programs, name, perm, trans):
    cat = enumerate_sites(programs[name], allow_transient=True)
    assert len(cat.sites(False)) == perm
    assert len(cat.sites(True)) == trans


def _node_at(p, sid):
    """Nodes from the statement root down to the site."""
    st = p.statements[sid.stmt]
    path = list(sid.path)
    if isinstance(st, Verif):
        node = st.cond if path.pop(0) == 0 else st.error
    else:
        node = st.expr
    chain = [node]
    for i in path:
        if getattr(node, "subs", ()):
            node = node.subs[i]
        elif hasattr(node, "terms"):
            node = node.terms[i]
        else:
            node = node.args[i]
        chain.append(node)
    return chain


@pytest.mark.parametrize("name", ["unprotected", "shamir", "aumuller"])
def test_permanent_sites_avoid_braces(programs, name):
    p = programs[name]
    for s in enumerate_sites(p).sites(False):
        if s.role == "cell":
            st = p.statements[s.id.stmt]
            assert dict(st.vars)[s.id.cell] is False
        else:
            assert not any(n.protected for n in _node_at(p, s.id)), s


def test_transient_sites_include_reads_of_protected_inputs(programs):
    cat = enumerate_sites(programs["shamir"], allow_transient=True)
    labels = {str(s.id): s.label for s in cat.transient}
    assert labels["s9:1"] == "p"


def test_catalog_ids_unique(programs):
    for p in programs.values():
        ids = [s.id for s in enumerate_sites(p, True).sites(True)]
        assert len(ids) == len(set(ids))


@pytest.mark.parametrize("k", [1, 2, 3])
def test_plan_count_matches_enumeration(programs, k):
    cat = enumerate_sites(programs["unprotected"])
    plans = list(enumerate_plans(cat, k, BOTH))
    assert len(plans) == plan_count(12, k, 2) == math.comb(12, k) * 2 ** k
    for plan in plans:
        sites = [f.site for f in plan.faults]
        assert len(set(sites)) == k


def test_plans_are_deterministic_and_zeroing_first(programs):
    cat = enumerate_sites(programs["shamir"])
    first = list(enumerate_plans(cat, 1, (R, Z)))
    assert first == list(enumerate_plans(cat, 1, BOTH))
    assert first[0].faults[0].type == Z and first[1].faults[0].type == R


def test_enumeration_rejects_bad_arguments(programs):
    cat = enumerate_sites(programs["shamir"])
    with pytest.raises(ValueError):
        list(enumerate_plans(cat, 0, BOTH))
    with pytest.raises(ValueError):
        list(enumerate_plans(cat, 1, ()))
    with pytest.raises(InvalidSite):
        list(enumerate_plans(cat, 1, BOTH, require=[fault("s99:")]))


def test_required_faults_are_in_every_plan(programs):
    cat = enumerate_sites(programs["aumuller"], protect_conditions=True)
    req = [fault("s19:"), fault("s20:")]
    plans = list(enumerate_plans(cat, 3, BOTH, require=req))
    assert len(plans) == (len(cat.sites(False)) - 2) * 2
    assert all(set(req) <= set(pl.faults) for pl in plans)


def test_protect_conditions_drops_whole_conditions(programs):
    p = programs["aumuller"]
    full = enumerate_sites(p)
    guarded = enumerate_sites(p, protect_conditions=True)
    assert len(guarded.sites(False)) == 36
    verif = {i for i, st in enumerate(p.statements) if isinstance(st, Verif)}
    kept = {s.id for s in guarded.sites(False)}
    assert all(s.id.stmt not in verif or s.id.path[:1] == (1,) for s in guarded.sites(False))
    assert any(s.role == "cond" for s in full.sites(False))
    assert kept < {s.id for s in full.sites(False)}


def test_zeroing_replaces_subterm(programs):
    p = programs["unprotected"]
    out = apply_fault(p, FaultPlan((fault("s7:1.1"),)))
    e = out.statements[7].expr
    assert e.args[1].args[1].kind == Kind.OPAQUE and e.args[1].args[1].is_zero
    assert p.statements[7].expr.args[1].args[1].kind == Kind.MOD  # original untouched


def test_randomizing_cell(programs):
    out = apply_fault(programs["unprotected"], FaultPlan((fault("s0:m", R),)))
    (name, t), = out.cell_faults
    assert name == "m" and t.kind == Kind.OPAQUE and not t.is_zero


def test_condition_faults(programs):
    p = programs["shamir"]
    z = apply_fault(p, FaultPlan((fault("s12:0"),)))
    assert z.statements[12].cond.kind == CondKind.FORCED and z.statements[12].cond.value is False
    r = apply_fault(p, FaultPlan((fault("s12:0", R),)))
    assert r.statements[12].cond.kind == CondKind.RANDOM
    assert random_condition_sites(r) == [SiteId(12, (0,))]


def test_enclosing_fault_wins(programs):
    p = programs["unprotected"]
    plan = FaultPlan((fault("s7:1"), fault("s7:1.1", R)))
    e = apply_fault(p, plan).statements[7].expr
    assert e.args[1].kind == Kind.OPAQUE and e.args[1].is_zero


@pytest.mark.parametrize("text, timing, msg", [
    ("s2:", Timing.PERMANENT, "protected"),
    ("s1:p", Timing.PERMANENT, "protected"),
    ("s7:0", Timing.PERMANENT, "requires a transient"),
    ("s7:5", Timing.PERMANENT, "no site"),
    ("s40:", Timing.PERMANENT, "no statement"),
])
def test_invalid_sites(programs, text, timing, msg):
    with pytest.raises(InvalidSite, match=msg):
        apply_fault(programs["unprotected"], FaultPlan((fault(text, Z, timing),)))


def test_transient_read_of_protected_input_allowed(programs):
    out = apply_fault(programs["shamir"], FaultPlan((fault("s9:1", R, Timing.TRANSIENT),)))
    assert out.statements[9].expr.args[1].kind == Kind.OPAQUE


def test_plan_rendering():
    plan = FaultPlan((fault("s5:"), fault("s21:0", R)))
    assert str(plan) == "Z@s5: + R@s21:0"
    assert plan.type_signature == "mixed"
    assert FaultPlan((fault("s5:"),)).type_signature == "zeroing"


@pytest.mark.parametrize("text", ["s4:0.1", "s7:", "s1:p", "s12:1.0.0"])
def test_site_id_round_trip(text):
    assert str(SiteId.parse(text)) == text


@pytest.mark.parametrize("text", ["4:0", "sx:", "s1", "s1:a.b"])
def test_site_id_parse_errors(text):
    with pytest.raises(ValueError):
        SiteId.parse(text)
