import pytest

from modfault import analyzer
from modfault.analyzer import AnalysisError, analyze, check_attack, classify, run
from modfault.faults import apply_fault
from modfault.parser import parse
from modfault.simplify import PassBoundExceeded, simplifier_for
from modfault.terms import Fault, FaultPlan, FaultType, SiteId, Timing, Verdict, var

Z, R = FaultType.ZEROING, FaultType.RANDOMIZING


def plan(*specs):
    out = []
    for text, ftype, timing in specs:
        out.append(Fault(SiteId.parse(text), ftype, timing))
    return FaultPlan(tuple(sorted(out, key=lambda f: f.site.sort_key())))


def verdict(p, *specs):
    simp = simplifier_for(p.primes)
    return classify(p, run(p, simp=simp), plan(*specs), simp)


P = Timing.PERMANENT
T = Timing.TRANSIENT


@pytest.mark.parametrize("name", ["unprotected", "shamir", "aumuller"])
def test_genuine_runs_complete(programs, name):
    res = run(programs[name])
    assert res.aborted is None and res.final is not None


def test_genuine_results_agree(programs):
    # the three implementations compute the same signature term
    finals = {n: run(p).final for n, p in programs.items()}
    simp = simplifier_for({"p", "q"})
    assert simp.equal(finals["unprotected"], finals["aumuller"])


@pytest.mark.parametrize("ftype", [Z, R])
def test_recombination_attack_unprotected(programs, ftype):
    o = verdict(programs["unprotected"], ("s7:1.1", ftype, P))
    assert o.verdict == Verdict.ATTACK and o.witness is not None


def test_attack_condition_parts_for_zeroed_recombination(programs):
    p = programs["unprotected"]
    simp = simplifier_for(p.primes)
    genuine = run(p, simp=simp)
    faulted = run(apply_fault(p, plan(("s7:1.1", Z, P))), simp=simp)
    assert not simp.equal(genuine.final, faulted.final)
    assert simp.equal_mod(genuine.final, faulted.final, var("q"))
    assert not simp.equal_mod(genuine.final, faulted.final, var("p"))
    assert check_attack(genuine, faulted, p.attack, simp)


def test_shamir_named_attacks(programs):
    p = programs["shamir"]
    assert verdict(p, ("s11:1.1.0.1", Z, P)).verdict == Verdict.ATTACK
    assert verdict(p, ("s11:1.1.0.1", R, P)).verdict == Verdict.ATTACK
    assert verdict(p, ("s9:1", R, T)).verdict == Verdict.ATTACK


def test_shamir_check_catches_exponent_fault(programs):
    o = verdict(programs["shamir"], ("s5:", R, P))
    assert o.verdict == Verdict.DETECTED and o.check == 1


def test_aborted_run_is_never_an_attack(programs):
    p = programs["shamir"]
    simp = simplifier_for(p.primes)
    genuine = run(p, simp=simp)
    faulted = run(apply_fault(p, plan(("s5:", R, P))), simp=simp)
    assert faulted.aborted == 1
    assert not check_attack(genuine, faulted, p.attack, simp)


def test_randomized_condition_explores_both_branches(programs):
    p = programs["shamir"]
    o = verdict(p, ("s5:", R, P), ("s12:0", R, P))
    assert o.verdict == Verdict.ATTACK
    assert o.branch == ((SiteId(12, (0,)), False),)


def test_zeroed_condition_skips_abort(programs):
    assert verdict(programs["shamir"], ("s5:", R, P), ("s12:0", Z, P)).verdict == Verdict.ATTACK


def test_condition_only_fault_is_harmless(programs):
    assert verdict(programs["shamir"], ("s12:0", R, P)).verdict == Verdict.HARMLESS


def test_mod_zero_is_detected_in_aumuller(programs):
    o = verdict(programs["aumuller"], ("s14:1", Z, T))
    assert o.verdict == Verdict.DETECTED and o.check == 3


def test_summary_counts(programs):
    s = analyze(programs["unprotected"])
    assert s.total == 24 and s.sites == 12
    assert s.count(Verdict.ATTACK) == len(s.attacks)
    assert sum(s.counts.values()) == s.total
    assert s.count(Verdict.ATTACK, "randomizing") + s.count(Verdict.ATTACK, "zeroing") \
        == s.count(Verdict.ATTACK)


def test_analysis_is_deterministic(programs):
    a = analyze(programs["shamir"], allow_transient=True)
    b = analyze(programs["shamir"], allow_transient=True)
    assert [(str(o.plan), o.verdict, o.check) for o in a.outcomes] == \
           [(str(o.plan), o.verdict, o.check) for o in b.outcomes]


def test_three_faults_warn(programs):
    s = analyze(programs["unprotected"], k=3, types=(Z,))
    assert s.warnings and s.total == 220


def test_genuine_abort_is_an_error():
    p = parse("noprop a ;\nif a = a abort with a ;\nreturn a ;\n%%\n_ != @\n")
    with pytest.raises(AnalysisError):
        analyze(p)


def test_pass_bound_becomes_error_verdict(programs, monkeypatch):
    p = programs["unprotected"]
    simp = simplifier_for(p.primes)
    genuine = run(p, simp=simp)

    def boom(*a, **k):
        raise PassBoundExceeded("no fixpoint")

    monkeypatch.setattr(analyzer, "run", boom)
    o = classify(p, genuine, plan(("s7:", Z, P)), simp)
    assert o.verdict == Verdict.ERROR and "no fixpoint" in o.message


def test_facts_are_logged(programs):
    s = analyze(programs["aumuller"])
    assert any(f.prop == "CoprimeAssumed" for f in s.facts)
