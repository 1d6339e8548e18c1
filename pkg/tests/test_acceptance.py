"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (visible in ``pytest -v``
output and when this file is run as a script) and then asserts.
Expected values come from the independent enumerators in ``oracle.py`` and
from hand-written tables, never from the checker itself.
"""

import sys
import time

import pytest

from dynrbac import corpus, engine
from dynrbac.checker import (
    DISCHARGED, GUARD, INIT, INV, SIMULATION, VIOLATED, check_all,
    check_invariants, check_refinement, reachable_states, replay,
)
from dynrbac.dsl import parse_policy, pretty_print, validate
from dynrbac.errors import ParseError
from dynrbac.model import context_from_machine

from conftest import mutate
from fuzz import CORPUS_MACHINES, syntax_mutations
from oracle import dfs_states, expected_permissions, rms_states, to_oracle

TIME_LIMIT = 5.0


def _report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line, flush=True)
    return ok


# 1 -------------------------------------------------------------------------------

def criterion_1():
    details, ok = [], True
    for name in CORPUS_MACHINES:
        t0 = time.perf_counter()
        report = check_all(corpus.load(name))
        dt = time.perf_counter() - t0
        kinds = {o.kind for o in report.obligations}
        good = (report.ok and report.complete and not report.violations
                and kinds == {INIT, INV} and dt < TIME_LIMIT)
        ok &= good
        details.append(f"{name} {len(report.obligations)} obligations, "
                       f"{report.reachable_count} states, {dt:.2f}s")
    return _report(1, ok, "; ".join(details))


# 2 -------------------------------------------------------------------------------

def criterion_2():
    m = corpus.load("rms_abs.pol")
    counts, ok = [], True
    for n, want in ((1, 5), (2, 25), (3, 125)):
        states = reachable_states(corpus.with_reports(m, n))
        oracle = rms_states(n)
        ok &= len(states) == len(oracle) == want
        ok &= {to_oracle(s, n) for s in states} == oracle
        counts.append(f"{len(states)}/{len(oracle)}")
    return _report(2, ok, "engine/oracle " + ", ".join(counts) + " (want 5, 25, 125)")


# 3 -------------------------------------------------------------------------------

STATE_INVARIANTS = ("inv_VOID", "inv_CREATED", "inv_SUBMITTED", "inv_APPROVED")


def criterion_3():
    m = corpus.load("rms_ref1.pol")
    report = check_invariants(m)
    by_checker = all(
        report.find(INV, label, e.name).status == DISCHARGED
        for label in STATE_INVARIANTS for e in m.events)
    states = dfs_states(m)
    mismatches = 0
    seen_states = set()
    for s in states:
        for rp in m.carrier("REPORTS").elements:
            st = s["report_state"][rp]
            seen_states.add(st)
            want = expected_permissions(st)
            for role, rights in want.items():
                if s["permissions"][(role, rp)] != rights:
                    mismatches += 1
    ok = by_checker and report.ok and mismatches == 0 and len(states) == 25 and \
        seen_states == {"VOID", "CREATED", "SUBMITTED", "APPROVED", "ARCHIVED"}
    return _report(3, ok, f"checker discharged={by_checker}; {len(states)} states "
                          f"re-evaluated against the permission table, {mismatches} mismatches")


# 4 -------------------------------------------------------------------------------

def criterion_4():
    m = mutate("rms_ref1.pol",
               "permissions := permissions <+ ({Reporter |-> rp |-> {R}} union "
               "{Controller |-> rp |-> {R, W}})\n", "")
    ob = check_invariants(m).find(INV, "inv_SUBMITTED", "SubmitReport")
    trace = [str(s) for s in ob.trace.steps] if ob and ob.trace else None
    first = ob is not None and ob.status == VIOLATED and trace == [
        "CreateReport(rp=r1)", "SubmitReport(rp=r1)"]

    weak = mutate("rms_ref1.pol",
                  "where rp in reports /\\ report_state(rp) = CREATED /\\ "
                  "R in permissions(Reporter, rp)", "where true")
    gs = check_refinement(corpus.load("rms_abs.pol"), weak).find(GUARD, event="SubmitReport")
    second = gs is not None and gs.status == VIOLATED
    return _report(4, first and second,
                   f"override deleted -> {ob.name if ob else None} {ob.status if ob else ''} "
                   f"trace {trace}; guard weakened -> GuardStrengthening(SubmitReport) "
                   f"{gs.status if gs else 'missing'}")


# 5 -------------------------------------------------------------------------------

def criterion_5():
    details, ok = [], True
    for a, c in (("rms_abs.pol", "rms_ref1.pol"), ("rms_ref1.pol", "rms_ref2.pol")):
        report = check_refinement(corpus.load(a), corpus.load(c))
        kinds = {o.kind for o in report.obligations}
        good = report.ok and kinds == {GUARD, SIMULATION}
        ok &= good
        details.append(f"{c} refines {a}: {len(report.obligations)} obligations, "
                       f"{len(report.violations)} violated")
    return _report(5, ok, "; ".join(details))


# 6 -------------------------------------------------------------------------------

RIGHTS = ("C", "R", "W", "D")
LOCKED = ("SUBMITTED", "APPROVED", "ARCHIVED")


def _allowed(m, s, ctx, user, rp):
    return {r for r in RIGHTS if engine.decide_access(m, s, ctx, user, r, rp).allowed}


def access_policy_problems(m):
    ctx = context_from_machine(m)
    problems, checked, returned = [], 0, 0
    for s in sorted(reachable_states(m), key=lambda s: s.format()):
        for rp in m.carrier("REPORTS").elements:
            owners = s["owner"][rp]
            if len(owners) != 1:
                continue
            (owner,) = owners
            st = s["report_state"][rp]
            allowed = _allowed(m, s, ctx, owner, rp)
            checked += 1
            if st in LOCKED and allowed & {"W", "D"}:
                problems.append(f"{owner} may {sorted(allowed)} on {st} {rp}")
            if st == "CREATED" and allowed != {"R", "W", "D"}:
                problems.append(f"{owner} gets {sorted(allowed)} on CREATED {rp}")
        for event, b, _, t in engine.successors(m, s):
            if event != "ReturnReport":
                continue
            returned += 1
            rp = b["rp"]
            (owner,) = t["owner"][rp]
            if not {"W", "D"} <= _allowed(m, t, ctx, owner, rp):
                problems.append(f"returned {rp} is not editable by {owner}")
    return problems, checked, returned


def criterion_6():
    details, problems = [], []
    for label, m in (("default population", corpus.load("rms_ref2.pol")),
                     ("3 reporters, 1 report",
                      corpus.with_reports(corpus.with_reporters(corpus.load("rms_ref2.pol"), 3), 1))):
        bad, checked, returned = access_policy_problems(m)
        problems += bad
        details.append(f"{label}: {checked} owned (state, report) pairs, "
                       f"{returned} returns checked")
    return _report(6, not problems and all(d for d in details),
                   "; ".join(details) + (f"; problems: {problems[:3]}" if problems else ""))


# 7 -------------------------------------------------------------------------------

def _mutants():
    return [
        mutate("rms_ref1.pol", "permissions := permissions <+ ({Reporter |-> rp |-> {R}} union "
               "{Controller |-> rp |-> {R, W}})\n", ""),
        mutate("rms_ref1.pol", "permissions := permissions <+ {Administrator |-> rp |-> {R}}", "skip"),
        mutate("rms_abs.pol", "reports := reports \\ {rp}", "skip"),
    ]


def criterion_7():
    replayed, bad = 0, 0
    for m in _mutants():
        for ob in check_invariants(m).violations:
            states = replay(m, ob.trace)
            good = (states == list(ob.trace.states)
                    and not engine.invariant_holds(m, states[-1], ob.invariant)
                    and ob.trace.steps[-1].event == ob.event)
            replayed += 1
            bad += not good
    same = 0
    machines = [corpus.load(n) for n in CORPUS_MACHINES] + _mutants()
    for m in machines:
        one, four = check_invariants(m, workers=1), check_invariants(m, workers=4)
        same += one == four and one.to_text() == four.to_text()
    r1 = check_refinement(corpus.load("rms_ref1.pol"), corpus.load("rms_ref2.pol"), workers=1)
    r4 = check_refinement(corpus.load("rms_ref1.pol"), corpus.load("rms_ref2.pol"), workers=4)
    ok = replayed > 0 and bad == 0 and same == len(machines) and r1 == r4
    return _report(7, ok, f"{replayed - bad}/{replayed} violation traces replay; "
                          f"workers 4 == workers 1 on {same}/{len(machines)} machines "
                          f"and on refinement={r1 == r4}")


# 8 -------------------------------------------------------------------------------

def criterion_8():
    fixpoints = 0
    for name in CORPUS_MACHINES:
        m = corpus.load(name)
        text = pretty_print(m)
        again = parse_policy(text)
        fixpoints += again == m and pretty_print(again) == text and validate(again) == []
    positioned, other = 0, []
    mutations = syntax_mutations(200)
    for text in mutations:
        try:
            parse_policy(text)
            other.append("accepted")
        except ParseError as exc:
            if exc.line >= 1 and exc.column >= 1:
                positioned += 1
            else:
                other.append("unpositioned")
        except Exception as exc:  # a crash
            other.append(type(exc).__name__)
    ok = fixpoints == len(CORPUS_MACHINES) and positioned == len(mutations) == 200
    return _report(8, ok, f"round trip {fixpoints}/{len(CORPUS_MACHINES)}; "
                          f"{positioned}/{len(mutations)} mutations rejected with a position"
                          + (f"; other outcomes: {sorted(set(other))}" if other else ""))


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
            criterion_5, criterion_6, criterion_7, criterion_8]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda f: f.__name__)
def test_acceptance(criterion, capsys):
    with capsys.disabled():
        print()
        ok = criterion()
    assert ok


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
