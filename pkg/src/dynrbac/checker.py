"""Bounded, exhaustive discharge of proof obligations.

Exploration is breadth-first from the initial state, so the first violation
recorded for an obligation comes with a shortest witness trace.  Frontier
expansion can be spread over worker threads; results are merged in frontier
order, which makes reports independent of the worker count.
"""

from __future__ import annotations

import itertools
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import engine
from .dsl import analyze, ast, check_predicate, parse_predicate
from .engine import SystemState, format_binding
from .errors import BoundExceeded, EvaluationError, NotARefinement, ValidationFailed
from .values import format_value

DEFAULT_MAX_STATES = 1_000_000

INIT = "Init"
INV = "Inv"
DEADLOCK = "Deadlock"
GUARD = "GuardStrengthening"
SIMULATION = "Simulation"
WELL_DEFINED = "WellDefined"

DISCHARGED = "Discharged"
VIOLATED = "Violated"


@dataclass(frozen=True)
class Step:
    event: str
    binding: tuple  # ((param, value), ...) in declaration order
    choice: tuple = ()  # ((action index, element), ...)

    @classmethod
    def of(cls, event, binding, choice=None):
        return cls(event, tuple(binding.items()), tuple(sorted((choice or {}).items())))

    def __str__(self) -> str:
        args = ", ".join(f"{k}={format_value(v)}" for k, v in self.binding)
        text = f"{self.event}({args})"
        if self.choice:
            text += " :: " + ", ".join(f"#{i}={format_value(v)}" for i, v in self.choice)
        return text


@dataclass(frozen=True)
class Trace:
    """Steps from the initial state; ``states[i + 1]`` follows ``steps[i]``."""

    steps: tuple = ()
    states: tuple = ()

    def __len__(self) -> int:
        return len(self.steps)

    def __str__(self) -> str:
        return "; ".join(str(s) for s in self.steps) if self.steps else "<initial state>"

    @property
    def final_state(self) -> SystemState | None:
        return self.states[-1] if self.states else None


def replay(m: ast.PolicyMachine, trace: Trace) -> list[SystemState]:
    """Re-execute ``trace`` through the engine and return the visited states."""
    states = [engine.initial_state(m)]
    for step in trace.steps:
        states.append(engine.apply_event(m, states[-1], step.event, dict(step.binding),
                                         dict(step.choice)))
    return states


@dataclass(frozen=True)
class Obligation:
    kind: str
    status: str
    invariant: str | None = None
    event: str | None = None
    trace: Trace | None = None
    note: str = ""

    @property
    def violated(self) -> bool:
        return self.status == VIOLATED

    @property
    def name(self) -> str:
        args = [x for x in (self.invariant, self.event) if x]
        return f"{self.kind}({', '.join(args)})" if args else self.kind

    def record(self) -> dict:
        rec = {"kind": self.kind, "invariant": self.invariant, "event": self.event,
               "status": self.status,
               "trace": [str(s) for s in self.trace.steps] if self.trace else None}
        if self.note:
            rec["note"] = self.note
        return rec


@dataclass
class CheckReport:
    machine: str
    obligations: list = field(default_factory=list)
    reachable_count: int = 0
    explored_transitions: int = 0
    complete: bool = True
    elapsed: float = field(default=0.0, compare=False)

    @property
    def ok(self) -> bool:
        return self.complete and not any(o.violated for o in self.obligations)

    @property
    def violations(self) -> list[Obligation]:
        return [o for o in self.obligations if o.violated]

    def find(self, kind: str, invariant=None, event=None) -> Obligation | None:
        for o in self.obligations:
            if o.kind == kind and o.invariant == invariant and o.event == event:
                return o
        return None

    def to_text(self) -> str:
        lines = [f"machine {self.machine}"]
        for o in self.obligations:
            mark = "ok  " if not o.violated else "FAIL"
            lines.append(f"  [{mark}] {o.name}")
            if o.violated:
                if o.trace is not None:
                    lines.append(f"         trace ({len(o.trace)}): {o.trace}")
                if o.note:
                    lines.append(f"         {o.note}")
        lines.append(f"reachable states: {self.reachable_count}")
        lines.append(f"transitions: {self.explored_transitions}")
        n_bad = len(self.violations)
        if not self.complete:
            lines.append("result: INCOMPLETE (state cap reached)")
        elif n_bad:
            lines.append(f"result: {n_bad} violated of {len(self.obligations)} obligations")
        else:
            lines.append(f"result: all {len(self.obligations)} obligations discharged")
        return "\n".join(lines) + "\n"

    def to_records(self) -> str:
        return "".join(json.dumps(o.record(), sort_keys=True) + "\n" for o in self.obligations)


# -- exploration core ---------------------------------------------------------


class _Search:
    """Breadth-first search with parent pointers for trace reconstruction."""

    def __init__(self, cap: int, workers: int):
        self.cap = cap
        self.workers = max(1, workers)
        self.parent: dict = {}
        self.transitions = 0

    def trace_to(self, state, extra=None) -> Trace:
        steps, states = [], [state]
        while self.parent[state] is not None:
            prev, step = self.parent[state]
            steps.append(step)
            states.append(prev)
            state = prev
        steps.reverse()
        states.reverse()
        if extra is not None:
            steps.append(extra[0])
            states.append(extra[1])
        return Trace(tuple(steps), tuple(states))

    def run(self, init, expand, visit):
        """``expand(state)`` may run on a worker; ``visit(state, payload)``
        runs on the calling thread in frontier order and returns the
        ``(step, successor)`` pairs to enqueue."""
        self.parent = {init: None}
        frontier = [init]
        pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None
        try:
            while frontier:
                if pool is None:
                    payloads = map(expand, frontier)
                else:
                    payloads = pool.map(expand, frontier, chunksize=max(1, len(frontier) // (4 * self.workers)))
                nxt = []
                for state, payload in zip(frontier, payloads):
                    for step, succ in visit(state, payload):
                        if succ in self.parent:
                            continue
                        if len(self.parent) >= self.cap:
                            raise BoundExceeded(self.cap)
                        self.parent[succ] = (state, step)
                        nxt.append(succ)
                frontier = nxt
        finally:
            if pool is not None:
                pool.shutdown()


def _expand_all(m):
    """Expansion that records evaluation errors instead of raising.

    An error is reported as ``(event name, None, message)`` in place of that
    event's transitions; the other events are still expanded.
    """
    names = [e.name for e in m.events]

    def expand(state):
        out = []
        for name in names:
            try:
                found = [(Step.of(ev, b, ch), succ, None)
                         for ev, b, ch, succ in engine.successors(m, state, name)]
            except EvaluationError as exc:
                found = [(name, None, str(exc))]
            out.extend(found)
        return out

    return expand


def reachable_states(m: ast.PolicyMachine, max_states: int = DEFAULT_MAX_STATES,
                     workers: int = 1) -> frozenset:
    """Exactly the states reachable from the initial state by any transitions."""
    search = _Search(max_states, workers)

    def visit(state, payload):
        for step, succ, err in payload:
            if err is not None:
                raise EvaluationError(err)
            yield step, succ

    search.run(engine.initial_state(m), _expand_all(m), visit)
    return frozenset(search.parent)


# -- invariants ---------------------------------------------------------------


def check_init(m: ast.PolicyMachine) -> Obligation:
    """Do all invariants hold in the initial state?"""
    try:
        s0 = engine.initial_state(m)
        bad = engine.failing_invariants(m, s0)
    except EvaluationError as exc:
        return Obligation(INIT, VIOLATED, trace=Trace(), note=f"initialisation failed: {exc}")
    if bad:
        return Obligation(INIT, VIOLATED, trace=Trace((), (s0,)),
                          note="violates " + ", ".join(bad))
    return Obligation(INIT, DISCHARGED)


def _finish(report, obligations, start, search):
    report.obligations = obligations
    report.reachable_count = len(search.parent)
    report.explored_transitions = search.transitions
    report.elapsed = time.perf_counter() - start
    return report


def _violation_key(o: Obligation):
    return (len(o.trace) if o.trace is not None else -1, o.event or "", o.invariant or "",
            o.kind)


def check_invariants(m: ast.PolicyMachine, max_states: int = DEFAULT_MAX_STATES,
                     workers: int = 1) -> CheckReport:
    """Invariant preservation by every event from every reachable state.

    States where some invariant fails are recorded but not expanded, since
    preservation may only assume the invariants in the pre-state.
    """
    start = time.perf_counter()
    report = CheckReport(m.name)
    search = _Search(max_states, workers)
    init_ob = check_init(m)
    if init_ob.violated:
        report.obligations = [init_ob]
        report.reachable_count = 0 if init_ob.trace is None or not init_ob.trace.states else 1
        report.elapsed = time.perf_counter() - start
        return report

    labels = [inv.label for inv in m.invariants]
    event_order = {e.name: i for i, e in enumerate(m.events)}
    exercised: set = set()
    violations: dict = {}
    errors: dict = {}
    base = _expand_all(m)

    def expand(state):
        out = []
        for step, succ, err in base(state):
            failing = None if err else engine.failing_invariants(m, succ)
            out.append((step, succ, err, failing))
        return out

    def visit(state, payload):
        enqueue = []
        for step, succ, err, failing in payload:
            if err is not None:
                key = (step, err)
                if key not in errors:
                    errors[key] = Obligation(WELL_DEFINED, VIOLATED, event=step,
                                             trace=search.trace_to(state), note=err)
                continue
            search.transitions += 1
            for label in labels:
                exercised.add((label, step.event))
            for label in failing:
                if (label, step.event) not in violations:
                    violations[(label, step.event)] = Obligation(
                        INV, VIOLATED, label, step.event, search.trace_to(state, (step, succ)))
            if failing:
                # counted as reached, never expanded
                if succ not in search.parent:
                    search.parent[succ] = (state, step)
                continue
            enqueue.append((step, succ))
        return enqueue

    try:
        search.run(engine.initial_state(m), expand, visit)
    except BoundExceeded as exc:
        report.complete = False
        exc.report = _finish(report, _assemble(init_ob, labels, event_order, exercised,
                                               violations, errors), start, search)
        raise
    return _finish(report, _assemble(init_ob, labels, event_order, exercised, violations,
                                     errors), start, search)


def _assemble(init_ob, labels, event_order, exercised, violations, errors):
    bad = sorted(list(violations.values()) + list(errors.values()), key=_violation_key)
    good = [Obligation(INV, DISCHARGED, label, ev)
            for label in labels
            for ev in sorted({e for (l, e) in exercised if l == label}, key=event_order.get)
            if (label, ev) not in violations]
    return [init_ob] + bad + good


# -- deadlock -----------------------------------------------------------------


def _predicate(m, final):
    if isinstance(final, str):
        final = parse_predicate(final)
    annotated, diags = check_predicate(m, final)
    if diags:
        raise ValidationFailed(diags)
    return annotated


def check_deadlock(m: ast.PolicyMachine, final=None, max_states: int = DEFAULT_MAX_STATES,
                   workers: int = 1) -> CheckReport:
    """Every reachable state satisfies ``final`` or enables some event.

    ``final`` is a predicate (text or tree); ``None`` means no state is final.
    One obligation is reported per stuck state.
    """
    start = time.perf_counter()
    report = CheckReport(m.name)
    search = _Search(max_states, workers)
    final_pred = _predicate(m, final) if final is not None else ast.BoolLit(False)
    info = analyze(m)
    stuck = []
    base = _expand_all(m)

    def expand(state):
        payload = base(state)
        is_final = bool(engine._eval(info, state, {}, final_pred)) if not payload else True
        return payload, is_final

    def visit(state, payload):
        transitions, is_final = payload
        if not transitions and not is_final:
            stuck.append(Obligation(DEADLOCK, VIOLATED, trace=search.trace_to(state),
                                    note=f"stuck in {state.format()}"))
        out = []
        for step, succ, err in transitions:
            if err is not None:
                raise EvaluationError(err)
            search.transitions += 1
            out.append((step, succ))
        return out

    try:
        search.run(engine.initial_state(m), expand, visit)
    except BoundExceeded as exc:
        report.complete = False
        exc.report = _finish(report, stuck, start, search)
        raise
    stuck.sort(key=_violation_key)
    obligations = stuck or [Obligation(DEADLOCK, DISCHARGED)]
    return _finish(report, obligations, start, search)


# -- refinement -----------------------------------------------------------------


def align_abstract(abstract: ast.PolicyMachine, concrete: ast.PolicyMachine) -> ast.PolicyMachine:
    """Give ``abstract`` the concrete machine's enumeration of shared carriers."""
    out = abstract
    for s in abstract.sets:
        c = concrete.carrier(s.name)
        if c is not None and c.elements != s.elements:
            out = out.with_set(s.name, c.elements)
    return out


def check_refinement(abstract: ast.PolicyMachine, concrete: ast.PolicyMachine,
                     max_states: int = DEFAULT_MAX_STATES, workers: int = 1) -> CheckReport:
    """Guard strengthening and step simulation under identity gluing.

    Abstract variables must reappear in the concrete machine with the same
    type.  An event that refines an abstract one must only fire where the
    abstract guard holds (abstract parameters are matched by name, the rest
    existentially) and must move the abstract projection of the state as the
    abstract event can.  New events must leave the projection unchanged.
    """
    if concrete.refines != abstract.name:
        raise NotARefinement(
            f"{concrete.name!r} does not declare 'refines {abstract.name}'")
    abstract = align_abstract(abstract, concrete)
    a_info, c_info = analyze(abstract), analyze(concrete)
    for info in (a_info, c_info):
        if info.diagnostics:
            raise ValidationFailed(info.diagnostics)
    shared = abstract.variable_names
    for v in abstract.variables:
        cv = concrete.variable(v.name)
        if cv is None:
            raise NotARefinement(f"abstract variable {v.name!r} is not kept by {concrete.name!r}")
        if cv.type != v.type:
            raise NotARefinement(f"variable {v.name!r} changes type in {concrete.name!r}")
    abs_events = {e.name for e in abstract.events}
    for e in concrete.events:
        if e.refines is not None and e.refines not in abs_events:
            raise NotARefinement(f"{e.name!r} refines unknown abstract event {e.refines!r}")

    start = time.perf_counter()
    report = CheckReport(f"{concrete.name} refines {abstract.name}")
    search = _Search(max_states, workers)
    failures: dict = {}
    exercised: set = set()

    syntactic = []
    for e in concrete.events:
        if e.refines is None:
            touched = sorted({a.target for a in e.actions} & set(shared))
            if touched:
                syntactic.append(Obligation(
                    SIMULATION, VIOLATED, event=e.name, trace=Trace(),
                    note=f"new event assigns abstract variable(s) {', '.join(touched)}"))

    s0 = engine.initial_state(concrete)
    a0 = engine.initial_state(abstract)
    init_ob = Obligation(SIMULATION, DISCHARGED, event="INITIALISATION")
    if s0.project(shared) != a0:
        init_ob = Obligation(SIMULATION, VIOLATED, event="INITIALISATION", trace=Trace((), (s0,)),
                             note="initial state does not project onto the abstract one")

    def abstract_bindings(a_ev, binding):
        fixed = {p: binding[p] for p in a_ev.event.params if p in binding}
        free = [p for p in a_ev.event.params if p not in binding]
        domains = [engine._enumerate(a_info, a_ev.param_types[p]) for p in free]
        for values in itertools.product(*domains):
            b = dict(fixed)
            b.update(zip(free, values))
            yield {p: b[p] for p in a_ev.event.params}

    def judge(state, step, succ):
        """Return the (kind, note) pairs violated by one concrete transition."""
        ev = concrete.event(step.event)
        pre, post = state.project(shared), succ.project(shared)
        if ev.refines is None:
            return [] if pre == post else [(SIMULATION, "new event changes abstract variables")]
        a_ev = a_info.events[ev.refines]
        enabled = [b for b in abstract_bindings(a_ev, dict(step.binding))
                   if engine._eval(a_info, pre, b, a_ev.guard)]
        if not enabled:
            return [(GUARD, f"abstract guard of {ev.refines} is false"),
                    (SIMULATION, f"no enabled step of {ev.refines}")]
        for b in enabled:
            for ch in engine.choice_options(abstract, pre, ev.refines, b):
                if engine._execute(a_info, pre, b, a_ev.actions, ch, ev.refines) == post:
                    return []
        return [(SIMULATION, f"no step of {ev.refines} reaches the projected successor")]

    base = _expand_all(concrete)

    def expand(state):
        out = []
        for step, succ, err in base(state):
            out.append((step, succ, err, judge(state, step, succ) if err is None else None))
        return out

    def visit(state, payload):
        enqueue = []
        for step, succ, err, problems in payload:
            if err is not None:
                raise EvaluationError(err)
            search.transitions += 1
            exercised.add(step.event)
            for kind, note in problems:
                key = (kind, step.event)
                if key not in failures:
                    failures[key] = Obligation(kind, VIOLATED, event=step.event,
                                               trace=search.trace_to(state, (step, succ)),
                                               note=note)
            enqueue.append((step, succ))
        return enqueue

    def assemble():
        bad = sorted(list(failures.values()) + syntactic, key=_violation_key)
        flagged = {(o.kind, o.event) for o in bad}
        good = []
        for e in concrete.events:
            if e.name not in exercised:
                continue
            kinds = (GUARD, SIMULATION) if e.refines is not None else (SIMULATION,)
            good.extend(Obligation(k, DISCHARGED, event=e.name)
                        for k in kinds if (k, e.name) not in flagged)
        return [init_ob] + bad + good

    try:
        search.run(s0, expand, visit)
    except BoundExceeded as exc:
        report.complete = False
        exc.report = _finish(report, assemble(), start, search)
        raise
    return _finish(report, assemble(), start, search)


def check_all(m: ast.PolicyMachine, final=None, max_states: int = DEFAULT_MAX_STATES,
              workers: int = 1) -> CheckReport:
    """Init and invariant obligations, plus deadlock freedom when ``final`` is given."""
    report = check_invariants(m, max_states, workers)
    if final is not None:
        dl = check_deadlock(m, final, max_states, workers)
        report.obligations = report.obligations + dl.obligations
        report.elapsed += dl.elapsed
    return report
