"""Command-line front end.

Exit codes: 0 success, 1 violations or diagnostics found, 2 access denied
(``decide``), 3 state cap reached, 64 usage error, 65 malformed input,
66 input file missing.
"""

from __future__ import annotations

import argparse
import random
import sys
import time
from pathlib import Path

from . import checker, corpus, engine
from .dsl import CORPUS_SCHEME, parse_policy, pretty_print, read_source, validate
from .errors import (
    BoundExceeded,
    ContextError,
    EventNotEnabled,
    NotARefinement,
    ParseError,
    PolicyError,
    ValidationFailed,
)
from .model import context_from_machine, context_problems, parse_context

EX_OK, EX_VIOLATION, EX_DENY, EX_INCOMPLETE = 0, 1, 2, 3
EX_USAGE, EX_DATAERR, EX_NOINPUT = 64, 65, 66


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


class _InputError(Exception):
    def __init__(self, message: str, code: int = EX_DATAERR):
        super().__init__(message)
        self.code = code


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dynrbac", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def machine_args(sp, bounds=True):
        sp.add_argument("file", help="a .pol file or corpus:NAME")
        if bounds:
            sp.add_argument("--reports", type=int, metavar="N",
                            help="re-enumerate REPORTS as r1..rN")
            sp.add_argument("--users", type=int, metavar="N",
                            help="population of N reporters (RMS_ref2-style machines)")

    def search_args(sp):
        sp.add_argument("--workers", type=int, default=1, metavar="N")
        sp.add_argument("--max-states", type=int, default=checker.DEFAULT_MAX_STATES,
                        metavar="N")
        sp.add_argument("--format", choices=("text", "records"), default="text")

    machine_args(sub.add_parser("parse", help="print the machine in canonical form"), False)
    machine_args(sub.add_parser("validate", help="report typing and scoping problems"), False)

    sp = sub.add_parser("check", help="discharge init, invariant and deadlock obligations")
    machine_args(sp)
    search_args(sp)
    sp.add_argument("--deadlock-final", metavar="PRED",
                    help="also check that every state satisfying not PRED can move")

    sp = sub.add_parser("refine", help="check a refinement step")
    sp.add_argument("abstract")
    machine_args(sp)
    search_args(sp)

    sp = sub.add_parser("simulate", help="run the machine")
    machine_args(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--steps", type=int, default=10)
    sp.add_argument("--interactive", action="store_true")

    sp = sub.add_parser("decide", help="answer an access query")
    machine_args(sp)
    sp.add_argument("--context", metavar="CTX", help=".ctx file or corpus:NAME")
    sp.add_argument("--state-after", default="", metavar="EVENTS",
                    help='e.g. "CreateReport u1 r1; SubmitReport u1 r1"')
    sp.add_argument("--user", required=True)
    sp.add_argument("--right", required=True, choices=("C", "R", "W", "D"))
    sp.add_argument("--object", required=True)

    sp = sub.add_parser("corpus", help="bundled case-study files")
    csub = sp.add_subparsers(dest="corpus_command", required=True, parser_class=_Parser)
    ex = csub.add_parser("export", help="write the bundled files to a directory")
    ex.add_argument("dir")
    csub.add_parser("list", help="list the bundled files")
    return p


def _read(source: str) -> str:
    if not source.startswith(CORPUS_SCHEME) and not Path(source).is_file():
        raise _InputError(f"{source}: no such file", EX_NOINPUT)
    try:
        return read_source(source)
    except PolicyError as exc:
        raise _InputError(f"{source}: {exc}", EX_NOINPUT) from None


def _load(source: str, args=None, check=True):
    try:
        m = parse_policy(_read(source))
    except ParseError as exc:
        raise _InputError(f"{source}:{exc}") from None
    if args is not None and getattr(args, "reports", None) is not None:
        m = corpus.with_reports(m, args.reports)
    if args is not None and getattr(args, "users", None) is not None:
        m = corpus.with_reporters(m, args.users)
    if check:
        search = () if source.startswith(CORPUS_SCHEME) else (Path(source).parent,)
        diags = validate(m, search_path=search)
        if diags:
            raise _InputError("\n".join(f"{source}:{d}" for d in diags))
    return m


def _emit_report(report, args, out, err) -> int:
    out.write(report.to_records() if args.format == "records" else report.to_text())
    err.write(f"elapsed: {report.elapsed:.3f}s\n")
    return EX_OK if report.ok else EX_VIOLATION


def _cmd_parse(args, out, err):
    out.write(pretty_print(_load(args.file, check=False)))
    return EX_OK


def _cmd_validate(args, out, err):
    m = _load(args.file, check=False)
    search = () if args.file.startswith(CORPUS_SCHEME) else (Path(args.file).parent,)
    diags = validate(m, search_path=search)
    for d in diags:
        out.write(f"{args.file}:{d}\n")
    if not diags:
        out.write(f"{args.file}: ok\n")
    return EX_VIOLATION if diags else EX_OK


def _cmd_check(args, out, err):
    m = _load(args.file, args)
    try:
        report = checker.check_all(m, args.deadlock_final, args.max_states, args.workers)
    except BoundExceeded as exc:
        err.write(f"{exc}\n")
        if exc.report is not None:
            _emit_report(exc.report, args, out, err)
        return EX_INCOMPLETE
    return _emit_report(report, args, out, err)


def _cmd_refine(args, out, err):
    concrete = _load(args.file, args)
    abstract = _load(args.abstract)
    try:
        report = checker.check_refinement(abstract, concrete, args.max_states, args.workers)
    except BoundExceeded as exc:
        err.write(f"{exc}\n")
        if exc.report is not None:
            _emit_report(exc.report, args, out, err)
        return EX_INCOMPLETE
    except NotARefinement as exc:
        raise _InputError(str(exc)) from None
    return _emit_report(report, args, out, err)


def _changes(before, after) -> str:
    changed = [n for n in after if before is None or before.get(n) != after[n]]
    if not changed:
        return "(no change)"
    from .values import format_value

    return ", ".join(f"{n}={format_value(after[n])}" for n in changed)


def _cmd_simulate(args, out, err, stdin):
    m = _load(args.file, args)
    rng = random.Random(args.seed)
    state = engine.initial_state(m)
    out.write(f"INITIALISATION {{}} :: {_changes(None, state)}\n")
    for _ in range(args.steps):
        moves = list(engine.successors(m, state))
        if not moves:
            out.write("deadlock: no event is enabled\n")
            break
        if args.interactive:
            for i, (ev, b, ch, _) in enumerate(moves, 1):
                err.write(f"  {i}) {checker.Step.of(ev, b, ch)}\n")
            pick = None
            while pick is None:
                err.write("choose (q to quit): ")
                err.flush()
                line = stdin.readline()
                if not line or line.strip() == "q":
                    return EX_OK
                if line.strip().isdigit() and 1 <= int(line) <= len(moves):
                    pick = moves[int(line) - 1]
            ev, b, ch, nxt = pick
        else:
            ev, b, ch, nxt = rng.choice(moves)
        out.write(f"{ev} {engine.format_binding(b)} :: {_changes(state, nxt)}\n")
        state = nxt
    return EX_OK


def _parse_steps(m, text: str):
    steps = []
    for chunk in text.split(";"):
        words = chunk.split()
        if not words:
            continue
        name, values = words[0], words[1:]
        try:
            params = m.event(name).params
        except PolicyError as exc:
            raise _InputError(str(exc)) from None
        binding = {}
        positional = [v for v in values if "=" not in v]
        for v in values:
            if "=" in v:
                k, val = v.split("=", 1)
                binding[k] = val
        free = [p for p in params if p not in binding]
        if len(positional) != len(free):
            raise _InputError(f"{name} takes parameters {', '.join(params)}; got {chunk.strip()!r}")
        binding.update(zip(free, positional))
        steps.append((name, {p: binding[p] for p in params}))
    return steps


def _cmd_decide(args, out, err):
    m = _load(args.file, args)
    if "permissions" not in m.variable_names:
        raise _InputError(f"machine {m.name!r} has no permissions variable")
    if args.context:
        try:
            ctx = parse_context(_read(args.context), m)
        except ContextError as exc:
            raise _InputError(f"{args.context}: {exc}") from None
    else:
        try:
            ctx = context_from_machine(m)
        except ContextError as exc:
            raise _InputError(f"{exc}; pass --context") from None
    for problem in context_problems(ctx, m):
        err.write(f"warning: {problem}\n")
    state = engine.initial_state(m)
    for name, binding in _parse_steps(m, args.state_after):
        options = engine.choice_options(m, state, name, binding) if engine.is_enabled(
            m, state, name, binding) else []
        if len(options) > 1:
            raise _InputError(f"{name} is nondeterministic here; --state-after cannot pick")
        try:
            state = engine.apply_event(m, state, name, binding, options[0] if options else None)
        except EventNotEnabled as exc:
            raise _InputError(str(exc)) from None
    decision = engine.decide_access(m, state, ctx, args.user, args.right, args.object)
    out.write(f"{decision.verdict}\n")
    out.write(f"reason: {decision.reason}\n")
    return EX_OK if decision.allowed else EX_DENY


def _cmd_corpus(args, out, err):
    if args.corpus_command == "list":
        for f in corpus.corpus_manifest():
            out.write(f"{f.uri}\n")
        return EX_OK
    for p in corpus.export(args.dir):
        out.write(f"{p}\n")
    return EX_OK


def run(argv, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        err.write(f"{exc}\n")
        return EX_USAGE
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else EX_OK
    try:
        if args.command == "simulate":
            return _cmd_simulate(args, out, err, stdin)
        handler = globals()[f"_cmd_{args.command}"]
        return handler(args, out, err)
    except _InputError as exc:
        err.write(f"{exc}\n")
        return exc.code
    except ValidationFailed as exc:
        for d in exc.diagnostics:
            err.write(f"{d}\n")
        return EX_DATAERR
    except PolicyError as exc:
        err.write(f"error: {exc}\n")
        return EX_DATAERR


def main() -> None:
    sys.exit(run(sys.argv[1:]))
