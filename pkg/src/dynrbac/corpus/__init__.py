"""The reporting management system (RMS) case study as bundled fixtures."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..dsl import ast, parse_policy
from ..errors import UnknownIdentifier

CONTEXT_FILE = "rms_users.ctx"


@dataclass(frozen=True)
class CorpusFile:
    """A bundled file and what checking it is expected to produce.

    ``expected_violations`` lists ``(invariant, event)`` pairs; empty means
    every obligation is discharged.  ``reachable`` maps a number of reports
    to the number of reachable states.
    """

    name: str
    kind: str  # "machine" | "context"
    machine: str | None = None
    events: tuple = ()
    invariants: tuple = ()
    expected_violations: tuple = ()
    reachable: dict = field(default_factory=dict)

    @property
    def uri(self) -> str:
        return f"corpus:{self.name}"

    def read(self) -> str:
        return read_text(self.name)


_EVENTS = ("CreateReport", "ModifyReport", "DeleteReport", "SubmitReport",
           "ApproveReport", "ReturnReport", "RegisterReport")
_STATE_INVARIANTS = ("inv_VOID", "inv_CREATED", "inv_SUBMITTED", "inv_APPROVED",
                     "inv_ARCHIVED")


def corpus_manifest() -> list[CorpusFile]:
    return [
        CorpusFile("rms_abs.pol", "machine", "RMS_abs", _EVENTS,
                   ("inv_reports", "inv_live", "inv_unused"),
                   reachable={1: 5, 2: 25, 3: 125}),
        CorpusFile("rms_ref1.pol", "machine", "RMS_ref1", _EVENTS,
                   ("inv_reports", "inv_live", "inv_unused", "inv_bounds", "inv_static")
                   + _STATE_INVARIANTS,
                   reachable={1: 5, 2: 25, 3: 125}),
        # each report is VOID, or in one of four live states with one of two owners
        CorpusFile("rms_ref2.pol", "machine", "RMS_ref2", _EVENTS,
                   ("inv_reports", "inv_live", "inv_unused", "inv_static")
                   + _STATE_INVARIANTS
                   + ("inv_unowned", "inv_owned", "inv_owner_role", "inv_supervised"),
                   reachable={1: 9, 2: 81}),
        CorpusFile(CONTEXT_FILE, "context"),
    ]


def _names() -> list[str]:
    return [f.name for f in corpus_manifest()]


def read_text(name: str) -> str:
    if name not in _names():
        stem = {f.name.rsplit(".", 1)[0]: f.name for f in corpus_manifest()}
        if name in stem:
            name = stem[name]
        else:
            raise UnknownIdentifier("corpus file", name)
    return resources.files(__name__).joinpath(name).read_text(encoding="utf-8")


def load(name: str) -> ast.PolicyMachine:
    """Parse a bundled machine, by file name (``rms_ref1.pol``) or stem."""
    return parse_policy(read_text(name))


def find_machine(machine_name: str) -> ast.PolicyMachine | None:
    for f in corpus_manifest():
        if f.machine == machine_name:
            return load(f.name)
    return None


def export(directory: str | Path) -> list[Path]:
    """Write every bundled file into ``directory``; return the paths written."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    out = []
    for f in corpus_manifest():
        p = d / f.name
        p.write_text(f.read(), encoding="utf-8")
        out.append(p)
    return out


def with_reports(m: ast.PolicyMachine, n: int) -> ast.PolicyMachine:
    """Re-enumerate ``REPORTS`` as ``r1 .. rn``."""
    if m.carrier("REPORTS") is None:
        raise UnknownIdentifier("set", "REPORTS")
    return m.with_set("REPORTS", [f"r{i}" for i in range(1, n + 1)])


def _const(items) -> ast.Node:
    return ast.SetLit(tuple(items))


def with_reporters(m: ast.PolicyMachine, n: int) -> ast.PolicyMachine:
    """Population with ``n`` reporters ``u1 .. un``, all supervised by ``c1``,
    who is supervised by ``a1``.  Rewrites ``USERS`` and the population
    constants of an RMS_ref2-style machine.
    """
    if m.carrier("USERS") is None:
        raise UnknownIdentifier("set", "USERS")
    reporters = [f"u{i}" for i in range(1, n + 1)]
    users = reporters + ["c1", "a1"]
    I = ast.Ident

    def roles(role):
        return ast.SetLit((I(role),))

    m = m.with_set("USERS", users)
    m = m.with_constant("user_roles", _const(
        [ast.Maplet(I(u), roles("Reporter")) for u in reporters]
        + [ast.Maplet(I("c1"), roles("Controller")),
           ast.Maplet(I("a1"), roles("Administrator"))]))
    m = m.with_constant("reporter_supervisor",
                        _const(ast.Maplet(I(u), I("c1")) for u in reporters))
    m = m.with_constant("controller_supervisor", _const([ast.Maplet(I("c1"), I("a1"))]))
    return m


def population_context(n: int) -> str:
    """``.ctx`` text matching :func:`with_reporters`."""
    lines = [f"user u{i} roles {{Reporter}}" for i in range(1, n + 1)]
    lines += ["user c1 roles {Controller}", "user a1 roles {Administrator}"]
    lines += [f"supervisor u{i} = c1" for i in range(1, n + 1)]
    lines.append("supervisor c1 = a1")
    return "\n".join(lines) + "\n"
