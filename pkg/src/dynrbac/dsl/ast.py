"""Syntax tree for machines, predicates and expressions.

Predicates are expressions of boolean type; the parser does not separate the
two grammars and the type checker enforces the distinction.  Source positions
are carried on every node but excluded from equality, so two parses of
differently formatted text compare equal when they mean the same thing.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace


@dataclass(frozen=True)
class Node:
    line: int = field(default=0, compare=False, kw_only=True, repr=False)
    column: int = field(default=0, compare=False, kw_only=True, repr=False)


# -- expressions --------------------------------------------------------------


@dataclass(frozen=True)
class Ident(Node):
    name: str


@dataclass(frozen=True)
class BoolLit(Node):
    value: bool


@dataclass(frozen=True)
class SetLit(Node):
    items: tuple = ()


@dataclass(frozen=True)
class Maplet(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Apply(Node):
    """``f(a)`` or ``f(a, b)``; several arguments denote the point ``a |-> b``."""

    fn: Node
    args: tuple


@dataclass(frozen=True)
class Image(Node):
    """Relational image ``f[S]``."""

    fn: Node
    arg: Node


SET_OPS = ("union", "inter", "\\", "<+", "**")
REL_OPS = ("in", "<:", "=", "/=")
BOOL_OPS = ("/\\", "\\/", "=>")


@dataclass(frozen=True)
class SetOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Rel(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Not(Node):
    operand: Node


@dataclass(frozen=True)
class BoolOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Forall(Node):
    """``!x . P`` or ``!x in S . P``.

    With no explicit domain the variable ranges over the whole carrier of its
    inferred type; the type checker fills ``domain`` with a :class:`Carrier`.
    """

    var: str
    domain: Node | None
    body: Node


@dataclass(frozen=True)
class Carrier(Node):
    """Every value of a type (internal; produced by the type checker)."""

    type: object


# -- declarations -------------------------------------------------------------


@dataclass(frozen=True)
class SetDecl(Node):
    name: str
    elements: tuple


@dataclass(frozen=True)
class ConstDecl(Node):
    name: str
    expr: Node


@dataclass(frozen=True)
class VarType:
    """``set of T``, ``map D -> R`` or ``map (D1, D2) -> R``.

    ``domain`` holds one or two carrier names; for ``set of T`` it is empty
    and ``range`` names ``T``.
    """

    kind: str  # "set" | "map"
    domain: tuple
    range: str
    range_is_set: bool = False


@dataclass(frozen=True)
class VarDecl(Node):
    name: str
    type: VarType


@dataclass(frozen=True)
class Invariant(Node):
    label: str
    pred: Node


@dataclass(frozen=True)
class Assignment(Node):
    """``x := e``, ``f(a) := e`` or ``x :: S`` (pick any element of ``S``)."""

    target: str
    args: tuple
    kind: str  # ":=" | "::"
    rhs: Node

    @property
    def is_choice(self) -> bool:
        return self.kind == "::"


@dataclass(frozen=True)
class Event(Node):
    name: str
    refines: str | None
    params: tuple
    guard: Node
    actions: tuple


@dataclass(frozen=True)
class PolicyMachine(Node):
    name: str
    refines: str | None = None
    sets: tuple = ()
    constants: tuple = ()
    variables: tuple = ()
    invariants: tuple = ()
    init: tuple = ()
    events: tuple = ()
    # analysis cache, filled lazily by the type checker
    _info: object = field(default=None, compare=False, repr=False)

    def event(self, name: str) -> Event:
        for e in self.events:
            if e.name == name:
                return e
        from ..errors import UnknownIdentifier

        raise UnknownIdentifier("event", name)

    def variable(self, name: str) -> VarDecl | None:
        for v in self.variables:
            if v.name == name:
                return v
        return None

    def carrier(self, name: str) -> SetDecl | None:
        for s in self.sets:
            if s.name == name:
                return s
        return None

    @property
    def variable_names(self) -> tuple:
        return tuple(v.name for v in self.variables)

    def with_set(self, name: str, elements) -> PolicyMachine:
        """Copy of the machine with carrier ``name`` re-enumerated."""
        sets = tuple(
            replace(s, elements=tuple(elements)) if s.name == name else s
            for s in self.sets
        )
        return replace(self, sets=sets, _info=None)

    def with_constant(self, name: str, expr: Node) -> PolicyMachine:
        consts = tuple(
            replace(c, expr=expr) if c.name == name else c for c in self.constants
        )
        return replace(self, constants=consts, _info=None)

    def without_events(self, *names: str) -> PolicyMachine:
        events = tuple(e for e in self.events if e.name not in names)
        return replace(self, events=events, _info=None)

    def with_event(self, event: Event) -> PolicyMachine:
        events = tuple(event if e.name == event.name else e for e in self.events)
        return replace(self, events=events, _info=None)
