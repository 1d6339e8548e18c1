"""Exception hierarchy shared by the parser, engine and checker."""

from __future__ import annotations


class PolicyError(Exception):
    """Base class for every error raised by this package."""


class UnknownIdentifier(PolicyError):
    def __init__(self, kind: str, name: str):
        super().__init__(f"unknown {kind} {name!r}")
        self.kind = kind
        self.name = name


class ParseError(PolicyError):
    """Syntax error at a known position.

    ``expected`` is the set of token descriptions that would have been
    accepted at that point (empty for lexical errors and duplicates).
    """

    def __init__(self, message: str, line: int, column: int, expected=()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = frozenset(expected)
        text = f"{line}:{column}: {message}"
        if self.expected:
            text += " (expected one of: " + ", ".join(sorted(self.expected)) + ")"
        super().__init__(text)


class DuplicateDeclaration(ParseError):
    pass


class ValidationFailed(PolicyError):
    """Raised by convenience loaders when ``validate`` reports diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class EvaluationError(PolicyError):
    """Runtime failure while evaluating an expression."""


class PartialApplication(EvaluationError):
    def __init__(self, function: str, point):
        from .values import format_value

        super().__init__(f"{function} is not defined at {format_value(point)}")
        self.function = function
        self.point = point


class NotAFunction(EvaluationError):
    pass


class NondeterministicInit(PolicyError):
    pass


class EventNotEnabled(PolicyError):
    pass


class InvalidChoice(PolicyError):
    pass


class UnsupportedQuery(PolicyError):
    pass


class NotARefinement(PolicyError):
    pass


class ContextError(PolicyError):
    pass


class BoundExceeded(PolicyError):
    """State cap hit during exploration; ``report`` holds what was found so far."""

    def __init__(self, cap: int, report=None):
        super().__init__(f"state space exceeds the cap of {cap} states")
        self.cap = cap
        self.report = report
