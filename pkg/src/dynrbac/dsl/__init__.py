"""The ``.pol`` policy language: parsing, printing and validation."""

from __future__ import annotations

from pathlib import Path

from . import ast
from .ast import PolicyMachine
from .parser import parse_expression, parse_policy, parse_predicate
from .printer import format_expr, pretty_print
from .typecheck import Diagnostic, analyze, check_predicate, refinement_diagnostics
from ..errors import ValidationFailed

CORPUS_SCHEME = "corpus:"


def read_source(source: str | Path) -> str:
    """Text of a file path or a ``corpus:NAME`` reference."""
    s = str(source)
    if s.startswith(CORPUS_SCHEME):
        from ..corpus import read_text

        return read_text(s[len(CORPUS_SCHEME):])
    return Path(s).read_text(encoding="utf-8")


def resolve_machine(name: str, search_path=()) -> PolicyMachine | None:
    """Find the machine called ``name`` on ``search_path``, then in the corpus."""
    for d in search_path:
        for candidate in (f"{name}.pol", f"{name.lower()}.pol"):
            p = Path(d) / candidate
            if p.is_file():
                return parse_policy(p.read_text(encoding="utf-8"))
    from ..corpus import find_machine

    return find_machine(name)


def validate(m: PolicyMachine, abstract: PolicyMachine | None = None,
             search_path=()) -> list[Diagnostic]:
    """All typing, scoping and refinement-link problems in ``m``.

    An empty list means the engine can run the machine.  When ``m`` refines
    another machine and ``abstract`` is not given it is looked up on
    ``search_path`` and in the bundled corpus.
    """
    diags = list(analyze(m).diagnostics)
    if m.refines is not None and abstract is None:
        abstract = resolve_machine(m.refines, search_path)
    diags.extend(refinement_diagnostics(m, abstract))
    return diags


def load_policy(source: str | Path, *, check: bool = True) -> PolicyMachine:
    """Parse a file or ``corpus:`` reference; raise if it does not validate."""
    m = parse_policy(read_source(source))
    if check:
        search = () if str(source).startswith(CORPUS_SCHEME) else (Path(source).parent,)
        diags = validate(m, search_path=search)
        if diags:
            raise ValidationFailed(diags)
    return m


__all__ = [
    "ast", "PolicyMachine", "Diagnostic", "parse_policy", "parse_predicate",
    "parse_expression", "pretty_print", "format_expr", "validate", "analyze",
    "check_predicate", "load_policy", "read_source", "resolve_machine",
]
