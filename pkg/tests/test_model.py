import pytest

from dynrbac import corpus
from dynrbac.errors import ContextError, UnknownIdentifier
from dynrbac.model import (
    AccessContext,
    Right,
    context_from_machine,
    context_problems,
    parse_context,
    rights,
    roles_of,
    static_rights,
)
from dynrbac.values import FMap


def ctx_of(user_roles, role_rights=None):
    user_roles = {u: frozenset(r) for u, r in user_roles.items()}
    roles = set().union(*user_roles.values()) if user_roles else set()
    return AccessContext(user_roles=FMap(user_roles), role_rights=FMap(role_rights or {}),
                         roles=frozenset(roles | set(role_rights or {})))


def test_rights_are_four_distinct_values():
    assert len(set(Right)) == 4
    assert {str(r) for r in Right} == {"C", "R", "W", "D"}
    # rights compare equal to the plain names used inside machines
    assert Right.W == "W" and "W" in rights("R", "W")


@pytest.mark.parametrize("assignment, user, expected", [
    ({"u1": {"Reporter"}}, "u1", {"Reporter"}),
    ({"u1": set()}, "u1", set()),
    ({"u2": {"Controller", "Administrator"}}, "u2", {"Controller", "Administrator"}),
])
def test_roles_of(assignment, user, expected):
    assert roles_of(ctx_of(assignment), user) == expected


def test_roles_of_unknown_user():
    with pytest.raises(UnknownIdentifier):
        roles_of(ctx_of({"u1": {"Reporter"}}), "nobody")


def test_static_rights_from_corpus_context(ref2):
    ctx = parse_context(corpus.read_text("rms_users.ctx"), ref2)
    assert static_rights(ctx, "Reporter") == {"C", "R", "W", "D"}
    assert static_rights(ctx, "Controller") == {"R", "W"}


def test_static_rights_of_role_without_rights():
    ctx = ctx_of({"u": {"Auditor"}}, {"Auditor": frozenset()})
    assert static_rights(ctx, "Auditor") == frozenset()
    with pytest.raises(UnknownIdentifier):
        static_rights(ctx, "Janitor")


def test_static_rights_pure():
    ctx = ctx_of({"u": {"Reporter"}}, {"Reporter": rights("C", "R")})
    assert static_rights(ctx, "Reporter") == static_rights(ctx, "Reporter")
    assert roles_of(ctx, "u") == roles_of(ctx, "u")


def test_parse_context_lines():
    ctx = parse_context("""
        -- comment
        user u1 roles {Reporter}
        user c1 roles {Controller}
        user a1 roles {Administrator}
        user x roles {}
        owner r1 = u1
        supervisor u1 = c1
        supervisor c1 = a1
    """)
    assert ctx.reporter_supervisor == {"u1": "c1"}
    assert ctx.controller_supervisor == {"c1": "a1"}
    assert ctx.owner == {"r1": "u1"}
    assert roles_of(ctx, "x") == frozenset()
    assert context_problems(ctx) == []


@pytest.mark.parametrize("text", [
    "user u1 roles Reporter",
    "user u1 roles {Reporter}\nuser u1 roles {Controller}",
    "user u1 roles {Reporter}\nsupervisor u1 = nobody",
    "rights Reporter = {X}",
    "frobnicate",
])
def test_parse_context_rejects(text):
    with pytest.raises(ContextError):
        parse_context(text)


def test_context_problems_flags_unsupervised_reporter():
    ctx = parse_context("user u1 roles {Reporter}\nuser c1 roles {Controller}")
    problems = context_problems(ctx)
    assert "reporter 'u1' has no supervising controller" in problems
    assert "controller 'c1' has no supervising administrator" in problems


def test_context_problems_against_machine(ref2):
    ctx = parse_context("user zed roles {Wizard}")
    problems = context_problems(ctx, ref2)
    assert "user 'zed' is not declared by the machine" in problems
    assert "user 'zed' has undeclared role 'Wizard'" in problems


def test_bundled_context_matches_machine_population(ref2):
    from_file = parse_context(corpus.read_text("rms_users.ctx"), ref2)
    from_machine = context_from_machine(ref2)
    assert from_file.user_roles == from_machine.user_roles
    assert from_file.reporter_supervisor == from_machine.reporter_supervisor
    assert from_file.controller_supervisor == from_machine.controller_supervisor
    assert from_file.role_rights == from_machine.role_rights
    assert context_problems(from_file, ref2) == []


def test_context_from_machine_requires_population(ref1):
    with pytest.raises(ContextError):
        context_from_machine(ref1)
