"""Users, roles, rights and the static RBAC relations around them.

``user_roles`` is the user -> roles assignment and ``role_rights`` the static
upper bound on what each role may ever do.  The dynamic, state-dependent
rights live in a machine's ``permissions`` variable; see
:func:`dynrbac.engine.decide_access`.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .errors import ContextError, UnknownIdentifier
from .values import FMap

REPORTER = "Reporter"
CONTROLLER = "Controller"
ADMINISTRATOR = "Administrator"

REPORT_STATES = ("VOID", "CREATED", "SUBMITTED", "APPROVED", "ARCHIVED")


class Right(str, enum.Enum):
    C = "C"  # create
    R = "R"  # read
    W = "W"  # write
    D = "D"  # delete

    def __str__(self) -> str:
        return self.value


ALL_RIGHTS = frozenset(Right)


def rights(*names: str) -> frozenset:
    return frozenset(Right(n) for n in names)


@dataclass(frozen=True)
class AccessContext:
    user_roles: FMap = field(default_factory=FMap)
    role_rights: FMap = field(default_factory=FMap)
    owner: FMap = field(default_factory=FMap)
    reporter_supervisor: FMap = field(default_factory=FMap)
    controller_supervisor: FMap = field(default_factory=FMap)
    roles: frozenset = frozenset()

    @property
    def users(self) -> frozenset:
        return frozenset(self.user_roles)


def roles_of(ctx: AccessContext, user: str) -> frozenset:
    if user not in ctx.user_roles:
        raise UnknownIdentifier("user", user)
    return ctx.user_roles[user]


def static_rights(ctx: AccessContext, role: str) -> frozenset:
    if role not in ctx.roles and role not in ctx.role_rights:
        raise UnknownIdentifier("role", role)
    return frozenset(Right(r) for r in ctx.role_rights.get(role, ()))


# -- .ctx files -------------------------------------------------------------

_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_SET = r"\{\s*((?:%s\s*(?:,\s*%s\s*)*)?)\}" % (_NAME, _NAME)
_LINES = {
    "user": re.compile(rf"user\s+({_NAME})\s+roles\s+{_SET}$"),
    "rights": re.compile(rf"rights\s+({_NAME})\s*=\s*{_SET}$"),
    "owner": re.compile(rf"owner\s+({_NAME})\s*=\s*({_NAME})$"),
    "supervisor": re.compile(rf"supervisor\s+({_NAME})\s*=\s*({_NAME})$"),
}


def _names(group: str) -> frozenset:
    return frozenset(x.strip() for x in group.split(",") if x.strip())


def parse_context(text: str, machine=None) -> AccessContext:
    """Read a ``.ctx`` file.

    Lines are ``user U roles {R1, ...}``, ``rights ROLE = {C, R, ...}``,
    ``owner REPORT = U`` and ``supervisor U = V``; ``--`` starts a comment.
    A ``supervisor`` line fills the reporter->controller map when V is a
    controller and the controller->administrator map when V is an
    administrator.  Role rights missing from the file are taken from the
    machine's ``role_rights`` constant when ``machine`` is given.
    """
    user_roles, role_rights, owner = {}, {}, {}
    supervision = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("--", 1)[0].strip()
        if not line:
            continue
        keyword = line.split()[0]
        pattern = _LINES.get(keyword)
        m = pattern.match(line) if pattern else None
        if m is None:
            raise ContextError(f"line {lineno}: cannot parse {line!r}")
        a, b = m.group(1), m.group(2)
        if keyword == "user":
            if a in user_roles:
                raise ContextError(f"line {lineno}: user {a!r} declared twice")
            user_roles[a] = _names(b)
        elif keyword == "rights":
            try:
                role_rights[a] = frozenset(Right(x) for x in _names(b))
            except ValueError as exc:
                raise ContextError(f"line {lineno}: {exc}") from None
        elif keyword == "owner":
            owner[a] = b
        else:
            supervision.append((lineno, a, b))

    reporter_sup, controller_sup = {}, {}
    for lineno, a, b in supervision:
        sup_roles = user_roles.get(b, frozenset())
        if CONTROLLER in sup_roles:
            target = reporter_sup
        elif ADMINISTRATOR in sup_roles:
            target = controller_sup
        else:
            raise ContextError(
                f"line {lineno}: supervisor {b!r} is neither a controller nor an administrator"
            )
        if a in target:
            raise ContextError(f"line {lineno}: {a!r} already has a supervisor")
        target[a] = b

    roles = set(role_rights)
    for rs in user_roles.values():
        roles |= rs
    if machine is not None:
        from .dsl import analyze

        info = analyze(machine)
        roles |= set(info.carriers.get("ROLES", ()))
        if "role_rights" in info.const_exprs:
            from .engine import constant_value

            for r, rs in constant_value(machine, "role_rights"):
                role_rights.setdefault(r, frozenset(Right(x) for x in rs))
    return AccessContext(FMap(user_roles), FMap(role_rights), FMap(owner),
                         FMap(reporter_sup), FMap(controller_sup), frozenset(roles))


def context_from_machine(machine) -> AccessContext:
    """Build the access context from a machine's population constants.

    Uses ``user_roles``, ``role_rights``, ``reporter_supervisor`` and
    ``controller_supervisor`` where the machine declares them.
    """
    from .dsl import analyze
    from .engine import constant_value

    info = analyze(machine)

    def const(name):
        if name not in info.const_exprs:
            return {}
        return dict(constant_value(machine, name))

    user_roles = const("user_roles")
    if not user_roles:
        raise ContextError(f"machine {machine.name!r} declares no user_roles constant")
    role_rights = {r: frozenset(Right(x) for x in rs) for r, rs in const("role_rights").items()}
    roles = set(info.carriers.get("ROLES", ())) | set(role_rights)
    return AccessContext(
        FMap({u: frozenset(rs) for u, rs in user_roles.items()}),
        FMap(role_rights),
        FMap(),
        FMap(const("reporter_supervisor")),
        FMap(const("controller_supervisor")),
        frozenset(roles),
    )


def context_problems(ctx: AccessContext, machine=None) -> list[str]:
    """Violations of the supervision and declaration rules, as messages."""
    out = []
    declared_roles = ctx.roles
    declared_users = None
    if machine is not None:
        from .dsl import analyze

        info = analyze(machine)
        if "ROLES" in info.carriers:
            declared_roles = frozenset(info.carriers["ROLES"])
        if "USERS" in info.carriers:
            declared_users = frozenset(info.carriers["USERS"])
    for u in sorted(ctx.user_roles):
        if declared_users is not None and u not in declared_users:
            out.append(f"user {u!r} is not declared by the machine")
        for r in sorted(ctx.user_roles[u]):
            if r not in declared_roles:
                out.append(f"user {u!r} has undeclared role {r!r}")
        roles = ctx.user_roles[u]
        if REPORTER in roles:
            sup = ctx.reporter_supervisor.get(u)
            if sup is None:
                out.append(f"reporter {u!r} has no supervising controller")
            elif CONTROLLER not in ctx.user_roles.get(sup, ()):
                out.append(f"supervisor {sup!r} of {u!r} is not a controller")
        if CONTROLLER in roles:
            sup = ctx.controller_supervisor.get(u)
            if sup is None:
                out.append(f"controller {u!r} has no supervising administrator")
            elif ADMINISTRATOR not in ctx.user_roles.get(sup, ()):
                out.append(f"supervisor {sup!r} of {u!r} is not an administrator")
    for d, u in sorted(ctx.owner.items()):
        if u not in ctx.user_roles:
            out.append(f"owner {u!r} of {d!r} is not a known user")
    return out
