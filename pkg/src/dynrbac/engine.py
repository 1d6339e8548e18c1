"""Operational semantics of policy machines.

States are immutable.  Event actions are evaluated against the pre-state and
applied simultaneously, so ``x := y`` together with ``y := x`` swaps.
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping
from dataclasses import dataclass

from .dsl import ast
from .dsl.printer import format_expr
from .dsl.typecheck import ElemT, PairT, analyze, check_predicate
from .errors import (
    EvaluationError,
    EventNotEnabled,
    InvalidChoice,
    NondeterministicInit,
    NotAFunction,
    PartialApplication,
    UnknownIdentifier,
    UnsupportedQuery,
    ValidationFailed,
)
from .model import ADMINISTRATOR, CONTROLLER, REPORTER, AccessContext, roles_of
from .values import FMap, as_relation, format_value, value_key


class SystemState(Mapping):
    """Valuation of every machine variable; hashable and immutable."""

    __slots__ = ("_values", "_hash")

    def __init__(self, values: Mapping = ()):
        self._values = dict(values)
        self._hash = None

    def __getitem__(self, name):
        return self._values[name]

    def __iter__(self):
        return iter(sorted(self._values))

    def __len__(self) -> int:
        return len(self._values)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._values.items()))
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, SystemState):
            return self._values == other._values
        return NotImplemented

    def updated(self, updates: Mapping) -> SystemState:
        values = dict(self._values)
        values.update(updates)
        return SystemState(values)

    def project(self, names) -> SystemState:
        return SystemState({n: self._values[n] for n in names})

    def format(self) -> str:
        return ", ".join(f"{k}={format_value(self._values[k])}" for k in self)

    def __repr__(self) -> str:
        return f"SystemState({self.format()})"


def format_binding(binding: Mapping) -> str:
    return "{" + ", ".join(f"{k}={format_value(v)}" for k, v in binding.items()) + "}"


# -- machine preparation ----------------------------------------------------


def _info(m: ast.PolicyMachine):
    info = analyze(m)
    if info.diagnostics:
        raise ValidationFailed(info.diagnostics)
    if info.const_values is None:
        _prepare(info)
    return info


def _prepare(info) -> None:
    info.const_values = {}
    info.enum_cache = {}
    info.pred_cache = {}
    info.kinds = {}
    for name, elems in info.carriers.items():
        info.kinds[name] = ("set", frozenset(elems))
        for e in elems:
            info.kinds[e] = ("element", e)
    for name, expr in info.const_exprs.items():
        value = _eval(info, None, {}, expr)
        info.const_values[name] = value
        info.kinds[name] = ("constant", value)
    for v in info.machine.variables:
        info.kinds[v.name] = ("variable", None)
        if v.type.kind == "map":
            dom = ElemT(v.type.domain[0]) if len(v.type.domain) == 1 else PairT(
                ElemT(v.type.domain[0]), ElemT(v.type.domain[1]))
            info.map_domains[v.name] = frozenset(_enumerate(info, dom))


def _enumerate(info, t) -> tuple:
    """Every value of an element or pair type, in declaration order."""
    cache = info.enum_cache
    if t not in cache:
        if isinstance(t, ElemT):
            cache[t] = tuple(info.carriers[t.carrier])
        elif isinstance(t, PairT):
            cache[t] = tuple(itertools.product(_enumerate(info, t.left),
                                               _enumerate(info, t.right)))
        else:
            raise EvaluationError(f"cannot enumerate values of type {t}")
    return cache[t]


def constant_value(m: ast.PolicyMachine, name: str):
    info = _info(m)
    if name not in info.const_values:
        raise UnknownIdentifier("constant", name)
    return info.const_values[name]


# -- expression evaluation ----------------------------------------------------


def _norm(v):
    return v.relation() if isinstance(v, FMap) else v


def _point(values):
    point = values[0]
    for v in values[1:]:
        point = (point, v)
    return point


def _apply(fn, point, node):
    if isinstance(fn, FMap):
        try:
            return fn[point]
        except KeyError:
            raise PartialApplication(format_expr(node.fn), point) from None
    found = [b for (a, b) in fn if a == point]
    if not found:
        raise PartialApplication(format_expr(node.fn), point)
    if len(found) > 1:
        raise NotAFunction(f"{format_expr(node.fn)} has several values at {format_value(point)}")
    return found[0]


def _eval(info, s, env, n):
    t = type(n)
    if t is ast.Ident:
        name = n.name
        if name in env:
            return env[name]
        kind, value = info.kinds[name]
        if kind == "variable":
            return s[name]
        return value
    if t is ast.Apply:
        fn = _eval(info, s, env, n.fn)
        return _apply(fn, _point([_eval(info, s, env, a) for a in n.args]), n)
    if t is ast.Rel:
        left = _eval(info, s, env, n.left)
        right = _eval(info, s, env, n.right)
        op = n.op
        if op == "in":
            return _norm(left) in as_relation(right)
        if op == "=":
            return _norm(left) == _norm(right)
        if op == "/=":
            return _norm(left) != _norm(right)
        return as_relation(left) <= as_relation(right)
    if t is ast.BoolOp:
        left = _eval(info, s, env, n.left)
        if n.op == "/\\":
            return left and _eval(info, s, env, n.right)
        if n.op == "\\/":
            return left or _eval(info, s, env, n.right)
        return (not left) or _eval(info, s, env, n.right)
    if t is ast.Not:
        return not _eval(info, s, env, n.operand)
    if t is ast.SetLit:
        return frozenset(_norm(_eval(info, s, env, i)) for i in n.items)
    if t is ast.Maplet:
        return (_norm(_eval(info, s, env, n.left)), _norm(_eval(info, s, env, n.right)))
    if t is ast.SetOp:
        return _set_op(n.op, _eval(info, s, env, n.left), _eval(info, s, env, n.right))
    if t is ast.Image:
        fn = _eval(info, s, env, n.fn)
        arg = as_relation(_eval(info, s, env, n.arg))
        if isinstance(fn, FMap):
            return frozenset(_norm(fn[a]) for a in arg if a in fn)
        return frozenset(b for (a, b) in fn if a in arg)
    if t is ast.Forall:
        domain = as_relation(_eval(info, s, env, n.domain))
        body, var = n.body, n.var
        for x in domain:
            if not _eval(info, s, {**env, var: x}, body):
                return False
        return True
    if t is ast.BoolLit:
        return n.value
    if t is ast.Carrier:
        return _enumerate(info, n.type)
    raise EvaluationError(f"cannot evaluate {n!r}")


def _set_op(op, left, right):
    if op == "<+":
        if isinstance(left, FMap):
            updates = {}
            for a, b in as_relation(right):
                if a in updates and updates[a] != b:
                    raise NotAFunction(f"override maps {format_value(a)} to several values")
                updates[a] = b
            return left.updated(updates)
        right = as_relation(right)
        dom = {a for a, _ in right}
        return frozenset(p for p in left if p[0] not in dom) | right
    left, right = as_relation(left), as_relation(right)
    if op == "union":
        return left | right
    if op == "inter":
        return left & right
    if op == "\\":
        return left - right
    return frozenset(itertools.product(left, right))


def evaluate(m: ast.PolicyMachine, s: SystemState, binding: Mapping, expr: ast.Node):
    """Value of an arbitrary expression in state ``s``."""
    info = _info(m)
    return _eval(info, s, dict(binding), _annotated(info, m, binding, expr, True))


def _annotated(info, m, binding, p, expression=False):
    key = (id(p), expression)
    cached = info.pred_cache.get(key)
    if cached is not None and cached[0] is p:
        return cached[1]
    local_types = {k: _type_of(info, v) for k, v in binding.items()}
    annotated, diags = check_predicate(m, p, local_types, expression)
    if diags:
        raise ValidationFailed(diags)
    info.pred_cache[key] = (p, annotated)
    return annotated


def _type_of(info, v):
    if isinstance(v, tuple):
        return PairT(_type_of(info, v[0]), _type_of(info, v[1]))
    if isinstance(v, str) and v in info.element_carrier:
        return ElemT(info.element_carrier[v])
    raise EvaluationError(f"binding value {format_value(v)} is not a declared element")


def eval_predicate(m: ast.PolicyMachine, s: SystemState, binding: Mapping,
                   p: ast.Node) -> bool:
    """Truth of ``p`` in ``s`` with event parameters bound by ``binding``.

    Quantifiers are evaluated by enumerating their (finite) domains.  Raises
    :class:`PartialApplication` when a partial map is applied outside its
    domain.
    """
    info = _info(m)
    return bool(_eval(info, s, dict(binding), _annotated(info, m, binding, p)))


def invariant_holds(m: ast.PolicyMachine, s: SystemState, label: str) -> bool:
    info = _info(m)
    for lbl, pred in info.invariants:
        if lbl == label:
            return bool(_eval(info, s, {}, pred))
    raise UnknownIdentifier("invariant", label)


def failing_invariants(m: ast.PolicyMachine, s: SystemState) -> list[str]:
    info = _info(m)
    return [lbl for lbl, pred in info.invariants if not _eval(info, s, {}, pred)]


# -- transitions --------------------------------------------------------------


def _coerce(info, var: str, value):
    dom = info.map_domains.get(var)
    if dom is None:
        return _norm(value)
    if isinstance(value, FMap):
        d = value
    else:
        d = {}
        for a, b in value:
            if a in d and d[a] != b:
                raise NotAFunction(f"{var} would map {format_value(a)} to several values")
            d[a] = b
        d = FMap(d)
    if d.keys() != dom:
        raise NotAFunction(f"{var} would not be a total function on its domain")
    return d


def _execute(info, s, env, actions, choice, event_name):
    whole, pointwise = {}, {}
    for idx, a in enumerate(actions):
        value = _eval(info, s, env, a.rhs)
        if a.is_choice:
            if choice is None or idx not in choice:
                raise InvalidChoice(f"{event_name}: no choice given for action {idx} ({a.target})")
            picked = choice[idx]
            if _norm(picked) not in as_relation(value):
                raise InvalidChoice(
                    f"{event_name}: {format_value(picked)} is not in {format_value(value)}")
            value = picked
        if a.args:
            point = _point([_eval(info, s, env, x) for x in a.args])
            pointwise.setdefault(a.target, {})[point] = _norm(value)
        else:
            whole[a.target] = value
    updates = {var: _coerce(info, var, v) for var, v in whole.items()}
    for var, points in pointwise.items():
        old = s[var]
        for p in points:
            if p not in old:
                raise PartialApplication(var, p)
        updates[var] = old.updated(points)
    return s.updated(updates) if s is not None else SystemState(updates)


def initial_state(m: ast.PolicyMachine) -> SystemState:
    info = _info(m)
    for a in info.init:
        if a.is_choice:
            raise NondeterministicInit(
                f"initialisation of {a.target!r} uses '::'; it must be deterministic")
    return _execute(info, SystemState(), {}, info.init, None, "INITIALISATION")


def _bindings(info, ev):
    params = ev.event.params
    domains = [_enumerate(info, ev.param_types[p]) for p in params]
    for values in itertools.product(*domains):
        yield dict(zip(params, values))


def enabled_events(m: ast.PolicyMachine, s: SystemState) -> list[tuple[str, dict]]:
    """Every ``(event, binding)`` whose guard holds in ``s``.

    Ordered by event declaration, then by binding with parameters compared in
    declaration order and elements in carrier declaration order.
    """
    info = _info(m)
    out = []
    for ev in info.events.values():
        for b in _bindings(info, ev):
            if _eval(info, s, b, ev.guard):
                out.append((ev.event.name, b))
    return out


def choice_options(m: ast.PolicyMachine, s: SystemState, event: str,
                   binding: Mapping) -> list[dict]:
    """All admissible ``choice`` maps for an enabled event (``[{}]`` if none needed)."""
    info = _info(m)
    ev = info.events.get(event)
    if ev is None:
        raise UnknownIdentifier("event", event)
    env = dict(binding)
    idxs, options = [], []
    for idx, a in enumerate(ev.actions):
        if a.is_choice:
            idxs.append(idx)
            options.append(sorted(as_relation(_eval(info, s, env, a.rhs)), key=value_key))
    return [dict(zip(idxs, combo)) for combo in itertools.product(*options)]


def _check_binding(info, ev, binding):
    if set(binding) != set(ev.event.params):
        raise EventNotEnabled(
            f"{ev.event.name} expects parameters {list(ev.event.params)}, got {sorted(binding)}")
    for p, v in binding.items():
        if v not in _enumerate(info, ev.param_types[p]):
            raise EventNotEnabled(f"{ev.event.name}: {p}={format_value(v)} is outside its domain")


def is_enabled(m: ast.PolicyMachine, s: SystemState, event: str, binding: Mapping) -> bool:
    info = _info(m)
    ev = info.events.get(event)
    if ev is None:
        raise UnknownIdentifier("event", event)
    try:
        _check_binding(info, ev, binding)
    except EventNotEnabled:
        return False
    return bool(_eval(info, s, dict(binding), ev.guard))


def apply_event(m: ast.PolicyMachine, s: SystemState, event: str, binding: Mapping,
                choice: Mapping | None = None) -> SystemState:
    """Successor of ``s`` under ``event``; ``s`` itself is left untouched.

    ``choice`` maps the index of each ``::`` action to the element picked.
    """
    info = _info(m)
    ev = info.events.get(event)
    if ev is None:
        raise UnknownIdentifier("event", event)
    _check_binding(info, ev, binding)
    env = dict(binding)
    if not _eval(info, s, env, ev.guard):
        raise EventNotEnabled(f"{event} {format_binding(binding)} is not enabled")
    return _execute(info, s, env, ev.actions, choice, event)


def successors(m: ast.PolicyMachine, s: SystemState, event: str | None = None):
    """Yield ``(event, binding, choice, next_state)`` for every transition out of ``s``
    (only those of ``event`` when it is given)."""
    info = _info(m)
    for ev in info.events.values():
        if event is not None and ev.event.name != event:
            continue
        for b in _bindings(info, ev):
            if not _eval(info, s, b, ev.guard):
                continue
            for ch in choice_options(m, s, ev.event.name, b):
                yield ev.event.name, b, ch, _execute(info, s, b, ev.actions, ch, ev.event.name)


def assigned_variables(m: ast.PolicyMachine, event: str) -> frozenset:
    return frozenset(a.target for a in m.event(event).actions)


# -- access decisions ---------------------------------------------------------


@dataclass(frozen=True)
class AccessDecision:
    verdict: str  # "Allow" | "Deny"
    role: str | None
    permissions: frozenset | None
    reason: str

    @property
    def allowed(self) -> bool:
        return self.verdict == "Allow"

    def __str__(self) -> str:
        return f"{self.verdict}: {self.reason}"


def _owner(m, s, ctx, d):
    if "owner" in m.variable_names:
        v = s["owner"]
        o = v.get(d) if isinstance(v, FMap) else None
        if isinstance(o, frozenset):
            return next(iter(o)) if len(o) == 1 else None
        if o is not None:
            return o
    return ctx.owner.get(d)


def _scope(m, s, ctx, role, user, d):
    """``None`` when ``user`` may act on ``d`` in ``role``, else the reason not."""
    if role not in (REPORTER, CONTROLLER, ADMINISTRATOR):
        return None
    owner = _owner(m, s, ctx, d)
    if owner is None:
        return f"{d} has no owner"
    if role == REPORTER:
        return None if owner == user else f"{d} is owned by {owner}, not {user}"
    controller = ctx.reporter_supervisor.get(owner)
    if role == CONTROLLER:
        if controller == user:
            return None
        return f"{d} belongs to {owner}, who is supervised by {controller}, not {user}"
    admin = ctx.controller_supervisor.get(controller) if controller else None
    if admin == user:
        return None
    return f"{d} comes from controller {controller}, supervised by {admin}, not {user}"


def role_permissions(m: ast.PolicyMachine, s: SystemState, role: str, d: str) -> frozenset:
    """Rights held by ``role`` on object ``d`` in ``s`` (role granularity, no scoping)."""
    if "permissions" not in m.variable_names:
        raise UnsupportedQuery(f"machine {m.name!r} has no permissions variable")
    perms = s["permissions"]
    try:
        return perms[(role, d)]
    except KeyError:
        raise UnknownIdentifier("role/object pair", f"{role} |-> {d}") from None


def decide_access(m: ast.PolicyMachine, s: SystemState, ctx: AccessContext,
                  user: str, right, d: str) -> AccessDecision:
    """Allow iff one of the user's roles holds ``right`` on ``d`` in ``s`` and
    the user is in that role's scope for ``d``.

    Scope: a reporter must own ``d``; a controller must supervise the owner;
    an administrator must supervise the owner's controller.  Roles are tried
    in name order and the first witness wins; on denial the reason reported
    is the first failing condition.
    """
    if "permissions" not in m.variable_names:
        raise UnsupportedQuery(f"machine {m.name!r} has no permissions variable")
    info = _info(m)
    if "REPORTS" in info.carriers and d not in info.carriers["REPORTS"]:
        raise UnknownIdentifier("object", d)
    if "USERS" in info.carriers and user not in info.carriers["USERS"]:
        raise UnknownIdentifier("user", user)
    right = str(right)
    roles = sorted(roles_of(ctx, user))
    if not roles:
        return AccessDecision("Deny", None, None, f"{user} holds no role")
    first_failure = None
    for role in roles:
        held = role_permissions(m, s, role, d)
        if right not in held:
            why = f"{role} holds {format_value(held)} on {d}, which lacks {right}"
            first_failure = first_failure or AccessDecision("Deny", role, held, why)
            continue
        problem = _scope(m, s, ctx, role, user, d)
        if problem is None:
            return AccessDecision("Allow", role, held,
                                  f"{role} holds {format_value(held)} on {d}")
        first_failure = first_failure or AccessDecision("Deny", role, held, problem)
    return first_failure
