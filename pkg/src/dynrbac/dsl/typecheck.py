"""Name resolution and type inference.

Types are inferred by unification, which is also how event parameters and
un-annotated quantifier variables get their domains: ``any rp`` followed by
``report_state(rp) = VOID`` makes ``rp`` range over the domain carrier of
``report_state``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import count

from . import ast

# -- types ------------------------------------------------------------------


@dataclass(frozen=True)
class ElemT:
    carrier: str

    def __str__(self) -> str:
        return self.carrier


@dataclass(frozen=True)
class PairT:
    left: object
    right: object

    def __str__(self) -> str:
        return f"({self.left} * {self.right})"


@dataclass(frozen=True)
class SetT:
    elem: object

    def __str__(self) -> str:
        return f"set of {self.elem}"


@dataclass(frozen=True)
class BoolT:
    def __str__(self) -> str:
        return "predicate"


BOOL = BoolT()
_ids = count()


class TVar:
    __slots__ = ("ref", "id")

    def __init__(self):
        self.ref = None
        self.id = next(_ids)

    def __str__(self) -> str:
        return "?" if self.ref is None else str(self.ref)


def prune(t):
    while isinstance(t, TVar) and t.ref is not None:
        t = t.ref
    return t


def resolve(t):
    """Fully substituted copy of ``t`` (type variables may remain)."""
    t = prune(t)
    if isinstance(t, PairT):
        return PairT(resolve(t.left), resolve(t.right))
    if isinstance(t, SetT):
        return SetT(resolve(t.elem))
    return t


def is_ground(t) -> bool:
    t = prune(t)
    if isinstance(t, TVar):
        return False
    if isinstance(t, PairT):
        return is_ground(t.left) and is_ground(t.right)
    if isinstance(t, SetT):
        return is_ground(t.elem)
    return True


def _occurs(v: TVar, t) -> bool:
    t = prune(t)
    if t is v:
        return True
    if isinstance(t, PairT):
        return _occurs(v, t.left) or _occurs(v, t.right)
    if isinstance(t, SetT):
        return _occurs(v, t.elem)
    return False


def unify(a, b) -> bool:
    a, b = prune(a), prune(b)
    if a is b:
        return True
    if isinstance(a, TVar):
        if _occurs(a, b):
            return False
        a.ref = b
        return True
    if isinstance(b, TVar):
        return unify(b, a)
    if isinstance(a, PairT) and isinstance(b, PairT):
        return unify(a.left, b.left) and unify(a.right, b.right)
    if isinstance(a, SetT) and isinstance(b, SetT):
        return unify(a.elem, b.elem)
    return a == b


def decl_type(t: ast.VarType):
    if t.kind == "set":
        return SetT(ElemT(t.range))
    dom = ElemT(t.domain[0]) if len(t.domain) == 1 else PairT(
        ElemT(t.domain[0]), ElemT(t.domain[1])
    )
    rng = SetT(ElemT(t.range)) if t.range_is_set else ElemT(t.range)
    return SetT(PairT(dom, rng))


# -- diagnostics and analysis results ---------------------------------------


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


@dataclass
class EventInfo:
    event: ast.Event
    param_types: dict
    guard: ast.Node
    actions: tuple


@dataclass
class MachineInfo:
    machine: ast.PolicyMachine
    carriers: dict = field(default_factory=dict)
    element_carrier: dict = field(default_factory=dict)
    const_types: dict = field(default_factory=dict)
    const_exprs: dict = field(default_factory=dict)
    var_types: dict = field(default_factory=dict)
    invariants: list = field(default_factory=list)  # (label, annotated pred)
    init: tuple = ()
    events: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)
    # filled lazily by the engine
    const_values: dict | None = None
    map_domains: dict = field(default_factory=dict)


class _Checker:
    def __init__(self, m: ast.PolicyMachine):
        self.m = m
        self.info = MachineInfo(m)
        self.globals: dict = {}

    def diag(self, node, code: str, message: str) -> None:
        self.info.diagnostics.append(
            Diagnostic(getattr(node, "line", 0), getattr(node, "column", 0), code, message)
        )

    def expect(self, node, actual, expected) -> None:
        if not unify(actual, expected):
            self.diag(node, "type-mismatch",
                      f"type mismatch: expected {resolve(expected)}, found {resolve(actual)}")

    # -- expressions --------------------------------------------------------

    def expr(self, n, env: dict):
        """Return ``(type, annotated node)``."""
        if isinstance(n, ast.Ident):
            if n.name in env:
                return env[n.name], n
            if n.name in self.globals:
                kind, t = self.globals[n.name]
                if kind == "variable" and env.get("$no-variables"):
                    self.diag(n, "init-reads-variable",
                              f"variable {n.name!r} cannot be read here")
                return t, n
            self.diag(n, "undeclared", f"undeclared identifier {n.name!r}")
            return TVar(), n
        if isinstance(n, ast.BoolLit):
            return BOOL, n
        if isinstance(n, ast.SetLit):
            elem = TVar()
            items = []
            for item in n.items:
                t, a = self.expr(item, env)
                self.expect(item, t, elem)
                items.append(a)
            return SetT(elem), replace(n, items=tuple(items))
        if isinstance(n, ast.Maplet):
            lt, la = self.expr(n.left, env)
            rt, ra = self.expr(n.right, env)
            return PairT(lt, rt), replace(n, left=la, right=ra)
        if isinstance(n, ast.Apply):
            ft, fa = self.expr(n.fn, env)
            dom, rng = TVar(), TVar()
            self.expect(n.fn, ft, SetT(PairT(dom, rng)))
            args = []
            point = None
            for arg in n.args:
                t, a = self.expr(arg, env)
                args.append(a)
                point = t if point is None else PairT(point, t)
            self.expect(n, point, dom)
            return rng, replace(n, fn=fa, args=tuple(args))
        if isinstance(n, ast.Image):
            ft, fa = self.expr(n.fn, env)
            st, sa = self.expr(n.arg, env)
            dom, rng = TVar(), TVar()
            self.expect(n.fn, ft, SetT(PairT(dom, rng)))
            self.expect(n.arg, st, SetT(dom))
            return SetT(rng), replace(n, fn=fa, arg=sa)
        if isinstance(n, ast.SetOp):
            lt, la = self.expr(n.left, env)
            rt, ra = self.expr(n.right, env)
            node = replace(n, left=la, right=ra)
            if n.op == "**":
                a, b = TVar(), TVar()
                self.expect(n.left, lt, SetT(a))
                self.expect(n.right, rt, SetT(b))
                return SetT(PairT(a, b)), node
            elem = PairT(TVar(), TVar()) if n.op == "<+" else TVar()
            self.expect(n.left, lt, SetT(elem))
            self.expect(n.right, rt, SetT(elem))
            return SetT(elem), node
        if isinstance(n, ast.Rel):
            lt, la = self.expr(n.left, env)
            rt, ra = self.expr(n.right, env)
            if n.op == "in":
                self.expect(n, rt, SetT(lt))
            elif n.op == "<:":
                elem = TVar()
                self.expect(n.left, lt, SetT(elem))
                self.expect(n.right, rt, SetT(elem))
            else:
                self.expect(n, rt, lt)
            return BOOL, replace(n, left=la, right=ra)
        if isinstance(n, ast.Not):
            t, a = self.expr(n.operand, env)
            self.expect(n.operand, t, BOOL)
            return BOOL, replace(n, operand=a)
        if isinstance(n, ast.BoolOp):
            lt, la = self.expr(n.left, env)
            rt, ra = self.expr(n.right, env)
            self.expect(n.left, lt, BOOL)
            self.expect(n.right, rt, BOOL)
            return BOOL, replace(n, left=la, right=ra)
        if isinstance(n, ast.Forall):
            self.local_name(n, n.var)
            vt = TVar()
            dom = None
            if n.domain is not None:
                dt, dom = self.expr(n.domain, env)
                self.expect(n.domain, dt, SetT(vt))
            bt, body = self.expr(n.body, {**env, n.var: vt})
            self.expect(n.body, bt, BOOL)
            if dom is None:
                if self.enumerable(vt):
                    dom = ast.Carrier(resolve(vt), line=n.line, column=n.column)
                else:
                    self.diag(n, "uninferable",
                              f"cannot infer a finite domain for {n.var!r}")
                    dom = ast.SetLit()
            return BOOL, replace(n, domain=dom, body=body)
        raise TypeError(f"unexpected node {n!r}")

    def enumerable(self, t) -> bool:
        t = prune(t)
        if isinstance(t, ElemT):
            return t.carrier in self.info.carriers
        if isinstance(t, PairT):
            return self.enumerable(t.left) and self.enumerable(t.right)
        return False

    def local_name(self, node, name: str) -> None:
        if name in self.globals:
            self.diag(node, "shadowing",
                      f"{name!r} shadows the {self.globals[name][0]} of the same name")

    def pred(self, n, env):
        t, a = self.expr(n, env)
        self.expect(n, t, BOOL)
        return a

    # -- assignments --------------------------------------------------------

    def assignment(self, a: ast.Assignment, env: dict, in_init: bool):
        entry = self.globals.get(a.target)
        if entry is None or entry[0] != "variable":
            what = "undeclared identifier" if entry is None else f"{entry[0]}"
            self.diag(a, "bad-target", f"cannot assign to {what} {a.target!r}")
            self.expr(a.rhs, env)
            return a
        vt = entry[1]
        args = []
        target_t = vt
        if a.args:
            if in_init:
                self.diag(a, "init-pointwise",
                          f"initialisation must assign {a.target!r} as a whole")
            decl = self.m.variable(a.target)
            if decl.type.kind != "map":
                self.diag(a, "not-a-map", f"{a.target!r} is not a map variable")
            point = None
            for x in a.args:
                t, ax = self.expr(x, env)
                args.append(ax)
                point = t if point is None else PairT(point, t)
            rng = TVar()
            self.expect(a, vt, SetT(PairT(point, rng)))
            target_t = rng
        rt, rhs = self.expr(a.rhs, env)
        if a.is_choice:
            self.expect(a.rhs, rt, SetT(target_t))
        else:
            self.expect(a.rhs, rt, target_t)
        return replace(a, args=tuple(args), rhs=rhs)

    # -- machine ------------------------------------------------------------

    def run(self) -> MachineInfo:
        m, info = self.m, self.info
        for s in m.sets:
            info.carriers[s.name] = tuple(s.elements)
            self.globals[s.name] = ("set", SetT(ElemT(s.name)))
            for e in s.elements:
                info.element_carrier[e] = s.name
                self.globals[e] = ("element", ElemT(s.name))
        for c in m.constants:
            t, a = self.expr(c.expr, {"$no-variables": True})
            info.const_types[c.name] = t
            info.const_exprs[c.name] = a
            self.globals[c.name] = ("constant", t)
        for v in m.variables:
            t = v.type
            for name in (*t.domain, t.range):
                if name not in info.carriers:
                    self.diag(v, "undeclared",
                              f"undeclared set {name!r} in type of {v.name!r}")
            info.var_types[v.name] = decl_type(t)
            self.globals[v.name] = ("variable", info.var_types[v.name])
        for inv in m.invariants:
            info.invariants.append((inv.label, self.pred(inv.pred, {})))

        init = []
        assigned: set[str] = set()
        for a in m.init:
            if a.target in assigned:
                self.diag(a, "double-assignment", f"{a.target!r} assigned twice")
            assigned.add(a.target)
            init.append(self.assignment(a, {"$no-variables": True}, True))
        for v in m.variables:
            if v.name not in assigned:
                self.diag(v, "uninitialised", f"variable {v.name!r} is not initialised")
        info.init = tuple(init)

        for e in m.events:
            env = {}
            for p in e.params:
                self.local_name(e, p)
                env[p] = TVar()
            guard = self.pred(e.guard, env)
            actions = []
            assigned = set()
            for a in e.actions:
                if a.target in assigned:
                    self.diag(a, "double-assignment",
                              f"{a.target!r} assigned twice in event {e.name!r}")
                assigned.add(a.target)
                actions.append(self.assignment(a, env, False))
            ptypes = {}
            for p in e.params:
                if not self.enumerable(env[p]):
                    self.diag(e, "uninferable",
                              f"cannot infer a finite domain for parameter {p!r} of {e.name!r}")
                ptypes[p] = resolve(env[p])
            if e.refines is not None and m.refines is None:
                self.diag(e, "unresolved-refines",
                          f"event {e.name!r} refines {e.refines!r} but machine "
                          f"{m.name!r} refines no machine")
            info.events[e.name] = EventInfo(e, ptypes, guard, tuple(actions))
        return info


def analyze(m: ast.PolicyMachine) -> MachineInfo:
    """Type-check ``m`` once and cache the result on the machine."""
    if m._info is None:
        object.__setattr__(m, "_info", _Checker(m).run())
    return m._info


def check_predicate(m: ast.PolicyMachine, p: ast.Node, local_types=None,
                    expression: bool = False):
    """Type-check a free-standing predicate (or, with ``expression``, any
    expression) against ``m``.

    Returns ``(annotated node, diagnostics)``.
    """
    checker = _Checker(m)
    info = analyze(m)
    checker.info = MachineInfo(m, carriers=info.carriers)
    for s in m.sets:
        checker.globals[s.name] = ("set", SetT(ElemT(s.name)))
        for e in s.elements:
            checker.globals[e] = ("element", ElemT(s.name))
    for name, t in info.const_types.items():
        checker.globals[name] = ("constant", t)
    for name, t in info.var_types.items():
        checker.globals[name] = ("variable", t)
    env = dict(local_types or {})
    if expression:
        _, annotated = checker.expr(p, env)
    else:
        annotated = checker.pred(p, env)
    return annotated, checker.info.diagnostics


def refinement_diagnostics(m: ast.PolicyMachine, abstract: ast.PolicyMachine | None):
    out = []
    if m.refines is None:
        return out
    if abstract is None:
        out.append(Diagnostic(m.line, m.column, "unresolved-machine",
                              f"abstract machine {m.refines!r} not found"))
        return out
    names = {e.name for e in abstract.events}
    for e in m.events:
        if e.refines is not None and e.refines not in names:
            out.append(Diagnostic(e.line, e.column, "unresolved-refines",
                                  f"event {e.name!r} refines {e.refines!r}, which is not "
                                  f"an event of {abstract.name!r}"))
    return out
