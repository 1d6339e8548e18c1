"""Recursive-descent parser for ``.pol`` machine files.

Operator precedence, tightest first::

    f(x)  f[S]                       application, image
    union  inter  \\  <+  **          set operators (one level, left assoc)
    |->                               maplet (left assoc)
    in  <:  =  /=                     relations (non-associative)
    not
    /\\
    \\/
    =>                                right assoc
    !x . P   !x in S . P              quantifier body extends to the right
"""

from __future__ import annotations

from . import ast
from .lexer import Token, tokenize
from ..errors import DuplicateDeclaration, ParseError

_SECTION_HEADERS = ("sets", "constants", "variables", "invariants", "events")


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self._expected: set[str] = set()
        self._expected_at = -1

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _note(self, what: str) -> None:
        if self._expected_at != self.pos:
            self._expected_at = self.pos
            self._expected = set()
        self._expected.add(what)

    def at(self, value: str) -> bool:
        t = self.tok
        if t.kind in ("keyword", "symbol") and t.value == value:
            return True
        self._note(repr(value))
        return False

    def at_ident(self) -> bool:
        if self.tok.kind == "ident":
            return True
        self._note("identifier")
        return False

    def accept(self, value: str) -> Token | None:
        if self.at(value):
            t = self.tok
            self.pos += 1
            return t
        return None

    def expect(self, value: str) -> Token:
        t = self.accept(value)
        if t is None:
            self.fail()
        return t

    def ident(self) -> Token:
        if not self.at_ident():
            self.fail()
        t = self.tok
        self.pos += 1
        return t

    def fail(self, message: str | None = None):
        t = self.tok
        expected = self._expected if self._expected_at == self.pos else set()
        raise ParseError(message or f"unexpected {t.describe()}", t.line, t.column, expected)

    # -- machine --------------------------------------------------------------

    def machine(self) -> ast.PolicyMachine:
        start = self.expect("machine")
        name = self.ident().value
        refines = self.ident().value if self.accept("refines") else None
        names: dict[str, str] = {}

        def declare(tok: Token, kind: str) -> None:
            if tok.value in names:
                raise DuplicateDeclaration(
                    f"duplicate declaration of {tok.value!r} "
                    f"(already declared as {names[tok.value]})",
                    tok.line, tok.column,
                )
            names[tok.value] = kind

        sets = []
        self.accept("sets")
        while self.at("set"):
            t = self.expect("set")
            n = self.ident()
            declare(n, "set")
            self.expect("=")
            self.expect("{")
            elems = []
            if not self.at("}"):
                while True:
                    e = self.ident()
                    declare(e, f"element of {n.value}")
                    elems.append(e.value)
                    if not self.accept(","):
                        break
            self.expect("}")
            sets.append(ast.SetDecl(n.value, tuple(elems), line=t.line, column=t.column))

        constants = []
        self.accept("constants")
        while self.at("constant"):
            t = self.expect("constant")
            n = self.ident()
            declare(n, "constant")
            self.expect("=")
            constants.append(ast.ConstDecl(n.value, self.expr(), line=t.line, column=t.column))

        variables = []
        self.accept("variables")
        while self.at("variable"):
            t = self.expect("variable")
            n = self.ident()
            declare(n, "variable")
            self.expect(":")
            variables.append(ast.VarDecl(n.value, self.var_type(), line=t.line, column=t.column))

        invariants = []
        labels: set[str] = set()
        self.accept("invariants")
        while self.at("invariant"):
            t = self.expect("invariant")
            n = self.ident()
            if n.value in labels:
                raise DuplicateDeclaration(
                    f"duplicate invariant label {n.value!r}", n.line, n.column
                )
            labels.add(n.value)
            self.expect(":")
            invariants.append(ast.Invariant(n.value, self.pred(), line=t.line, column=t.column))

        self.expect("init")
        init = self.assignments()
        # "init" may be closed by "end" or implicitly by the events section
        if not (self.at("events") or self.at("event")):
            self.expect("end")

        events = []
        seen: set[str] = set()
        self.accept("events")
        while self.at("event"):
            ev = self.event()
            if ev.name in seen:
                raise DuplicateDeclaration(
                    f"duplicate event {ev.name!r}", ev.line, ev.column
                )
            seen.add(ev.name)
            events.append(ev)
        self.expect("end")
        if self.tok.kind != "eof":
            self._note("end of input")
            self.fail()
        return ast.PolicyMachine(
            name, refines, tuple(sets), tuple(constants), tuple(variables),
            tuple(invariants), tuple(init), tuple(events),
            line=start.line, column=start.column,
        )

    def var_type(self) -> ast.VarType:
        if self.accept("set"):
            self.expect("of")
            return ast.VarType("set", (), self.ident().value)
        self.expect("map")
        if self.accept("("):
            d1 = self.ident().value
            self.expect(",")
            d2 = self.ident().value
            self.expect(")")
            dom = (d1, d2)
        else:
            dom = (self.ident().value,)
        self.expect("->")
        if self.accept("set"):
            self.expect("of")
            return ast.VarType("map", dom, self.ident().value, True)
        return ast.VarType("map", dom, self.ident().value, False)

    def event(self) -> ast.Event:
        t = self.expect("event")
        n = self.ident()
        refines = self.ident().value if self.accept("refines") else None
        params = []
        if self.accept("any"):
            while True:
                p = self.ident()
                if p.value in params:
                    raise DuplicateDeclaration(
                        f"duplicate parameter {p.value!r}", p.line, p.column
                    )
                params.append(p.value)
                if not self.accept(","):
                    break
        self.expect("where")
        guard = self.pred()
        self.expect("then")
        actions = self.assignments()
        self.expect("end")
        return ast.Event(n.value, refines, tuple(params), guard, tuple(actions),
                         line=t.line, column=t.column)

    def assignments(self) -> list[ast.Assignment]:
        out = []
        while True:
            if self.accept("skip"):
                continue
            if not self.at_ident():
                return out
            t = self.ident()
            args = ()
            if self.accept("("):
                args = tuple(self.arguments())
                self.expect(")")
            if self.accept(":="):
                kind = ":="
            elif self.accept("::"):
                kind = "::"
            else:
                self.fail()
            out.append(ast.Assignment(t.value, args, kind, self.expr(),
                                      line=t.line, column=t.column))

    # -- predicates and expressions -----------------------------------------

    def pred(self) -> ast.Node:
        if self.at("!"):
            return self.quantifier()
        return self.implication()

    def quantifier(self) -> ast.Node:
        t = self.expect("!")
        var = self.ident().value
        domain = self.expr() if self.accept("in") else None
        self.expect(".")
        return ast.Forall(var, domain, self.pred(), line=t.line, column=t.column)

    def implication(self) -> ast.Node:
        left = self.disjunction()
        t = self.accept("=>")
        if t:
            right = self.pred()
            return ast.BoolOp("=>", left, right, line=t.line, column=t.column)
        return left

    def disjunction(self) -> ast.Node:
        left = self.conjunction()
        while t := self.accept("\\/"):
            left = ast.BoolOp("\\/", left, self.conjunction(), line=t.line, column=t.column)
        return left

    def conjunction(self) -> ast.Node:
        left = self.unary()
        while t := self.accept("/\\"):
            left = ast.BoolOp("/\\", left, self.unary(), line=t.line, column=t.column)
        return left

    def unary(self) -> ast.Node:
        if t := self.accept("not"):
            return ast.Not(self.unary(), line=t.line, column=t.column)
        if self.at("!"):
            return self.quantifier()
        return self.relation()

    def relation(self) -> ast.Node:
        left = self.expr()
        for op in ast.REL_OPS:
            if t := self.accept(op):
                return ast.Rel(op, left, self.expr(), line=t.line, column=t.column)
        return left

    def expr(self) -> ast.Node:
        left = self.set_expr()
        while t := self.accept("|->"):
            left = ast.Maplet(left, self.set_expr(), line=t.line, column=t.column)
        return left

    def set_expr(self) -> ast.Node:
        left = self.postfix()
        while True:
            for op in ast.SET_OPS:
                if t := self.accept(op):
                    left = ast.SetOp(op, left, self.postfix(), line=t.line, column=t.column)
                    break
            else:
                return left

    def postfix(self) -> ast.Node:
        node = self.atom()
        while True:
            if t := self.accept("("):
                args = tuple(self.arguments())
                self.expect(")")
                node = ast.Apply(node, args, line=t.line, column=t.column)
            elif t := self.accept("["):
                arg = self.expr()
                self.expect("]")
                node = ast.Image(node, arg, line=t.line, column=t.column)
            else:
                return node

    def arguments(self) -> list[ast.Node]:
        args = [self.expr()]
        while self.accept(","):
            args.append(self.expr())
        return args

    def atom(self) -> ast.Node:
        t = self.tok
        if self.at_ident():
            self.pos += 1
            return ast.Ident(t.value, line=t.line, column=t.column)
        if self.accept("true"):
            return ast.BoolLit(True, line=t.line, column=t.column)
        if self.accept("false"):
            return ast.BoolLit(False, line=t.line, column=t.column)
        if self.accept("{"):
            items = []
            if not self.at("}"):
                items = self.arguments()
            self.expect("}")
            return ast.SetLit(tuple(items), line=t.line, column=t.column)
        if self.accept("("):
            inner = self.pred()
            self.expect(")")
            return inner
        self.fail()


def _run(text: str, rule: str):
    p = _Parser(text)
    try:
        result = getattr(p, rule)()
    except RecursionError:
        t = p.tok
        raise ParseError("expression nested too deeply", t.line, t.column) from None
    if rule != "machine" and p.tok.kind != "eof":
        p._note("end of input")
        p.fail()
    return result


def parse_policy(text: str) -> ast.PolicyMachine:
    """Parse the text of a ``.pol`` file.

    Raises :class:`~dynrbac.errors.ParseError` (with line, column and the set
    of expected tokens) on malformed input, and
    :class:`~dynrbac.errors.DuplicateDeclaration` when a name is declared
    twice.  Name resolution and typing are left to :func:`validate`.
    """
    return _run(text, "machine")


def parse_predicate(text: str) -> ast.Node:
    return _run(text, "pred")


def parse_expression(text: str) -> ast.Node:
    return _run(text, "expr")
