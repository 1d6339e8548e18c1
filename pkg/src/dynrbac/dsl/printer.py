"""Canonical pretty-printer; its output parses back to an equal tree."""

from __future__ import annotations

from . import ast

# binding strength of each construct; an operand printed in a position that
# demands a higher level is wrapped in parentheses
_LEVEL = {
    ast.Forall: 0,
    ast.Not: 4,
    ast.Rel: 5,
    ast.Maplet: 6,
    ast.SetOp: 7,
    ast.Apply: 8,
    ast.Image: 8,
}
_BOOL_LEVEL = {"=>": 1, "\\/": 2, "/\\": 3}


def _level(node) -> int:
    if isinstance(node, ast.BoolOp):
        return _BOOL_LEVEL[node.op]
    return _LEVEL.get(type(node), 9)


def format_expr(node, need: int = 0) -> str:
    text = _fmt(node)
    return f"({text})" if _level(node) < need else text


def _fmt(n) -> str:
    if isinstance(n, ast.Ident):
        return n.name
    if isinstance(n, ast.BoolLit):
        return "true" if n.value else "false"
    if isinstance(n, ast.SetLit):
        return "{" + ", ".join(format_expr(i, 6) for i in n.items) + "}"
    if isinstance(n, ast.Maplet):
        return f"{format_expr(n.left, 6)} |-> {format_expr(n.right, 7)}"
    if isinstance(n, ast.Apply):
        args = ", ".join(format_expr(a, 6) for a in n.args)
        return f"{format_expr(n.fn, 8)}({args})"
    if isinstance(n, ast.Image):
        return f"{format_expr(n.fn, 8)}[{format_expr(n.arg, 6)}]"
    if isinstance(n, ast.SetOp):
        return f"{format_expr(n.left, 7)} {n.op} {format_expr(n.right, 8)}"
    if isinstance(n, ast.Rel):
        return f"{format_expr(n.left, 6)} {n.op} {format_expr(n.right, 6)}"
    if isinstance(n, ast.Not):
        return f"not {format_expr(n.operand, 4)}"
    if isinstance(n, ast.BoolOp):
        if n.op == "=>":
            return f"{format_expr(n.left, 2)} => {format_expr(n.right, 0)}"
        lvl = _BOOL_LEVEL[n.op]
        return f"{format_expr(n.left, lvl)} {n.op} {format_expr(n.right, lvl + 1)}"
    if isinstance(n, ast.Forall):
        dom = f" in {format_expr(n.domain, 6)}" if n.domain is not None else ""
        return f"!{n.var}{dom} . {format_expr(n.body, 0)}"
    if isinstance(n, ast.Carrier):
        return f"<{n.type}>"
    raise TypeError(f"cannot print {n!r}")


def format_type(t: ast.VarType) -> str:
    rng = f"set of {t.range}" if t.range_is_set or t.kind == "set" else t.range
    if t.kind == "set":
        return rng
    dom = t.domain[0] if len(t.domain) == 1 else f"({', '.join(t.domain)})"
    return f"map {dom} -> {rng}"


def format_assignment(a: ast.Assignment) -> str:
    lhs = a.target
    if a.args:
        lhs += "(" + ", ".join(format_expr(x, 6) for x in a.args) + ")"
    return f"{lhs} {a.kind} {format_expr(a.rhs, 6)}"


def pretty_print(m: ast.PolicyMachine) -> str:
    out = [f"machine {m.name}" + (f" refines {m.refines}" if m.refines else "")]
    for s in m.sets:
        out.append(f"  set {s.name} = {{{', '.join(s.elements)}}}")
    for c in m.constants:
        out.append(f"  constant {c.name} = {format_expr(c.expr, 6)}")
    for v in m.variables:
        out.append(f"  variable {v.name} : {format_type(v.type)}")
    for i in m.invariants:
        out.append(f"  invariant {i.label} : {format_expr(i.pred)}")
    out.append("  init")
    out.extend(f"    {format_assignment(a)}" for a in m.init)
    out.append("  end")
    for e in m.events:
        head = f"  event {e.name}" + (f" refines {e.refines}" if e.refines else "")
        out.append(head)
        if e.params:
            out.append(f"    any {', '.join(e.params)}")
        out.append(f"    where {format_expr(e.guard)}")
        out.append("    then")
        out.extend(f"      {format_assignment(a)}" for a in e.actions)
        if not e.actions:
            out.append("      skip")
        out.append("  end")
    out.append("end")
    return "\n".join(out) + "\n"
