"""Independent reference enumerators.

``rms_states`` knows nothing about the DSL or the engine: it encodes the
report lifecycle directly (one transition table per report) and enumerates
the product state space by plain recursion.  ``dfs_states`` is a generic
depth-first enumerator over engine transitions, used to cross-check the
breadth-first checker on arbitrary machines.
"""

from __future__ import annotations

import sys

# lifecycle transitions of one report
LIFECYCLE = {
    "CreateReport": ("VOID", "CREATED"),
    "ModifyReport": ("CREATED", "CREATED"),
    "DeleteReport": ("CREATED", "VOID"),
    "SubmitReport": ("CREATED", "SUBMITTED"),
    "ApproveReport": ("SUBMITTED", "APPROVED"),
    "ReturnReport": ("SUBMITTED", "CREATED"),
    "RegisterReport": ("APPROVED", "ARCHIVED"),
}

# rights of (Reporter, Controller, Administrator) per report state
PERMISSIONS = {
    "VOID": ("C", "", ""),
    "CREATED": ("RWD", "", ""),
    "SUBMITTED": ("R", "RW", ""),
    "APPROVED": ("R", "R", "RW"),
    "ARCHIVED": ("R", "R", "R"),
}


def report_moves(level: str, local, reporters):
    """Successor local states of one report.  ``local`` is the lifecycle state
    for the abstract level and ``(state, owner)`` for the user level."""
    if level != "users":
        for src, dst in LIFECYCLE.values():
            if local == src:
                yield dst
        return
    state, owner = local
    for event, (src, dst) in LIFECYCLE.items():
        if state != src:
            continue
        if event == "CreateReport":
            for u in reporters:
                yield (dst, u)
        elif event == "DeleteReport":
            yield (dst, None)
        else:
            yield (dst, owner)


def rms_states(n_reports: int, level: str = "abs", reporters=("u1", "u2")) -> set:
    """All reachable global states: tuples with one local state per report."""
    start = tuple(("VOID", None) if level == "users" else "VOID" for _ in range(n_reports))
    seen = set()

    def visit(g):
        if g in seen:
            return
        seen.add(g)
        for i, local in enumerate(g):
            for nxt in report_moves(level, local, reporters):
                visit(g[:i] + (nxt,) + g[i + 1:])

    visit(start)
    return seen


def to_oracle(state, n_reports: int, level: str = "abs"):
    """Project an engine state onto the oracle's representation."""
    out = []
    for i in range(1, n_reports + 1):
        rp = f"r{i}"
        st = state["report_state"][rp]
        if level == "users":
            owners = state["owner"][rp]
            out.append((st, next(iter(owners)) if owners else None))
        else:
            out.append(st)
    return tuple(out)


def expected_permissions(report_state: str) -> dict:
    rep, ctl, adm = PERMISSIONS[report_state]
    return {"Reporter": frozenset(rep), "Controller": frozenset(ctl),
            "Administrator": frozenset(adm)}


def dfs_states(m) -> set:
    from dynrbac import engine

    sys.setrecursionlimit(max(10000, sys.getrecursionlimit()))
    seen = set()

    def visit(s):
        if s in seen:
            return
        seen.add(s)
        for _, _, _, nxt in engine.successors(m, s):
            visit(nxt)

    visit(engine.initial_state(m))
    return seen
