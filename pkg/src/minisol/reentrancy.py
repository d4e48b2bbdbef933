"""Phase-3 reentrancy discovery: graph queries over the enriched CPG.

The core pattern is a statement that can cede control to untrusted code
followed (on some control-flow path, possibly through internal calls) by a
write to contract storage.  Variants are told apart by what plays the
external-call role: a plain external call (same/cross-function), a delegate
call, or a contract creation whose constructor calls out.  The delegate call
can also play the *write* role, in which case the written variable is
unknown and the whole contract has to be locked.

Patch-marked nodes never participate: lock variables are state variables and
lock releases are storage writes, so a hardened contract would otherwise
report its own mitigation as a bug.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cpg import Cpg, EdgeKind, Label, cfg_reachable
from .nodes import NewExpr

KIND_SAME = "SameFunction"
KIND_CROSS = "CrossFunction"
KIND_DELEGATE_CALL = "DelegateAsCall"
KIND_DELEGATE_UPDATE = "DelegateAsUpdate"
KIND_CREATE = "CreateBased"


@dataclass
class ReentrancyBug:
    kind: str
    external_call: int  # expression node: the call / delegate call / constructor call
    state_update: int  # statement node; for DelegateAsUpdate the delegate-call expression
    variable: int | None  # state variable node; None for DelegateAsUpdate
    enclosing_function: int
    writer_functions: frozenset[int] = field(default_factory=frozenset)
    node: int = -1  # BugReentrancy node inserted into the CPG

    def sort_key(self):
        return (self.enclosing_function, self.external_call, self.state_update)


def find_reentrancy(cpg: Cpg) -> list[ReentrancyBug]:
    """All reentrancy matches, recorded in the CPG as BugReentrancy nodes."""
    bugs: list[ReentrancyBug] = []
    for fn_node in cpg.with_label(Label.Function):
        fn_id = fn_node.id
        ce_stmts = _external_call_statements(cpg, fn_id)
        if not ce_stmts:
            continue
        writes = _state_update_statements(cpg, fn_id)
        delegates = _delegate_statements(cpg, fn_id)
        picked: dict[tuple, ReentrancyBug] = {}
        for ce_stmt, ce_expr in ce_stmts:
            for sw_stmt, sv_ids in writes:
                if not cfg_reachable(cpg, ce_stmt, sw_stmt):
                    continue
                for sv in sv_ids:
                    key = (ce_expr, sv)
                    if key in picked and picked[key].state_update <= sw_stmt:
                        continue  # keep the earliest write; later ones share the lock
                    picked[key] = _classify(cpg, fn_id, ce_expr, sw_stmt, sv)
            for d_stmt, d_expr in delegates:
                if d_stmt == ce_stmt or not cfg_reachable(cpg, ce_stmt, d_stmt):
                    continue
                key = (ce_expr, "delegate", d_expr)
                if key not in picked:
                    picked[key] = ReentrancyBug(
                        kind=KIND_DELEGATE_UPDATE,
                        external_call=ce_expr,
                        state_update=d_expr,
                        variable=None,
                        enclosing_function=fn_id,
                    )
        bugs.extend(picked.values())
    bugs.sort(key=ReentrancyBug.sort_key)
    for bug in bugs:
        _record(cpg, bug)
    return bugs


def _external_call_statements(cpg: Cpg, fn_id: int):
    """Statements of a function that may cede control, with the expression
    playing the external-call role (one representative per statement)."""
    out = []
    for stmt_id in sorted(cpg.index.get(Label.ContainsExternalCall, ())):
        stmt = cpg.nodes[stmt_id]
        if Label.Statement not in stmt.labels or stmt.props.get("fn") != fn_id:
            continue
        if Label.Patch in stmt.labels:
            continue
        rep = None
        for expr_id in sorted(cpg.index.get(Label.ExternalCall, ()) | cpg.index.get(Label.ContainsExternalCall, ())):
            expr = cpg.nodes[expr_id]
            if Label.Expression in expr.labels and expr.props.get("stmt") == stmt_id:
                rep = expr_id
                break
        if rep is not None:
            out.append((stmt_id, rep))
    return out


def _state_update_statements(cpg: Cpg, fn_id: int):
    out = []
    for stmt_id in sorted(cpg.index.get(Label.StateUpdate, ())):
        stmt = cpg.nodes[stmt_id]
        if Label.Statement not in stmt.labels or stmt.props.get("fn") != fn_id:
            continue
        if Label.Patch in stmt.labels:
            continue
        svs = sorted(
            e.dst
            for e in cpg.out_edges(stmt_id, (EdgeKind.WritesState,))
            if Label.Patch not in cpg.nodes[e.dst].labels
        )
        if svs:
            out.append((stmt_id, svs))
    return out


def _delegate_statements(cpg: Cpg, fn_id: int):
    out = []
    for expr_id in sorted(cpg.index.get(Label.DelegateCall, ())):
        expr = cpg.nodes[expr_id]
        if Label.Expression not in expr.labels or expr.props.get("fn") != fn_id:
            continue
        stmt_id = expr.props.get("stmt")
        if stmt_id is None or Label.Patch in cpg.nodes[stmt_id].labels:
            continue
        out.append((stmt_id, expr_id))
    return sorted(set(out))


def _classify(cpg: Cpg, fn_id: int, ce_expr: int, sw_stmt: int, sv: int) -> ReentrancyBug:
    expr_node = cpg.nodes[ce_expr]
    writers = writer_functions(cpg, sv)
    if Label.ConstructorCall in expr_node.labels or isinstance(expr_node.ast, NewExpr):
        kind = KIND_CREATE
    elif Label.DelegateCall in expr_node.labels:
        kind = KIND_DELEGATE_CALL
    elif any(w != fn_id for w in writers):
        kind = KIND_CROSS
    else:
        kind = KIND_SAME
    return ReentrancyBug(
        kind=kind,
        external_call=ce_expr,
        state_update=sw_stmt,
        variable=sv,
        enclosing_function=fn_id,
        writer_functions=frozenset(writers),
    )


def writer_functions(cpg: Cpg, sv_id: int) -> set[int]:
    """Functions writing a state variable, directly or transitively.

    Constructors are excluded: they run once at deployment and cannot be
    re-entered, so guarding them would only burn gas.
    """
    out = set()
    for e in cpg.in_edges(sv_id, (EdgeKind.WritesState,)):
        src = cpg.nodes[e.src]
        if Label.Function in src.labels and not src.props.get("is_constructor"):
            out.add(src.id)
    return out


def _record(cpg: Cpg, bug: ReentrancyBug):
    signature = (bug.external_call, bug.state_update, bug.variable)
    for existing in cpg.with_label(Label.BugReentrancy):
        if existing.props.get("signature") == signature:
            bug.node = existing.id
            return
    node = cpg.add_node(
        [Label.BugReentrancy],
        {"kind": bug.kind, "signature": signature, "fn": bug.enclosing_function},
    )
    bug.node = node.id
    cpg.add_edge(EdgeKind.BugRole, node.id, bug.external_call, {"role": "external_call"})
    cpg.add_edge(EdgeKind.BugRole, node.id, bug.state_update, {"role": "state_update"})
    if bug.variable is not None:
        cpg.add_edge(EdgeKind.BugRole, node.id, bug.variable, {"role": "variable"})
    for w in sorted(bug.writer_functions):
        cpg.add_edge(EdgeKind.BugRole, node.id, w, {"role": "writer"})


def report_lines(cpg: Cpg, bugs: list[ReentrancyBug]) -> list[str]:
    lines = []
    for bug in bugs:
        fn_name = cpg.nodes[bug.enclosing_function].props.get("name", "?")
        call_line = cpg.nodes[bug.external_call].props.get("line", 0)
        sw_node = cpg.nodes[bug.state_update]
        write_line = sw_node.props.get("line", 0)
        var = cpg.nodes[bug.variable].props.get("name") if bug.variable is not None else "*"
        lines.append(f"REENTRANCY {bug.kind} fn={fn_name} call@{call_line} write@{write_line} var={var}")
    return lines
