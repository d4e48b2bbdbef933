"""Phase-2 enrichment: call analysis and write-state analysis.

Both are monotone label/edge propagations run to a fixpoint, so worklist
order cannot change the result (the tests re-run with reversed scan order
and compare graphs).

Call analysis seeds ExternalCall on every expression that cedes control to
unknown code (low-level calls, transfers, delegate calls, calls to contracts
whose implementation is absent) and then pushes "contains an external call"
backwards: expression -> enclosing statement -> enclosing function -> every
call site of that function.  `new C(...)` is labeled a constructor call that
contains an external call only when C's constructor (transitively) performs
one.

Write-state analysis connects statements and functions to the state
variables they update, first directly (assignments and ++/-- whose lvalue
root is a state variable), then transitively through internal call sites.
Calls into other contracts do not propagate: they write the callee's
storage, not the caller's.
"""

from __future__ import annotations

from .cpg import Cpg, EdgeKind, Label
from .nodes import (
    AssignStmt,
    CallExternal,
    CallInternal,
    DeclStmt,
    DelegateCall,
    ExprStmt,
    ForStmt,
    Ident,
    LowLevelCall,
    NewExpr,
    TransferExpr,
    UnaryExpr,
    lvalue_root,
)


def _scan(cpg: Cpg, label: Label, reverse: bool):
    ids = sorted(cpg.index.get(label, ()), reverse=reverse)
    return [cpg.nodes[i] for i in ids]


def call_analysis(cpg: Cpg, reverse_order: bool = False) -> Cpg:
    # seed: expressions that are external calls in their own right
    for node in _scan(cpg, Label.Expression, reverse_order):
        ast = node.ast
        if isinstance(ast, (LowLevelCall, TransferExpr)):
            cpg.add_label(node.id, Label.ExternalCall)
        elif isinstance(ast, DelegateCall):
            cpg.add_label(node.id, Label.ExternalCall)
            cpg.add_label(node.id, Label.DelegateCall)
        elif isinstance(ast, CallExternal):
            if ast.decl is None or ast.decl.body is None:
                cpg.add_label(node.id, Label.ExternalCall)

    # propagate to a fixpoint
    changed = True
    while changed:
        changed = False
        for node in _scan(cpg, Label.Expression, reverse_order):
            marked = Label.ExternalCall in node.labels or Label.ContainsExternalCall in node.labels
            if not marked:
                continue
            stmt = node.props.get("stmt")
            if stmt is not None:
                changed |= cpg.add_label(stmt, Label.ContainsExternalCall)
            fn = node.props.get("fn")
            if fn is not None:
                changed |= cpg.add_label(fn, Label.ContainsExternalCall)
        for fn_node in _scan(cpg, Label.ContainsExternalCall, reverse_order):
            if Label.Function not in fn_node.labels:
                continue
            for edge in cpg.in_edges(fn_node.id, (EdgeKind.CallsTo,)):
                site = cpg.nodes[edge.src]
                if isinstance(site.ast, NewExpr):
                    changed |= cpg.add_label(site.id, Label.ConstructorCall)
                changed |= cpg.add_label(site.id, Label.ContainsExternalCall)
    return cpg


def write_state_analysis(cpg: Cpg, reverse_order: bool = False) -> Cpg:
    # step 1: direct writes
    for node in _scan(cpg, Label.Statement, reverse_order):
        sv = _direct_write_target(node.ast)
        if sv is None or not cpg.has_node_for(sv):
            continue
        sv_node = cpg.node_for(sv)
        if Label.StateVariable not in sv_node.labels:
            continue
        _mark_writer(cpg, node.id, sv_node.id, "direct")
        fn = node.props.get("fn")
        if fn is not None:
            _mark_writer(cpg, fn, sv_node.id, "direct")

    # step 2: internal call sites to updating functions, to a fixpoint
    changed = True
    while changed:
        changed = False
        for fn_node in _scan(cpg, Label.StateUpdate, reverse_order):
            if Label.Function not in fn_node.labels:
                continue
            written = [e.dst for e in cpg.out_edges(fn_node.id, (EdgeKind.WritesState,))]
            for edge in cpg.in_edges(fn_node.id, (EdgeKind.CallsTo,)):
                site = cpg.nodes[edge.src]
                if not isinstance(site.ast, CallInternal):
                    continue  # cross-contract calls write the callee's storage
                stmt = site.props.get("stmt")
                caller_fn = site.props.get("fn")
                for sv_id in written:
                    if stmt is not None:
                        changed |= _mark_writer(cpg, stmt, sv_id, "transitive")
                    if caller_fn is not None:
                        changed |= _mark_writer(cpg, caller_fn, sv_id, "transitive")
    return cpg


def _mark_writer(cpg: Cpg, src: int, sv_id: int, via: str) -> bool:
    changed = cpg.add_label(src, Label.StateUpdate)
    if not cpg.has_edge(EdgeKind.WritesState, src, sv_id):
        cpg.add_edge(EdgeKind.WritesState, src, sv_id, {"via": via})
        changed = True
    return changed


def _direct_write_target(stmt):
    """The state VarDecl written by a statement, if any."""
    lv = None
    if isinstance(stmt, AssignStmt):
        lv = stmt.lhs
    elif isinstance(stmt, ExprStmt) and isinstance(stmt.expr, UnaryExpr) and stmt.expr.op in ("++", "--"):
        lv = stmt.expr.operand
    if lv is None:
        return None
    root = lvalue_root(lv)
    if root is None or root.decl is None:
        return None
    decl = root.decl
    return decl if getattr(decl, "storage_class", None) == "state" else None
