"""Phase-3 integer bug discovery.

Every +, -, * and postfix ++/-- over integers is a site, as is every cast
that can lose value.  Exponentiation and division produce no site of their
own but their operands are still visited.  Compound assignments (+=, -=)
desugar to the corresponding binary operation on (lvalue, rhs).

Sites are collected per statement in post-order (operands before the
enclosing operation), which is exactly the order the hardener chains the
checks in.  The anchor is the statement itself, except for arithmetic in a
loop header (condition or step), which must be re-checked every iteration
and therefore anchors at the end of the loop body.

Two exemptions: statements that are themselves patches (a hardened file must
not trip over its own checks), and constant expressions whose exact value
fits the type.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cpg import Cpg, EdgeKind, Label
from .nodes import (
    AssignStmt,
    BinaryExpr,
    CastExpr,
    Expr,
    ForStmt,
    IntLit,
    IntType,
    Stmt,
    TypeExpr,
    UnaryExpr,
    WhileStmt,
    children,
)

POSITION_BEFORE = "Before"
POSITION_LAST_IN_LOOP = "LastInLoopBody"

_KIND_BY_OP = {"+": "Add", "-": "Sub", "*": "Mul", "++": "UnaryInc", "--": "UnaryDec"}


@dataclass
class IntegerBug:
    kind: str  # Add | Sub | Mul | UnaryInc | UnaryDec | Truncation
    expr: int  # CPG node of the arithmetic/cast expression (the statement node for compound assigns)
    operand_type: TypeExpr
    anchor: int  # statement node the check attaches to
    position: str  # Before | LastInLoopBody
    chain_parent: int | None = None  # CPG node of the enclosing arithmetic expression
    node: int = -1  # BugInteger node in the CPG
    # AST handles for check synthesis
    ast_expr: object = None
    lhs_ast: Expr = None
    rhs_ast: Expr = None
    assign_lhs_ast: Expr = None  # set when the site is the top-level rhs of a simple assignment
    target_type: TypeExpr = None  # truncation target


def find_integer_sites(cpg: Cpg) -> list[IntegerBug]:
    bugs: list[IntegerBug] = []
    step_parents = _loop_part_index(cpg)
    for stmt_node in cpg.with_label(Label.Statement):
        stmt = stmt_node.ast
        if stmt is None or Label.Patch in stmt_node.labels or getattr(stmt, "is_patch", False):
            continue
        anchor, position = _anchor_for(cpg, stmt_node.id, stmt, step_parents)
        collector = _Collector(cpg, anchor, position, bugs)
        if isinstance(stmt, AssignStmt):
            collector.visit(stmt.lhs, None)
            top_assign = stmt if stmt.op == "=" else None
            collector.visit(stmt.rhs, None, top_assign=top_assign)
            if stmt.op in ("+=", "-="):
                collector.compound(stmt, stmt_node.id)
        else:
            for expr in _direct_exprs(stmt):
                collector.visit(expr, None)
    for bug in bugs:
        _record(cpg, bug)
    return bugs


def _direct_exprs(stmt: Stmt):
    """Expressions owned by a statement, not descending into nested statements."""
    from .nodes import DeclStmt

    if isinstance(stmt, DeclStmt):
        return [stmt.decl.init] if stmt.decl.init is not None else []
    return [child for child in children(stmt) if isinstance(child, Expr)]


def _loop_part_index(cpg: Cpg):
    """Maps statement node ids of for-parts (init/step) to the For node id."""
    parts = {}
    for stmt_node in cpg.with_label(Label.Statement):
        ast = stmt_node.ast
        if isinstance(ast, ForStmt):
            if ast.init is not None:
                parts[cpg.node_for(ast.init).id] = (stmt_node.id, "init")
            if ast.step is not None:
                parts[cpg.node_for(ast.step).id] = (stmt_node.id, "step")
    return parts


def _anchor_for(cpg: Cpg, stmt_id: int, stmt: Stmt, step_parents):
    if stmt_id in step_parents:
        loop_id, part = step_parents[stmt_id]
        # init runs once, before the loop; step must be re-checked per iteration
        return (loop_id, POSITION_BEFORE if part == "init" else POSITION_LAST_IN_LOOP)
    if isinstance(stmt, (WhileStmt, ForStmt)):
        # only header expressions are owned by the loop node itself
        return (stmt_id, POSITION_LAST_IN_LOOP)
    return (stmt_id, POSITION_BEFORE)


class _Collector:
    def __init__(self, cpg: Cpg, anchor: int, position: str, bugs: list):
        self.cpg = cpg
        self.anchor = anchor
        self.position = position
        self.bugs = bugs

    def visit(self, expr: Expr, arith_parent: int | None, top_assign: AssignStmt = None):
        if isinstance(expr, BinaryExpr) and expr.op in ("+", "-", "*", "/", "**") and isinstance(expr.ty, IntType):
            node_id = self.cpg.node_for(expr).id
            self.visit(expr.lhs, node_id)
            self.visit(expr.rhs, node_id)
            if expr.op in ("+", "-", "*") and not self._folds_clean(expr):
                bug = IntegerBug(
                    kind=_KIND_BY_OP[expr.op],
                    expr=node_id,
                    operand_type=expr.ty,
                    anchor=self.anchor,
                    position=self.position,
                    chain_parent=arith_parent,
                    ast_expr=expr,
                    lhs_ast=expr.lhs,
                    rhs_ast=expr.rhs,
                )
                if top_assign is not None:
                    bug.assign_lhs_ast = top_assign.lhs
                self.bugs.append(bug)
            return
        if isinstance(expr, UnaryExpr) and expr.op in ("++", "--") and isinstance(expr.ty, IntType):
            node_id = self.cpg.node_for(expr).id
            self.visit(expr.operand, node_id)
            self.bugs.append(
                IntegerBug(
                    kind=_KIND_BY_OP[expr.op],
                    expr=node_id,
                    operand_type=expr.ty,
                    anchor=self.anchor,
                    position=self.position,
                    chain_parent=arith_parent,
                    ast_expr=expr,
                    lhs_ast=expr.operand,
                )
            )
            return
        if isinstance(expr, CastExpr):
            node_id = self.cpg.node_for(expr).id
            self.visit(expr.operand, arith_parent)
            source = expr.operand.ty
            if isinstance(source, IntType) and isinstance(expr.target_type, IntType) and _cast_can_lose(source, expr.target_type):
                self.bugs.append(
                    IntegerBug(
                        kind="Truncation",
                        expr=node_id,
                        operand_type=source,
                        anchor=self.anchor,
                        position=self.position,
                        chain_parent=arith_parent,
                        ast_expr=expr,
                        lhs_ast=expr.operand,
                        target_type=expr.target_type,
                    )
                )
            return
        for child in children(expr):
            if isinstance(child, Expr):
                self.visit(child, None)

    def compound(self, stmt: AssignStmt, stmt_node_id: int):
        """`c += b` carries an implicit addition on (c, b)."""
        ty = stmt.lhs.ty
        if not isinstance(ty, IntType):
            return
        self.bugs.append(
            IntegerBug(
                kind="Add" if stmt.op == "+=" else "Sub",
                expr=stmt_node_id,
                operand_type=ty,
                anchor=self.anchor,
                position=self.position,
                ast_expr=stmt,
                lhs_ast=stmt.lhs,
                rhs_ast=stmt.rhs,
            )
        )

    def _folds_clean(self, expr: BinaryExpr) -> bool:
        lv = _const_value(expr.lhs)
        rv = _const_value(expr.rhs)
        if lv is None or rv is None:
            return False
        exact = {"+": lv + rv, "-": lv - rv, "*": lv * rv}[expr.op]
        return expr.ty.contains(exact)


def _const_value(expr: Expr):
    if isinstance(expr, IntLit):
        return expr.value
    if isinstance(expr, UnaryExpr) and expr.op == "-":
        inner = _const_value(expr.operand)
        return None if inner is None else -inner
    return None


def _cast_can_lose(source: IntType, target: IntType) -> bool:
    """Narrowing, or a signedness change whose value sets differ."""
    if target.width < source.width:
        return True
    if source.signed != target.signed:
        return source.min_value() < target.min_value() or source.max_value() > target.max_value()
    return False


def _record(cpg: Cpg, bug: IntegerBug):
    node = cpg.add_node([Label.BugInteger], {"kind": bug.kind, "anchor": bug.anchor, "position": bug.position})
    bug.node = node.id
    cpg.add_edge(EdgeKind.BugRole, node.id, bug.expr, {"role": "expr"})
    cpg.add_edge(EdgeKind.BugRole, node.id, bug.anchor, {"role": "anchor"})


def report_lines(cpg: Cpg, bugs: list[IntegerBug]) -> list[str]:
    from .nodes import type_to_str

    lines = []
    for bug in bugs:
        expr_node = cpg.nodes[bug.expr]
        line = expr_node.props.get("line", 0)
        col = expr_node.props.get("col", 0)
        anchor_line = cpg.nodes[bug.anchor].props.get("line", 0)
        lines.append(f"INTOP {bug.kind} @{line}:{col} type={type_to_str(bug.operand_type)} anchor@{anchor_line}")
    return lines
