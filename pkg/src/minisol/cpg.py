"""Code property graph: the pipeline's single program representation.

The graph embeds the AST (AstChild edges mirror the tree, block structure
flattened into the parent statement/function), reference edges from
identifiers and call sites to their declarations, and intra-function
control-flow edges.  Later phases only ever add nodes, labels, and edges;
nothing is removed before code generation, and queries never mutate.

Control-flow wiring:
  * consecutive statements of a block:           Next
  * if -> first stmt of true/false branch:       CondTrue / CondFalse
    (missing else: CondFalse to the statement after the if, or to a
    synthetic function-exit node when the if is last)
  * loop header -> first body statement:         LoopBody
  * body tail statements -> loop header:         LoopBack
  * loop header -> statement after the loop:     Next
  * `for` desugars to init -> header -> body -> step -> header
  * return statements have no outgoing edges

Node and edge ids are dense integers assigned in AST pre-order, so a given
source file always produces the same graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import DomainError, MiniSolError
from .nodes import (
    AssertStmt,
    AssignStmt,
    Block,
    CallExternal,
    CallInternal,
    ContractDecl,
    DeclStmt,
    DelegateCall,
    Expr,
    ExprStmt,
    ForStmt,
    FunctionDecl,
    Ident,
    IfStmt,
    IndexExpr,
    LowLevelCall,
    MemberExpr,
    NewExpr,
    RequireStmt,
    ReturnStmt,
    SourceUnit,
    Stmt,
    TransferExpr,
    UnaryExpr,
    VarDecl,
    WhileStmt,
    children,
)


class Label(str, Enum):
    Contract = "Contract"
    Function = "Function"
    FallbackFunction = "FallbackFunction"
    Variable = "Variable"
    LocalVariable = "LocalVariable"
    StateVariable = "StateVariable"
    Statement = "Statement"
    Expression = "Expression"
    ExternalCall = "ExternalCall"
    DelegateCall = "DelegateCall"
    ConstructorCall = "ConstructorCall"
    ContainsExternalCall = "ContainsExternalCall"
    StateUpdate = "StateUpdate"
    BugReentrancy = "BugReentrancy"
    BugInteger = "BugInteger"
    Patch = "Patch"


class EdgeKind(str, Enum):
    AstChild = "AstChild"
    Next = "Next"
    CondTrue = "CondTrue"
    CondFalse = "CondFalse"
    LoopBody = "LoopBody"
    LoopBack = "LoopBack"
    RefersTo = "RefersTo"
    CallsTo = "CallsTo"
    WritesState = "WritesState"
    BugRole = "BugRole"
    PatchOf = "PatchOf"


CFG_KINDS = (EdgeKind.Next, EdgeKind.CondTrue, EdgeKind.CondFalse, EdgeKind.LoopBody, EdgeKind.LoopBack)


@dataclass
class CpgNode:
    id: int
    labels: set[Label] = field(default_factory=set)
    props: dict = field(default_factory=dict)
    ast: object = None  # origin AST node; None for synthetic nodes until codegen


@dataclass
class CpgEdge:
    id: int
    kind: EdgeKind
    src: int
    dst: int
    props: dict = field(default_factory=dict)


class Cpg:
    def __init__(self, unit: SourceUnit):
        self.unit = unit
        self.nodes: dict[int, CpgNode] = {}
        self.edges: dict[int, CpgEdge] = {}
        self.index: dict[Label, set[int]] = {}
        self.meta = {"source_name": unit.source_name, "pragma_text": unit.pragma_text}
        self._next_node = 0
        self._next_edge = 0
        self._by_ast: dict[int, int] = {}
        self._out: dict[int, list[int]] = {}
        self._in: dict[int, list[int]] = {}

    # -- construction ------------------------------------------------------

    def add_node(self, labels, props=None, ast=None) -> CpgNode:
        node = CpgNode(self._next_node, set(labels), dict(props or {}), ast)
        self._next_node += 1
        self.nodes[node.id] = node
        self._out[node.id] = []
        self._in[node.id] = []
        for label in node.labels:
            self.index.setdefault(label, set()).add(node.id)
        if ast is not None:
            self._by_ast[id(ast)] = node.id
        return node

    def add_label(self, node_id: int, label: Label) -> bool:
        node = self.nodes[node_id]
        if label in node.labels:
            return False
        node.labels.add(label)
        self.index.setdefault(label, set()).add(node_id)
        return True

    def add_edge(self, kind: EdgeKind, src: int, dst: int, props=None) -> CpgEdge:
        if src not in self.nodes or dst not in self.nodes:
            raise MiniSolError(f"edge endpoints must exist: {src} -> {dst}")
        edge = CpgEdge(self._next_edge, kind, src, dst, dict(props or {}))
        self._next_edge += 1
        self.edges[edge.id] = edge
        self._out[src].append(edge.id)
        self._in[dst].append(edge.id)
        return edge

    # -- queries -------------------------------------------------------------

    def node_for(self, ast_node) -> CpgNode:
        return self.nodes[self._by_ast[id(ast_node)]]

    def has_node_for(self, ast_node) -> bool:
        return id(ast_node) in self._by_ast

    def with_label(self, label: Label):
        for node_id in sorted(self.index.get(label, ())):
            yield self.nodes[node_id]

    def out_edges(self, node_id: int, kinds=None):
        for eid in self._out[node_id]:
            e = self.edges[eid]
            if kinds is None or e.kind in kinds:
                yield e

    def in_edges(self, node_id: int, kinds=None):
        for eid in self._in[node_id]:
            e = self.edges[eid]
            if kinds is None or e.kind in kinds:
                yield e

    def has_edge(self, kind: EdgeKind, src: int, dst: int) -> bool:
        return any(e.dst == dst for e in self.out_edges(src, (kind,)))

    def to_dot(self) -> str:
        lines = ["digraph cpg {"]
        for node in self.nodes.values():
            labels = "|".join(sorted(l.value for l in node.labels))
            name = node.props.get("name", node.props.get("kind", ""))
            text = f"{node.id}: {labels}" + (f"\\n{name}" if name else "")
            lines.append(f'  n{node.id} [label="{text}"];')
        for edge in self.edges.values():
            lines.append(f'  n{edge.src} -> n{edge.dst} [label="{edge.kind.value}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Phase 1a: AST sub-graph
# ---------------------------------------------------------------------------


def build_cpg(unit: SourceUnit) -> Cpg:
    cpg = Cpg(unit)
    for contract in unit.contracts:
        c_node = cpg.add_node([Label.Contract], {"name": contract.name}, contract)
        for sv in contract.state_vars:
            _add_var(cpg, c_node.id, sv, state=True)
        members = ([contract.constructor] if contract.constructor else []) + list(contract.functions)
        for fn in members:
            _add_function(cpg, c_node.id, fn)
    return cpg


def _add_var(cpg: Cpg, parent: int, decl: VarDecl, state: bool, stmt: int = None, fn: int = None) -> CpgNode:
    labels = [Label.Variable, Label.StateVariable if state else Label.LocalVariable]
    props = {"name": decl.name}
    if stmt is not None:
        props["stmt"] = stmt
    if fn is not None:
        props["fn"] = fn
    node = cpg.add_node(labels, props, decl)
    if decl.is_patch:
        cpg.add_label(node.id, Label.Patch)
    cpg.add_edge(EdgeKind.AstChild, parent, node.id)
    if decl.init is not None:
        _add_expr(cpg, node.id, decl.init, stmt=stmt, fn=fn)
    return node


def _add_function(cpg: Cpg, contract_node: int, fn: FunctionDecl) -> CpgNode:
    node = cpg.add_node(
        [Label.Function],
        {
            "name": fn.name,
            "visibility": fn.visibility,
            "is_constructor": fn.is_constructor,
            "is_payable": fn.is_payable,
            "contract": contract_node,
        },
        fn,
    )
    cpg.add_edge(EdgeKind.AstChild, contract_node, node.id)
    for p in fn.params:
        _add_var(cpg, node.id, p, state=False, fn=node.id)
    if fn.body is not None:
        for stmt in fn.body.statements:
            _add_stmt(cpg, node.id, stmt, fn_node=node.id)
    return node


def _add_stmt(cpg: Cpg, parent: int, stmt: Stmt, fn_node: int) -> CpgNode:
    node = cpg.add_node([Label.Statement], {"kind": type(stmt).__name__, "fn": fn_node, "line": stmt.span.line}, stmt)
    if stmt.is_patch:
        cpg.add_label(node.id, Label.Patch)
    cpg.add_edge(EdgeKind.AstChild, parent, node.id)
    if isinstance(stmt, DeclStmt):
        _add_var(cpg, node.id, stmt.decl, state=False, stmt=node.id, fn=fn_node)
    elif isinstance(stmt, AssignStmt):
        _add_expr(cpg, node.id, stmt.lhs, node.id, fn_node)
        _add_expr(cpg, node.id, stmt.rhs, node.id, fn_node)
    elif isinstance(stmt, ExprStmt):
        _add_expr(cpg, node.id, stmt.expr, node.id, fn_node)
    elif isinstance(stmt, IfStmt):
        _add_expr(cpg, node.id, stmt.cond, node.id, fn_node)
        for s in stmt.then_block.statements:
            _add_stmt(cpg, node.id, s, fn_node)
        if stmt.else_block is not None:
            for s in stmt.else_block.statements:
                _add_stmt(cpg, node.id, s, fn_node)
    elif isinstance(stmt, WhileStmt):
        _add_expr(cpg, node.id, stmt.cond, node.id, fn_node)
        for s in stmt.body.statements:
            _add_stmt(cpg, node.id, s, fn_node)
    elif isinstance(stmt, ForStmt):
        if stmt.init is not None:
            _add_stmt(cpg, node.id, stmt.init, fn_node)
        if stmt.cond is not None:
            _add_expr(cpg, node.id, stmt.cond, node.id, fn_node)
        if stmt.step is not None:
            _add_stmt(cpg, node.id, stmt.step, fn_node)
        for s in stmt.body.statements:
            _add_stmt(cpg, node.id, s, fn_node)
    elif isinstance(stmt, ReturnStmt):
        if stmt.value is not None:
            _add_expr(cpg, node.id, stmt.value, node.id, fn_node)
    elif isinstance(stmt, (RequireStmt, AssertStmt)):
        _add_expr(cpg, node.id, stmt.cond, node.id, fn_node)
    else:
        raise AssertionError(f"unknown statement {stmt!r}")
    return node


def _add_expr(cpg: Cpg, parent: int, expr: Expr, stmt: int, fn: int) -> CpgNode:
    props = {"kind": type(expr).__name__, "stmt": stmt, "fn": fn, "line": expr.span.line, "col": expr.span.col}
    if isinstance(expr, Ident):
        props["name"] = expr.name
    node = cpg.add_node([Label.Expression], props, expr)
    cpg.add_edge(EdgeKind.AstChild, parent, node.id)
    for child in children(expr):
        _add_expr(cpg, node.id, child, stmt, fn)
    return node


# ---------------------------------------------------------------------------
# Phase 1b: reference resolution
# ---------------------------------------------------------------------------


def resolve_references(cpg: Cpg) -> Cpg:
    """RefersTo edges for identifiers, CallsTo edges for resolvable calls."""
    from .errors import SourceError
    from .errors import Diagnostic

    for node in list(cpg.with_label(Label.Expression)):
        ast = node.ast
        if isinstance(ast, Ident):
            if ast.decl is None:
                raise SourceError([Diagnostic("NameError", ast.span.line, ast.span.col, f"unresolved identifier {ast.name}")])
            if cpg.has_node_for(ast.decl):
                cpg.add_edge(EdgeKind.RefersTo, node.id, cpg.node_for(ast.decl).id)
        elif isinstance(ast, CallInternal):
            if ast.decl is not None and cpg.has_node_for(ast.decl):
                cpg.add_edge(EdgeKind.CallsTo, node.id, cpg.node_for(ast.decl).id)
        elif isinstance(ast, CallExternal):
            # implemented target in this unit: inter-contract control flow is known
            if ast.decl is not None and ast.decl.body is not None and cpg.has_node_for(ast.decl):
                cpg.add_edge(EdgeKind.CallsTo, node.id, cpg.node_for(ast.decl).id)
        elif isinstance(ast, NewExpr):
            target = ast.decl
            if target is not None and target.constructor is not None and cpg.has_node_for(target.constructor):
                cpg.add_edge(EdgeKind.CallsTo, node.id, cpg.node_for(target.constructor).id)
        elif isinstance(ast, MemberExpr):
            if ast.decl is not None and cpg.has_node_for(ast.decl):
                cpg.add_edge(EdgeKind.RefersTo, node.id, cpg.node_for(ast.decl).id)
    return cpg


# ---------------------------------------------------------------------------
# Phase 1c: control flow
# ---------------------------------------------------------------------------


def add_control_flow(cpg: Cpg) -> Cpg:
    for fn_node in list(cpg.with_label(Label.Function)):
        fn: FunctionDecl = fn_node.ast
        if fn is None or fn.body is None:
            continue
        _FnWiring(cpg, fn_node.id).wire(fn.body.statements)
    return cpg


class _FnWiring:
    def __init__(self, cpg: Cpg, fn_node: int):
        self.cpg = cpg
        self.fn_node = fn_node
        self.exit_node = None

    def exit(self) -> int:
        if self.exit_node is None:
            node = self.cpg.add_node([Label.Statement], {"kind": "FunctionExit", "fn": self.fn_node})
            self.exit_node = node.id
        return self.exit_node

    def anchor(self, stmt: Stmt) -> int:
        """CFG entry node of a statement (a for-loop enters through its init)."""
        if isinstance(stmt, ForStmt) and stmt.init is not None:
            return self.cpg.node_for(stmt.init).id
        return self.cpg.node_for(stmt).id

    def wire(self, stmts, after=None):
        """`after` is (node_id_or_callable, EdgeKind) applied to tail flow."""
        for i, stmt in enumerate(stmts):
            if i + 1 < len(stmts):
                succ = (self.anchor(stmts[i + 1]), EdgeKind.Next)
            else:
                succ = after
            self.wire_one(stmt, succ)

    def resolve(self, succ):
        node, kind = succ
        return (node() if callable(node) else node), kind

    def edge_to(self, src: int, succ):
        if succ is None:
            return
        dst, kind = self.resolve(succ)
        self.cpg.add_edge(kind, src, dst)

    def wire_one(self, stmt: Stmt, succ):
        node = self.cpg.node_for(stmt).id
        if isinstance(stmt, ReturnStmt):
            return  # no outgoing control flow
        if isinstance(stmt, IfStmt):
            then_stmts = stmt.then_block.statements
            if then_stmts:
                self.cpg.add_edge(EdgeKind.CondTrue, node, self.anchor(then_stmts[0]))
                self.wire(then_stmts, after=succ)
            elif succ is not None:
                dst, _ = self.resolve(succ)
                self.cpg.add_edge(EdgeKind.CondTrue, node, dst)
            else:
                self.cpg.add_edge(EdgeKind.CondTrue, node, self.exit())
            else_stmts = stmt.else_block.statements if stmt.else_block is not None else []
            if else_stmts:
                self.cpg.add_edge(EdgeKind.CondFalse, node, self.anchor(else_stmts[0]))
                self.wire(else_stmts, after=succ)
            else:
                # missing else: false branch falls through to the statement
                # after the if, or to the synthetic exit if the if is last
                if succ is not None:
                    dst, _ = self.resolve(succ)
                    self.cpg.add_edge(EdgeKind.CondFalse, node, dst)
                else:
                    self.cpg.add_edge(EdgeKind.CondFalse, node, self.exit())
            return
        if isinstance(stmt, WhileStmt):
            body = stmt.body.statements
            if body:
                self.cpg.add_edge(EdgeKind.LoopBody, node, self.anchor(body[0]))
                self.wire(body, after=(node, EdgeKind.LoopBack))
            self.edge_to(node, succ)
            return
        if isinstance(stmt, ForStmt):
            if stmt.init is not None:
                init_node = self.cpg.node_for(stmt.init).id
                self.cpg.add_edge(EdgeKind.Next, init_node, node)
            body = stmt.body.statements
            step_succ = (node, EdgeKind.LoopBack)
            if stmt.step is not None:
                step_node = self.cpg.node_for(stmt.step).id
                self.cpg.add_edge(EdgeKind.LoopBack, step_node, node)
                step_succ = (step_node, EdgeKind.Next)
            if body:
                self.cpg.add_edge(EdgeKind.LoopBody, node, self.anchor(body[0]))
                self.wire(body, after=step_succ)
            elif stmt.step is not None:
                self.cpg.add_edge(EdgeKind.LoopBody, node, self.cpg.node_for(stmt.step).id)
            self.edge_to(node, succ)
            return
        self.edge_to(node, succ)


def cfg_reachable(cpg: Cpg, from_node: int, to_node: int) -> bool:
    """True iff a non-empty control-flow path leads from one statement to another."""
    for node_id in (from_node, to_node):
        node = cpg.nodes.get(node_id)
        if node is None or Label.Statement not in node.labels:
            raise DomainError(f"node {node_id} is not a statement")
    a, b = cpg.nodes[from_node], cpg.nodes[to_node]
    if a.props.get("fn") != b.props.get("fn"):
        raise DomainError("statements belong to different functions")
    seen = set()
    frontier = [e.dst for e in cpg.out_edges(from_node, CFG_KINDS)]
    while frontier:
        nxt = frontier.pop()
        if nxt == to_node:
            return True
        if nxt in seen:
            continue
        seen.add(nxt)
        frontier.extend(e.dst for e in cpg.out_edges(nxt, CFG_KINDS))
    return False
