"""AST document format: import/export of parsed units as JSON.

One object per AST node, {kind, span:{line,col,len}, children:[...],
attrs:{...}}, attrs keys sorted lexicographically.  Optional child slots are
encoded as nulls so documents decode positionally.  Mirrors the ingestion
path of a compiler-emitted AST: `json_to_ast` re-runs resolution and typing
on the decoded tree.
"""

from __future__ import annotations

import json

from .errors import Diagnostic, SchemaError, SourceError
from .nodes import (
    AddressLit,
    AssertStmt,
    AssignStmt,
    BinaryExpr,
    Block,
    BoolLit,
    CallExternal,
    CallInternal,
    CastExpr,
    ContractDecl,
    DeclStmt,
    DelegateCall,
    ExprStmt,
    ForStmt,
    FunctionDecl,
    Ident,
    IfStmt,
    IndexExpr,
    IntLit,
    LowLevelCall,
    MemberExpr,
    MsgSender,
    MsgValue,
    NewExpr,
    RequireStmt,
    ReturnStmt,
    SourceUnit,
    Span,
    TransferExpr,
    UnaryExpr,
    VarDecl,
    WhileStmt,
    type_from_str,
    type_to_str,
)


def ast_to_json(unit: SourceUnit) -> str:
    return json.dumps(_enc(unit), sort_keys=True, indent=1)


def json_to_ast(doc: str) -> SourceUnit:
    try:
        data = json.loads(doc)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"not valid JSON: {exc}") from None
    unit = _Decoder().unit(data)
    from .checker import check_unit

    diags = check_unit(unit)
    if diags:
        raise SourceError(diags)
    return unit


# -- encoding ----------------------------------------------------------------


def _span(node) -> dict:
    s = getattr(node, "span", None) or Span(0, 0, 0)
    return {"line": s.line, "col": s.col, "len": s.length}


def _obj(node, kind: str, children: list, **attrs) -> dict:
    if getattr(node, "is_patch", False):
        attrs["patch"] = True
    return {"kind": kind, "span": _span(node), "children": children, "attrs": attrs}


def _enc(node):
    if node is None:
        return None
    if isinstance(node, SourceUnit):
        return _obj(node, "Unit", [_enc(c) for c in node.contracts], source_name=node.source_name, pragma=node.pragma_text)
    if isinstance(node, ContractDecl):
        members = [_enc(v) for v in node.state_vars] + [_enc(node.constructor)] + [_enc(f) for f in node.functions]
        return _obj(node, "Contract", members, name=node.name, abstract=node.is_abstract, state_vars=len(node.state_vars))
    if isinstance(node, VarDecl):
        return _obj(node, "Var", [_enc(node.init)], name=node.name, type=type_to_str(node.ty), storage=node.storage_class)
    if isinstance(node, FunctionDecl):
        return _obj(
            node,
            "Function",
            [_enc(p) for p in node.params] + [_enc(node.body)],
            name=node.name,
            visibility=node.visibility,
            payable=node.is_payable,
            constructor=node.is_constructor,
            virtual=node.is_virtual,
            returns=type_to_str(node.returns_type) if node.returns_type is not None else "",
        )
    if isinstance(node, Block):
        return _obj(node, "Block", [_enc(s) for s in node.statements])
    if isinstance(node, DeclStmt):
        return _obj(node, "Decl", [_enc(node.decl)])
    if isinstance(node, AssignStmt):
        return _obj(node, "Assign", [_enc(node.lhs), _enc(node.rhs)], op=node.op)
    if isinstance(node, ExprStmt):
        return _obj(node, "ExprStmt", [_enc(node.expr)])
    if isinstance(node, IfStmt):
        return _obj(node, "If", [_enc(node.cond), _enc(node.then_block), _enc(node.else_block)])
    if isinstance(node, WhileStmt):
        return _obj(node, "While", [_enc(node.cond), _enc(node.body)])
    if isinstance(node, ForStmt):
        return _obj(node, "For", [_enc(node.init), _enc(node.cond), _enc(node.step), _enc(node.body)])
    if isinstance(node, ReturnStmt):
        return _obj(node, "Return", [_enc(node.value)])
    if isinstance(node, RequireStmt):
        return _obj(node, "Require", [_enc(node.cond)], message=node.message)
    if isinstance(node, AssertStmt):
        return _obj(node, "Assert", [_enc(node.cond)])
    if isinstance(node, IntLit):
        return _obj(node, "Literal", [], value=str(node.value), literal="int")
    if isinstance(node, BoolLit):
        return _obj(node, "Literal", [], value="true" if node.value else "false", literal="bool")
    if isinstance(node, AddressLit):
        return _obj(node, "Literal", [], value=f"0x{node.value:x}", literal="address")
    if isinstance(node, Ident):
        return _obj(node, "Ident", [], name=node.name)
    if isinstance(node, IndexExpr):
        return _obj(node, "Index", [_enc(node.base), _enc(node.key)])
    if isinstance(node, MemberExpr):
        return _obj(node, "Member", [_enc(node.base)], field=node.field_name)
    if isinstance(node, BinaryExpr):
        return _obj(node, "Binary", [_enc(node.lhs), _enc(node.rhs)], op=node.op)
    if isinstance(node, UnaryExpr):
        return _obj(node, "Unary", [_enc(node.operand)], op=node.op)
    if isinstance(node, CastExpr):
        return _obj(node, "Cast", [_enc(node.operand)], type=type_to_str(node.target_type))
    if isinstance(node, CallInternal):
        return _obj(node, "CallInternal", [_enc(a) for a in node.args], fn=node.fn_name)
    if isinstance(node, CallExternal):
        return _obj(node, "CallExternal", [_enc(node.target), _enc(node.attached_value)] + [_enc(a) for a in node.args], fn=node.fn_name)
    if isinstance(node, LowLevelCall):
        return _obj(node, "LowLevelCall", [_enc(node.target), _enc(node.attached_value)])
    if isinstance(node, DelegateCall):
        return _obj(node, "DelegateCall", [_enc(node.target)] + [_enc(a) for a in node.args])
    if isinstance(node, TransferExpr):
        return _obj(node, "Transfer", [_enc(node.target), _enc(node.amount)])
    if isinstance(node, NewExpr):
        return _obj(node, "New", [_enc(a) for a in node.args], contract=node.contract_name)
    if isinstance(node, MsgSender):
        return _obj(node, "MsgSender", [])
    if isinstance(node, MsgValue):
        return _obj(node, "MsgValue", [])
    raise AssertionError(f"unknown node {node!r}")


# -- decoding ----------------------------------------------------------------


class _Decoder:
    def __init__(self):
        self.path = ["$"]

    def fail(self, message: str):
        raise SchemaError("/".join(self.path), message)

    def node(self, data, expect=None):
        if not isinstance(data, dict):
            self.fail("expected an object")
        for key in ("kind", "span", "children", "attrs"):
            if key not in data:
                self.fail(f"missing field {key!r}")
        kind = data["kind"]
        if expect is not None and kind not in expect:
            self.fail(f"expected {expect}, found {kind!r}")
        return kind, self.span(data["span"]), data["children"], data["attrs"]

    def span(self, data) -> Span:
        if not isinstance(data, dict) or not all(k in data for k in ("line", "col", "len")):
            self.fail("bad span")
        return Span(data["line"], data["col"], data["len"])

    def attr(self, attrs, name, types):
        if name not in attrs:
            self.fail(f"missing attr {name!r}")
        value = attrs[name]
        if not isinstance(value, types):
            self.fail(f"attr {name!r} has wrong type")
        return value

    def child(self, children, idx, decode, optional=False):
        if idx >= len(children):
            self.fail(f"missing child {idx}")
        if children[idx] is None:
            if optional:
                return None
            self.fail(f"child {idx} must not be null")
        self.path.append(str(idx))
        try:
            return decode(children[idx])
        finally:
            self.path.pop()

    def ty(self, text: str):
        try:
            return type_from_str(text)
        except ValueError as exc:
            self.fail(str(exc))

    def unit(self, data) -> SourceUnit:
        kind, _, children, attrs = self.node(data, expect=("Unit",))
        unit = SourceUnit(
            pragma_text=self.attr(attrs, "pragma", str),
            source_name=self.attr(attrs, "source_name", str),
        )
        for i in range(len(children)):
            unit.contracts.append(self.child(children, i, self.contract))
        return unit

    def contract(self, data) -> ContractDecl:
        kind, span, children, attrs = self.node(data, expect=("Contract",))
        n_vars = self.attr(attrs, "state_vars", int)
        c = ContractDecl(
            name=self.attr(attrs, "name", str),
            is_abstract=self.attr(attrs, "abstract", bool),
            span=span,
        )
        if n_vars + 1 > len(children):
            self.fail("contract children shorter than declared state_vars")
        for i in range(n_vars):
            c.state_vars.append(self.child(children, i, self.var))
        c.constructor = self.child(children, n_vars, self.function, optional=True)
        for i in range(n_vars + 1, len(children)):
            c.functions.append(self.child(children, i, self.function))
        return c

    def var(self, data) -> VarDecl:
        kind, span, children, attrs = self.node(data, expect=("Var",))
        decl = VarDecl(
            name=self.attr(attrs, "name", str),
            ty=self.ty(self.attr(attrs, "type", str)),
            storage_class=self.attr(attrs, "storage", str),
            span=span,
            is_patch=bool(attrs.get("patch", False)),
        )
        if decl.storage_class not in ("state", "local"):
            self.fail("storage must be 'state' or 'local'")
        decl.init = self.child(children, 0, self.expr, optional=True) if children else None
        return decl

    def function(self, data) -> FunctionDecl:
        kind, span, children, attrs = self.node(data, expect=("Function",))
        returns = self.attr(attrs, "returns", str)
        fn = FunctionDecl(
            name=self.attr(attrs, "name", str),
            visibility=self.attr(attrs, "visibility", str),
            is_payable=self.attr(attrs, "payable", bool),
            is_constructor=self.attr(attrs, "constructor", bool),
            is_virtual=self.attr(attrs, "virtual", bool),
            returns_type=self.ty(returns) if returns else None,
            span=span,
        )
        if fn.visibility not in ("public", "internal"):
            self.fail("visibility must be 'public' or 'internal'")
        if not children:
            self.fail("function needs at least a body slot")
        for i in range(len(children) - 1):
            fn.params.append(self.child(children, i, self.var))
        fn.body = self.child(children, len(children) - 1, self.block, optional=True)
        return fn

    def block(self, data) -> Block:
        kind, span, children, attrs = self.node(data, expect=("Block",))
        b = Block(span=span)
        for i in range(len(children)):
            b.statements.append(self.child(children, i, self.stmt))
        return b

    def stmt(self, data):
        kind, span, children, attrs = self.node(data)
        patch = bool(attrs.get("patch", False))
        if kind == "Decl":
            return DeclStmt(decl=self.child(children, 0, self.var), span=span, is_patch=patch)
        if kind == "Assign":
            op = self.attr(attrs, "op", str)
            if op not in ("=", "+=", "-="):
                self.fail(f"bad assignment operator {op!r}")
            return AssignStmt(
                lhs=self.child(children, 0, self.expr), op=op, rhs=self.child(children, 1, self.expr), span=span, is_patch=patch
            )
        if kind == "ExprStmt":
            return ExprStmt(expr=self.child(children, 0, self.expr), span=span, is_patch=patch)
        if kind == "If":
            return IfStmt(
                cond=self.child(children, 0, self.expr),
                then_block=self.child(children, 1, self.block),
                else_block=self.child(children, 2, self.block, optional=True),
                span=span,
                is_patch=patch,
            )
        if kind == "While":
            return WhileStmt(cond=self.child(children, 0, self.expr), body=self.child(children, 1, self.block), span=span, is_patch=patch)
        if kind == "For":
            return ForStmt(
                init=self.child(children, 0, self.stmt, optional=True),
                cond=self.child(children, 1, self.expr, optional=True),
                step=self.child(children, 2, self.stmt, optional=True),
                body=self.child(children, 3, self.block),
                span=span,
                is_patch=patch,
            )
        if kind == "Return":
            return ReturnStmt(value=self.child(children, 0, self.expr, optional=True), span=span, is_patch=patch)
        if kind == "Require":
            message = attrs.get("message")
            if message is not None and not isinstance(message, str):
                self.fail("message must be a string or null")
            return RequireStmt(cond=self.child(children, 0, self.expr), message=message, span=span, is_patch=patch)
        if kind == "Assert":
            return AssertStmt(cond=self.child(children, 0, self.expr), span=span, is_patch=patch)
        self.fail(f"unknown statement kind {kind!r}")

    def expr(self, data):
        kind, span, children, attrs = self.node(data)
        if kind == "Literal":
            text = self.attr(attrs, "value", str)
            lit = self.attr(attrs, "literal", str)
            if lit == "int":
                if not (text.isdigit() or (text.startswith("-") and text[1:].isdigit())):
                    self.fail(f"bad int literal {text!r}")
                return IntLit(value=int(text), span=span)
            if lit == "bool":
                if text not in ("true", "false"):
                    self.fail(f"bad bool literal {text!r}")
                return BoolLit(value=text == "true", span=span)
            if lit == "address":
                if not text.startswith("0x"):
                    self.fail(f"bad address literal {text!r}")
                return AddressLit(value=int(text, 16), span=span)
            self.fail(f"unknown literal class {lit!r}")
        if kind == "Ident":
            return Ident(name=self.attr(attrs, "name", str), span=span)
        if kind == "Index":
            return IndexExpr(base=self.child(children, 0, self.expr), key=self.child(children, 1, self.expr), span=span)
        if kind == "Member":
            return MemberExpr(base=self.child(children, 0, self.expr), field_name=self.attr(attrs, "field", str), span=span)
        if kind == "Binary":
            return BinaryExpr(
                op=self.attr(attrs, "op", str),
                lhs=self.child(children, 0, self.expr),
                rhs=self.child(children, 1, self.expr),
                span=span,
            )
        if kind == "Unary":
            return UnaryExpr(op=self.attr(attrs, "op", str), operand=self.child(children, 0, self.expr), span=span)
        if kind == "Cast":
            return CastExpr(target_type=self.ty(self.attr(attrs, "type", str)), operand=self.child(children, 0, self.expr), span=span)
        if kind == "CallInternal":
            return CallInternal(
                fn_name=self.attr(attrs, "fn", str), args=[self.child(children, i, self.expr) for i in range(len(children))], span=span
            )
        if kind == "CallExternal":
            return CallExternal(
                target=self.child(children, 0, self.expr),
                attached_value=self.child(children, 1, self.expr, optional=True),
                fn_name=self.attr(attrs, "fn", str),
                args=[self.child(children, i, self.expr) for i in range(2, len(children))],
                span=span,
            )
        if kind == "LowLevelCall":
            return LowLevelCall(
                target=self.child(children, 0, self.expr),
                attached_value=self.child(children, 1, self.expr, optional=True),
                span=span,
            )
        if kind == "DelegateCall":
            return DelegateCall(
                target=self.child(children, 0, self.expr),
                args=[self.child(children, i, self.expr) for i in range(1, len(children))],
                span=span,
            )
        if kind == "Transfer":
            return TransferExpr(target=self.child(children, 0, self.expr), amount=self.child(children, 1, self.expr), span=span)
        if kind == "New":
            return NewExpr(
                contract_name=self.attr(attrs, "contract", str),
                args=[self.child(children, i, self.expr) for i in range(len(children))],
                span=span,
            )
        if kind == "MsgSender":
            return MsgSender(span=span)
        if kind == "MsgValue":
            return MsgValue(span=span)
        self.fail(f"unknown expression kind {kind!r}")
