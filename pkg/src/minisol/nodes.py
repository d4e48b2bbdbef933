"""MiniSol abstract syntax tree.

The AST is the substrate of the whole pipeline: the parser produces it, the
property graph embeds it, hardening splices new statements into it, and the
pretty-printer and interpreter both walk it.  Nodes are plain mutable
dataclasses; cross-cutting annotations (inferred type, declaration links,
patch marking) live on the nodes themselves so later phases never need side
tables.

Equality is structural and explicit (`ast_equal`), never the dataclass
default: derived annotations and source spans must be comparable separately.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Union

INT_WIDTHS = (8, 16, 32, 64, 128, 256)


@dataclass
class Span:
    """Source extent of a node: 1-based line, 0-based column, length in chars.

    `offset` is the absolute character offset of the start; it is excluded
    from equality so that spans survive the JSON document format, which only
    records line/col/len.
    """

    line: int
    col: int
    length: int = 0
    offset: int = field(default=0, compare=False)


def no_span() -> Span:
    """Span for synthesized nodes (patches) before codegen assigns one."""
    return Span(0, 0, 0)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TypeExpr:
    pass


@dataclass(frozen=True)
class IntType(TypeExpr):
    width: int
    signed: bool

    def min_value(self) -> int:
        return -(1 << (self.width - 1)) if self.signed else 0

    def max_value(self) -> int:
        return (1 << (self.width - 1)) - 1 if self.signed else (1 << self.width) - 1

    def contains(self, value: int) -> bool:
        return self.min_value() <= value <= self.max_value()


@dataclass(frozen=True)
class BoolType(TypeExpr):
    pass


@dataclass(frozen=True)
class AddressType(TypeExpr):
    pass


@dataclass(frozen=True)
class MappingType(TypeExpr):
    key: TypeExpr
    value: TypeExpr


@dataclass(frozen=True)
class ContractType(TypeExpr):
    name: str


UINT256 = IntType(256, False)
BOOL = BoolType()
ADDRESS = AddressType()


def type_to_str(ty: TypeExpr) -> str:
    if isinstance(ty, IntType):
        return ("int" if ty.signed else "uint") + str(ty.width)
    if isinstance(ty, BoolType):
        return "bool"
    if isinstance(ty, AddressType):
        return "address"
    if isinstance(ty, MappingType):
        return f"mapping({type_to_str(ty.key)} => {type_to_str(ty.value)})"
    if isinstance(ty, ContractType):
        return ty.name
    raise TypeError(f"unknown type {ty!r}")


def type_from_str(text: str) -> TypeExpr:
    """Inverse of type_to_str, used by the AST document format."""
    text = text.strip()
    if text == "bool":
        return BOOL
    if text == "address":
        return ADDRESS
    if text.startswith("mapping(") and text.endswith(")"):
        inner = text[len("mapping(") : -1]
        depth = 0
        for i in range(len(inner) - 1):
            ch = inner[i]
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif depth == 0 and inner[i : i + 2] == "=>":
                return MappingType(type_from_str(inner[:i]), type_from_str(inner[i + 2 :]))
        raise ValueError(f"bad mapping type: {text}")
    for prefix, signed in (("uint", False), ("int", True)):
        if text.startswith(prefix):
            digits = text[len(prefix) :]
            if digits == "":
                return IntType(256, signed)
            if digits.isdigit() and int(digits) in INT_WIDTHS:
                return IntType(int(digits), signed)
    if text.isidentifier():
        return ContractType(text)
    raise ValueError(f"bad type: {text}")


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Node:
    """Common base: every node carries a span and a patch flag."""


@dataclass(eq=False)
class Expr(Node):
    pass


@dataclass(eq=False)
class Stmt(Node):
    pass


@dataclass(eq=False)
class VarDecl(Node):
    name: str
    ty: TypeExpr
    storage_class: str  # "state" | "local"
    init: Optional[Expr] = None
    span: Span = field(default_factory=no_span)
    is_patch: bool = False


@dataclass(eq=False)
class Block(Node):
    statements: list[Stmt] = field(default_factory=list)
    span: Span = field(default_factory=no_span)


@dataclass(eq=False)
class FunctionDecl(Node):
    name: str
    visibility: str  # "public" | "internal"
    is_payable: bool
    params: list[VarDecl] = field(default_factory=list)
    returns_type: Optional[TypeExpr] = None
    body: Optional[Block] = None  # None for unimplemented (abstract) functions
    is_constructor: bool = False
    is_virtual: bool = False
    span: Span = field(default_factory=no_span)


@dataclass(eq=False)
class ContractDecl(Node):
    name: str
    is_abstract: bool = False
    state_vars: list[VarDecl] = field(default_factory=list)
    functions: list[FunctionDecl] = field(default_factory=list)
    constructor: Optional[FunctionDecl] = None
    span: Span = field(default_factory=no_span)


@dataclass(eq=False)
class SourceUnit(Node):
    pragma_text: str = ""  # verbatim pragma line, "" if absent
    contracts: list[ContractDecl] = field(default_factory=list)
    source_name: str = "<memory>"


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class DeclStmt(Stmt):
    decl: VarDecl = None
    span: Span = field(default_factory=no_span)
    is_patch: bool = False


@dataclass(eq=False)
class AssignStmt(Stmt):
    lhs: Expr = None  # Ident or Index chain
    op: str = "="  # "=" | "+=" | "-="
    rhs: Expr = None
    span: Span = field(default_factory=no_span)
    is_patch: bool = False


@dataclass(eq=False)
class ExprStmt(Stmt):
    expr: Expr = None
    span: Span = field(default_factory=no_span)
    is_patch: bool = False


@dataclass(eq=False)
class IfStmt(Stmt):
    cond: Expr = None
    then_block: Block = None
    else_block: Optional[Block] = None
    span: Span = field(default_factory=no_span)
    is_patch: bool = False


@dataclass(eq=False)
class WhileStmt(Stmt):
    cond: Expr = None
    body: Block = None
    span: Span = field(default_factory=no_span)
    is_patch: bool = False


@dataclass(eq=False)
class ForStmt(Stmt):
    init: Optional[Stmt] = None  # DeclStmt or AssignStmt
    cond: Optional[Expr] = None
    step: Optional[Stmt] = None  # AssignStmt or ExprStmt
    body: Block = None
    span: Span = field(default_factory=no_span)
    is_patch: bool = False


@dataclass(eq=False)
class ReturnStmt(Stmt):
    value: Optional[Expr] = None
    span: Span = field(default_factory=no_span)
    is_patch: bool = False


@dataclass(eq=False)
class RequireStmt(Stmt):
    cond: Expr = None
    message: Optional[str] = None
    span: Span = field(default_factory=no_span)
    is_patch: bool = False


@dataclass(eq=False)
class AssertStmt(Stmt):
    cond: Expr = None
    span: Span = field(default_factory=no_span)
    is_patch: bool = False


# ---------------------------------------------------------------------------
# Expressions
#
# `ty` is filled by the checker; `decl` is the resolved declaration for
# identifiers and calls.  Neither takes part in structural equality.
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class IntLit(Expr):
    value: int = 0
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None


@dataclass(eq=False)
class BoolLit(Expr):
    value: bool = False
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None


@dataclass(eq=False)
class AddressLit(Expr):
    value: int = 0
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None


@dataclass(eq=False)
class Ident(Expr):
    name: str = ""
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None
    decl: object = None  # VarDecl after resolution


@dataclass(eq=False)
class IndexExpr(Expr):
    base: Expr = None
    key: Expr = None
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None


@dataclass(eq=False)
class MemberExpr(Expr):
    """Contract-function reference `c.f`; only legal as a delegatecall target."""

    base: Expr = None
    field_name: str = ""
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None
    decl: object = None  # FunctionDecl after resolution


@dataclass(eq=False)
class BinaryExpr(Expr):
    op: str = "+"
    lhs: Expr = None
    rhs: Expr = None
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None


@dataclass(eq=False)
class UnaryExpr(Expr):
    op: str = "!"  # "!" | "-" | "++" | "--" (++/-- are postfix)
    operand: Expr = None
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None


@dataclass(eq=False)
class CastExpr(Expr):
    target_type: TypeExpr = None
    operand: Expr = None
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None


@dataclass(eq=False)
class CallInternal(Expr):
    fn_name: str = ""
    args: list[Expr] = field(default_factory=list)
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None
    decl: object = None  # FunctionDecl


@dataclass(eq=False)
class CallExternal(Expr):
    target: Expr = None
    fn_name: str = ""
    args: list[Expr] = field(default_factory=list)
    attached_value: Optional[Expr] = None
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None
    decl: object = None  # FunctionDecl if the callee's source is present


@dataclass(eq=False)
class LowLevelCall(Expr):
    target: Expr = None
    attached_value: Optional[Expr] = None
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None


@dataclass(eq=False)
class DelegateCall(Expr):
    target: Expr = None  # Address expr, or MemberExpr naming a function
    args: list[Expr] = field(default_factory=list)
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None


@dataclass(eq=False)
class TransferExpr(Expr):
    target: Expr = None
    amount: Expr = None
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None


@dataclass(eq=False)
class NewExpr(Expr):
    contract_name: str = ""
    args: list[Expr] = field(default_factory=list)
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None
    decl: object = None  # ContractDecl


@dataclass(eq=False)
class MsgSender(Expr):
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None


@dataclass(eq=False)
class MsgValue(Expr):
    span: Span = field(default_factory=no_span)
    ty: Optional[TypeExpr] = None


# ---------------------------------------------------------------------------
# Structural operations
# ---------------------------------------------------------------------------

_SKIP_FIELDS = {"ty", "decl", "source_name"}


def ast_equal(a, b, with_spans: bool = False) -> bool:
    """Structural equality over two AST fragments.

    Derived annotations (inferred types, resolution links) are ignored;
    spans compare only when `with_spans` is set.
    """
    if type(a) is not type(b):
        return False
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(ast_equal(x, y, with_spans) for x, y in zip(a, b))
    if not dataclasses.is_dataclass(a) or isinstance(a, TypeExpr):
        return a == b
    for f in dataclasses.fields(a):
        if f.name in _SKIP_FIELDS:
            continue
        if f.name == "span":
            if with_spans and getattr(a, "span") != getattr(b, "span"):
                return False
            continue
        if not ast_equal(getattr(a, f.name), getattr(b, f.name), with_spans):
            return False
    return True


def children(node) -> list:
    """Child AST nodes in source order (flattening lists, skipping None)."""
    out = []
    for f in dataclasses.fields(node):
        if f.name in _SKIP_FIELDS or f.name == "span":
            continue
        v = getattr(node, f.name)
        if isinstance(v, Node):
            out.append(v)
        elif isinstance(v, list):
            out.extend(x for x in v if isinstance(x, Node))
    return out


def walk(node):
    """Pre-order traversal of an AST fragment."""
    yield node
    for c in children(node):
        yield from walk(c)


def walk_exprs(node):
    for n in walk(node):
        if isinstance(n, Expr):
            yield n


def is_lvalue(expr: Expr) -> bool:
    if isinstance(expr, Ident):
        return True
    if isinstance(expr, IndexExpr):
        return is_lvalue(expr.base)
    return False


def lvalue_root(expr: Expr) -> Optional[Ident]:
    """The identifier at the bottom of an lvalue chain (`m[k][j]` -> `m`)."""
    while isinstance(expr, IndexExpr):
        expr = expr.base
    return expr if isinstance(expr, Ident) else None


def contains_side_effects(expr: Expr) -> bool:
    """True if re-evaluating the expression could repeat an observable effect.

    Hardening checks re-evaluate operand expressions; operands that call into
    functions or mutate state cannot be safely duplicated.
    """
    for n in walk(expr):
        if isinstance(n, (CallInternal, CallExternal, LowLevelCall, DelegateCall, TransferExpr, NewExpr)):
            return True
        if isinstance(n, UnaryExpr) and n.op in ("++", "--"):
            return True
    return False


def occurs_in(needle: Expr, haystack: Expr) -> bool:
    """True if an expression structurally equal to `needle` occurs in `haystack`."""
    return any(ast_equal(n, needle) for n in walk(haystack))
