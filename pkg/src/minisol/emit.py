"""Canonical pretty-printer.

Original formatting is not preserved; only the pragma line is reproduced
verbatim.  Nested binary expressions of differing precedence classes are
always parenthesized, so synthesized check expressions re-parse exactly as
built.  Emitting is idempotent: emit(parse(emit(x))) == emit(x) byte for
byte.
"""

from __future__ import annotations

from dataclasses import dataclass

from .nodes import (
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
    AddressLit,
    LowLevelCall,
    MemberExpr,
    MsgSender,
    MsgValue,
    NewExpr,
    RequireStmt,
    ReturnStmt,
    SourceUnit,
    TransferExpr,
    UnaryExpr,
    VarDecl,
    WhileStmt,
    type_to_str,
)

_PRECEDENCE = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 4,
    "<=": 4,
    ">": 4,
    ">=": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
    "**": 7,
}


@dataclass
class EmitConfig:
    indent_width: int = 2
    mark_patches: bool = False

    def __post_init__(self):
        if self.indent_width < 1:
            raise ValueError("indent_width must be >= 1")


def emit_source(cpg, cfg: EmitConfig = None) -> str:
    """Emit the (possibly hardened) AST carried by a CPG."""
    return emit_unit(cpg.unit, cfg)


def emit_unit(unit: SourceUnit, cfg: EmitConfig = None) -> str:
    return _Emitter(cfg or EmitConfig()).unit(unit)


class _Emitter:
    def __init__(self, cfg: EmitConfig):
        self.cfg = cfg
        self.lines: list[str] = []
        self.depth = 0

    def line(self, text: str, patched: bool = False):
        if not text:
            self.lines.append("")
            return
        marker = " /* HCC */" if (patched and self.cfg.mark_patches) else ""
        self.lines.append(" " * (self.cfg.indent_width * self.depth) + text + marker)

    def unit(self, unit: SourceUnit) -> str:
        if unit.pragma_text:
            self.line(unit.pragma_text)
            self.line("")
        for i, contract in enumerate(unit.contracts):
            if i > 0:
                self.line("")
            self.contract(contract)
        return "\n".join(self.lines) + "\n" if self.lines else ""

    def contract(self, contract: ContractDecl):
        prefix = "abstract " if contract.is_abstract else ""
        self.line(f"{prefix}contract {contract.name} {{")
        self.depth += 1
        for sv in contract.state_vars:
            self.line(self.var_decl(sv) + ";", patched=sv.is_patch)
        members = ([contract.constructor] if contract.constructor else []) + list(contract.functions)
        for i, fn in enumerate(members):
            if i > 0 or contract.state_vars:
                self.line("")
            self.function(fn)
        self.depth -= 1
        self.line("}")

    def var_decl(self, decl: VarDecl) -> str:
        text = f"{type_to_str(decl.ty)} {decl.name}"
        if decl.init is not None:
            text += f" = {self.expr(decl.init)}"
        return text

    def function(self, fn: FunctionDecl):
        params = ", ".join(f"{type_to_str(p.ty)} {p.name}" for p in fn.params)
        if fn.is_constructor:
            head = f"constructor({params}) public"
        else:
            head = "virtual " if fn.is_virtual else ""
            head += f"function {fn.name}({params}) {fn.visibility}"
            if fn.is_payable:
                head += " payable"
            if fn.returns_type is not None:
                head += f" returns ({type_to_str(fn.returns_type)})"
        if fn.body is None:
            self.line(head + ";")
            return
        self.line(head + " {")
        self.depth += 1
        for stmt in fn.body.statements:
            self.stmt(stmt)
        self.depth -= 1
        self.line("}")

    def block_body(self, block: Block):
        self.depth += 1
        for stmt in block.statements:
            self.stmt(stmt)
        self.depth -= 1

    def stmt(self, stmt):
        if isinstance(stmt, DeclStmt):
            self.line(self.var_decl(stmt.decl) + ";", patched=stmt.is_patch or stmt.decl.is_patch)
        elif isinstance(stmt, AssignStmt):
            self.line(self.inline_stmt(stmt) + ";", patched=stmt.is_patch)
        elif isinstance(stmt, ExprStmt):
            self.line(self.expr(stmt.expr) + ";", patched=stmt.is_patch)
        elif isinstance(stmt, IfStmt):
            self.line(f"if ({self.expr(stmt.cond)}) {{", patched=stmt.is_patch)
            self.block_body(stmt.then_block)
            if stmt.else_block is not None:
                self.line("} else {")
                self.block_body(stmt.else_block)
            self.line("}")
        elif isinstance(stmt, WhileStmt):
            self.line(f"while ({self.expr(stmt.cond)}) {{", patched=stmt.is_patch)
            self.block_body(stmt.body)
            self.line("}")
        elif isinstance(stmt, ForStmt):
            init = self.inline_stmt(stmt.init) if stmt.init is not None else ""
            cond = self.expr(stmt.cond) if stmt.cond is not None else ""
            step = self.inline_stmt(stmt.step) if stmt.step is not None else ""
            self.line(f"for ({init}; {cond}; {step}) {{", patched=stmt.is_patch)
            self.block_body(stmt.body)
            self.line("}")
        elif isinstance(stmt, ReturnStmt):
            text = "return;" if stmt.value is None else f"return {self.expr(stmt.value)};"
            self.line(text, patched=stmt.is_patch)
        elif isinstance(stmt, RequireStmt):
            if stmt.message is None:
                self.line(f"require({self.expr(stmt.cond)});", patched=stmt.is_patch)
            else:
                self.line(f"require({self.expr(stmt.cond)}, {self.string(stmt.message)});", patched=stmt.is_patch)
        elif isinstance(stmt, AssertStmt):
            self.line(f"assert({self.expr(stmt.cond)});", patched=stmt.is_patch)
        else:
            raise AssertionError(f"unknown statement {stmt!r}")

    def inline_stmt(self, stmt) -> str:
        """Statement text without ';' or indentation, for for-headers."""
        if isinstance(stmt, DeclStmt):
            return self.var_decl(stmt.decl)
        if isinstance(stmt, AssignStmt):
            return f"{self.expr(stmt.lhs)} {stmt.op} {self.expr(stmt.rhs)}"
        if isinstance(stmt, ExprStmt):
            return self.expr(stmt.expr)
        raise AssertionError(f"statement not printable inline: {stmt!r}")

    def string(self, value: str) -> str:
        escaped = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
        return f'"{escaped}"'

    # -- expressions -----------------------------------------------------------

    def expr(self, e) -> str:
        if isinstance(e, IntLit):
            return str(e.value)
        if isinstance(e, BoolLit):
            return "true" if e.value else "false"
        if isinstance(e, AddressLit):
            return f"0x{e.value:x}"
        if isinstance(e, MsgSender):
            return "msg.sender"
        if isinstance(e, MsgValue):
            return "msg.value"
        if isinstance(e, Ident):
            return e.name
        if isinstance(e, IndexExpr):
            return f"{self.postfix_base(e.base)}[{self.expr(e.key)}]"
        if isinstance(e, MemberExpr):
            return f"{self.postfix_base(e.base)}.{e.field_name}"
        if isinstance(e, BinaryExpr):
            return self.binary(e)
        if isinstance(e, UnaryExpr):
            if e.op in ("++", "--"):
                return f"{self.postfix_base(e.operand)}{e.op}"
            operand = self.expr(e.operand)
            if isinstance(e.operand, BinaryExpr) or (isinstance(e.operand, UnaryExpr) and e.operand.op == e.op):
                operand = f"({operand})"
            return f"{e.op}{operand}"
        if isinstance(e, CastExpr):
            return f"{type_to_str(e.target_type)}({self.expr(e.operand)})"
        if isinstance(e, CallInternal):
            return f"{e.fn_name}({self.args(e.args)})"
        if isinstance(e, CallExternal):
            target = self.postfix_base(e.target)
            if e.attached_value is not None:
                return f"{target}.{e.fn_name}.value({self.expr(e.attached_value)})({self.args(e.args)})"
            return f"{target}.{e.fn_name}({self.args(e.args)})"
        if isinstance(e, LowLevelCall):
            target = self.postfix_base(e.target)
            if e.attached_value is not None:
                return f'{target}.call.value({self.expr(e.attached_value)})("")'
            return f'{target}.call("")'
        if isinstance(e, DelegateCall):
            return f"{self.postfix_base(e.target)}.delegatecall({self.args(e.args)})"
        if isinstance(e, TransferExpr):
            return f"{self.postfix_base(e.target)}.transfer({self.expr(e.amount)})"
        if isinstance(e, NewExpr):
            return f"new {e.contract_name}({self.args(e.args)})"
        raise AssertionError(f"unknown expression {e!r}")

    def args(self, exprs) -> str:
        return ", ".join(self.expr(a) for a in exprs)

    def postfix_base(self, e) -> str:
        text = self.expr(e)
        if isinstance(e, (BinaryExpr, UnaryExpr, CastExpr)):
            return f"({text})"
        return text

    def binary(self, e: BinaryExpr) -> str:
        prec = _PRECEDENCE[e.op]
        right_assoc = e.op == "**"

        def side(child, is_right: bool) -> str:
            text = self.expr(child)
            if isinstance(child, BinaryExpr):
                child_prec = _PRECEDENCE[child.op]
                if child_prec != prec:
                    return f"({text})"
                # same class: parenthesize against the associativity direction
                if right_assoc and not is_right:
                    return f"({text})"
                if not right_assoc and is_right:
                    return f"({text})"
            return text

        return f"{side(e.lhs, False)} {e.op} {side(e.rhs, True)}"
