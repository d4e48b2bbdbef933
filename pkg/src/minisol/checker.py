"""Name resolution and type annotation for parsed units.

Every expression node leaves here with its `ty` filled in and identifier /
call nodes linked to their declarations; the analyses downstream rely on
both.  Integer literals adopt the type of whatever they meet (declaration,
other operand, parameter); a bare literal is uint256.
"""

from __future__ import annotations

from .errors import Diagnostic
from .nodes import (
    ADDRESS,
    AddressLit,
    AddressType,
    AssertStmt,
    AssignStmt,
    BinaryExpr,
    Block,
    BOOL,
    BoolLit,
    BoolType,
    CallExternal,
    CallInternal,
    CastExpr,
    ContractDecl,
    ContractType,
    DeclStmt,
    DelegateCall,
    Expr,
    ExprStmt,
    ForStmt,
    FunctionDecl,
    Ident,
    IfStmt,
    IndexExpr,
    IntLit,
    IntType,
    LowLevelCall,
    MappingType,
    MemberExpr,
    MsgSender,
    MsgValue,
    NewExpr,
    RequireStmt,
    ReturnStmt,
    SourceUnit,
    TransferExpr,
    TypeExpr,
    UINT256,
    UnaryExpr,
    VarDecl,
    WhileStmt,
    is_lvalue,
    type_to_str,
)

ARITH_OPS = ("+", "-", "*", "/", "**")
CMP_OPS = ("<", "<=", ">", ">=")
EQ_OPS = ("==", "!=")
BOOL_OPS = ("&&", "||")


def check_unit(unit: SourceUnit) -> list[Diagnostic]:
    return Checker(unit).run()


class Checker:
    def __init__(self, unit: SourceUnit):
        self.unit = unit
        self.diags: list[Diagnostic] = []
        self.contracts: dict[str, ContractDecl] = {}
        self.contract: ContractDecl = None
        self.function: FunctionDecl = None
        self.scopes: list[dict[str, VarDecl]] = []

    def run(self) -> list[Diagnostic]:
        for c in self.unit.contracts:
            if c.name in self.contracts:
                self.name_error(c.span, f"duplicate contract name {c.name}")
            self.contracts[c.name] = c
        for c in self.unit.contracts:
            self.check_contract(c)
        return self.diags

    # -- diagnostics ---------------------------------------------------------

    def name_error(self, span, message):
        self.diags.append(Diagnostic("NameError", span.line, span.col, message))

    def type_error(self, span, message):
        self.diags.append(Diagnostic("TypeError", span.line, span.col, message))

    # -- declarations ----------------------------------------------------------

    def check_contract(self, contract: ContractDecl):
        self.contract = contract
        seen_vars = {}
        for sv in contract.state_vars:
            if sv.name in seen_vars:
                self.name_error(sv.span, f"duplicate state variable {sv.name}")
            seen_vars[sv.name] = sv
        seen_fns = {}
        for fn in contract.functions:
            if fn.name in seen_fns:
                self.name_error(fn.span, f"duplicate function {fn.name}")
            seen_fns[fn.name] = fn
        for sv in contract.state_vars:
            if sv.init is not None:
                self.function = None
                self.scopes = [{}]
                self.check_expr(sv.init, expected=sv.ty)
        for fn in list(contract.functions) + ([contract.constructor] if contract.constructor else []):
            self.check_function(fn)

    def check_function(self, fn: FunctionDecl):
        self.function = fn
        self.scopes = [{}]
        for p in fn.params:
            if p.name in self.scopes[0]:
                self.name_error(p.span, f"duplicate parameter {p.name}")
            if isinstance(p.ty, MappingType):
                self.type_error(p.span, "mappings cannot be parameters")
            self.scopes[0][p.name] = p
        if fn.body is None:
            if not self.contract.is_abstract:
                self.type_error(fn.span, f"function {fn.name} has no body outside an abstract contract")
            return
        self.check_block(fn.body)

    # -- statements ------------------------------------------------------------

    def check_block(self, block: Block):
        self.scopes.append({})
        for stmt in block.statements:
            self.check_stmt(stmt)
        self.scopes.pop()

    def check_stmt(self, stmt):
        if isinstance(stmt, DeclStmt):
            decl = stmt.decl
            if decl.init is not None:
                self.check_expr(decl.init, expected=decl.ty)
            if decl.name in self.scopes[-1]:
                self.name_error(decl.span, f"duplicate local variable {decl.name}")
            self.scopes[-1][decl.name] = decl
        elif isinstance(stmt, AssignStmt):
            lhs_ty = self.check_expr(stmt.lhs)
            if stmt.op in ("+=", "-=") and not isinstance(lhs_ty, IntType):
                self.type_error(stmt.span, f"{stmt.op} needs an integer lvalue")
            if lhs_ty is not None:
                self.check_expr(stmt.rhs, expected=lhs_ty)
            else:
                self.check_expr(stmt.rhs)
        elif isinstance(stmt, ExprStmt):
            self.check_expr(stmt.expr, allow_incdec=True, allow_void=True)
        elif isinstance(stmt, IfStmt):
            self.expect_bool(stmt.cond)
            self.check_block(stmt.then_block)
            if stmt.else_block is not None:
                self.check_block(stmt.else_block)
        elif isinstance(stmt, WhileStmt):
            self.expect_bool(stmt.cond)
            self.check_block(stmt.body)
        elif isinstance(stmt, ForStmt):
            self.scopes.append({})
            if stmt.init is not None:
                self.check_stmt(stmt.init)
            if stmt.cond is not None:
                self.expect_bool(stmt.cond)
            if stmt.step is not None:
                self.check_stmt(stmt.step)
            self.check_block(stmt.body)
            self.scopes.pop()
        elif isinstance(stmt, ReturnStmt):
            want = self.function.returns_type if self.function else None
            if stmt.value is None:
                if want is not None:
                    self.type_error(stmt.span, "missing return value")
            elif want is None:
                self.type_error(stmt.span, "function does not return a value")
            else:
                self.check_expr(stmt.value, expected=want)
        elif isinstance(stmt, RequireStmt):
            self.expect_bool(stmt.cond)
        elif isinstance(stmt, AssertStmt):
            self.expect_bool(stmt.cond)
        else:
            raise AssertionError(f"unknown statement {stmt!r}")

    def expect_bool(self, expr: Expr):
        ty = self.check_expr(expr)
        if ty is not None and not isinstance(ty, BoolType):
            self.type_error(expr.span, f"condition must be bool, got {type_to_str(ty)}")

    # -- expressions -----------------------------------------------------------

    def lookup_var(self, name: str):
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        for sv in self.contract.state_vars:
            if sv.name == name:
                return sv
        return None

    def is_literalish(self, expr: Expr) -> bool:
        if isinstance(expr, IntLit):
            return True
        if isinstance(expr, UnaryExpr) and expr.op == "-":
            return self.is_literalish(expr.operand)
        return False

    def check_expr(self, expr: Expr, expected: TypeExpr = None, allow_incdec: bool = False, allow_void: bool = False):
        ty = self._infer(expr, expected, allow_incdec)
        expr.ty = ty
        if ty is None and not allow_void:
            self.type_error(expr.span, "expression has no value here")
        if expected is not None and ty is not None and ty != expected:
            self.type_error(expr.span, f"expected {type_to_str(expected)}, got {type_to_str(ty)}")
        return ty

    def _infer(self, expr: Expr, expected, allow_incdec):
        if isinstance(expr, IntLit):
            if isinstance(expected, IntType):
                if not expected.contains(expr.value):
                    self.type_error(expr.span, f"literal {expr.value} does not fit {type_to_str(expected)}")
                return expected
            if not UINT256.contains(expr.value):
                self.type_error(expr.span, f"literal {expr.value} does not fit uint256")
            return UINT256
        if isinstance(expr, BoolLit):
            return BOOL
        if isinstance(expr, AddressLit):
            if expr.value >= (1 << 160):
                self.type_error(expr.span, "address literal wider than 160 bits")
            return ADDRESS
        if isinstance(expr, MsgSender):
            return ADDRESS
        if isinstance(expr, MsgValue):
            return UINT256
        if isinstance(expr, Ident):
            decl = self.lookup_var(expr.name)
            if decl is None:
                self.name_error(expr.span, f"unknown identifier {expr.name}")
                return None
            expr.decl = decl
            return decl.ty
        if isinstance(expr, IndexExpr):
            base_ty = self.check_expr(expr.base)
            if not isinstance(base_ty, MappingType):
                if base_ty is not None:
                    self.type_error(expr.span, "only mappings can be indexed")
                self.check_expr(expr.key)
                return None
            self.check_expr(expr.key, expected=base_ty.key)
            return base_ty.value
        if isinstance(expr, MemberExpr):
            base_ty = self.check_expr(expr.base)
            if isinstance(base_ty, ContractType) and base_ty.name in self.contracts:
                target = self.contracts[base_ty.name]
                fn = next((f for f in target.functions if f.name == expr.field_name), None)
                if fn is None:
                    self.name_error(expr.span, f"contract {base_ty.name} has no function {expr.field_name}")
                    return None
                expr.decl = fn
                return None  # usable only as a delegatecall target
            self.type_error(expr.span, f"unknown member {expr.field_name}")
            return None
        if isinstance(expr, BinaryExpr):
            return self._infer_binary(expr, expected, allow_incdec)
        if isinstance(expr, UnaryExpr):
            if expr.op == "!":
                self.expect_bool(expr.operand)
                return BOOL
            if expr.op == "-":
                ty = self.check_expr(expr.operand, expected=expected if isinstance(expected, IntType) else None)
                if ty is not None and not isinstance(ty, IntType):
                    self.type_error(expr.span, "unary minus needs an integer operand")
                    return None
                return ty
            # postfix ++/--
            if not allow_incdec:
                self.type_error(expr.span, f"{expr.op} is only allowed as a standalone statement or loop step")
            if not is_lvalue(expr.operand):
                self.type_error(expr.span, f"{expr.op} needs an assignable operand")
            ty = self.check_expr(expr.operand)
            if ty is not None and not isinstance(ty, IntType):
                self.type_error(expr.span, f"{expr.op} needs an integer operand")
                return None
            return ty
        if isinstance(expr, CastExpr):
            if not isinstance(expr.target_type, IntType):
                self.type_error(expr.span, "cast target must be an integer type")
            ty = self.check_expr(expr.operand)
            if ty is not None and not isinstance(ty, IntType):
                self.type_error(expr.span, "cast operand must be an integer")
            return expr.target_type
        if isinstance(expr, CallInternal):
            fn = next((f for f in self.contract.functions if f.name == expr.fn_name), None)
            if fn is None:
                self.name_error(expr.span, f"unknown function {expr.fn_name}")
                for a in expr.args:
                    self.check_expr(a)
                return None
            expr.decl = fn
            self.check_args(expr, expr.args, fn)
            return fn.returns_type
        if isinstance(expr, CallExternal):
            target_ty = self.check_expr(expr.target)
            fn = None
            if isinstance(target_ty, ContractType) and target_ty.name in self.contracts:
                target = self.contracts[target_ty.name]
                fn = next((f for f in target.functions if f.name == expr.fn_name), None)
                if fn is None:
                    self.name_error(expr.span, f"contract {target_ty.name} has no function {expr.fn_name}")
                elif fn.visibility != "public":
                    self.type_error(expr.span, f"{target_ty.name}.{expr.fn_name} is not public")
            elif target_ty is not None:
                self.type_error(expr.span, "external call target must have contract type")
            expr.decl = fn
            if fn is not None:
                self.check_args(expr, expr.args, fn)
            else:
                for a in expr.args:
                    self.check_expr(a)
            if expr.attached_value is not None:
                self.expect_amount(expr.attached_value)
            return fn.returns_type if fn is not None else None
        if isinstance(expr, LowLevelCall):
            self.expect_address(expr.target)
            if expr.attached_value is not None:
                self.expect_amount(expr.attached_value)
            return BOOL
        if isinstance(expr, DelegateCall):
            if isinstance(expr.target, MemberExpr):
                self.check_expr(expr.target, allow_void=True)
                fn = expr.target.decl
                if fn is not None:
                    self.check_args(expr, expr.args, fn)
                else:
                    for a in expr.args:
                        self.check_expr(a)
            else:
                self.expect_address(expr.target)
                if expr.args:
                    self.type_error(expr.span, "delegatecall to a bare address takes no arguments")
            return None
        if isinstance(expr, TransferExpr):
            self.expect_address(expr.target)
            self.expect_amount(expr.amount)
            return None
        if isinstance(expr, NewExpr):
            target = self.contracts.get(expr.contract_name)
            if target is None:
                self.name_error(expr.span, f"unknown contract {expr.contract_name}")
                for a in expr.args:
                    self.check_expr(a)
                return None
            expr.decl = target
            ctor = target.constructor
            if ctor is not None:
                self.check_args(expr, expr.args, ctor)
            elif expr.args:
                self.type_error(expr.span, f"contract {expr.contract_name} has no constructor parameters")
            return ContractType(expr.contract_name)
        raise AssertionError(f"unknown expression {expr!r}")

    def _infer_binary(self, expr: BinaryExpr, expected, allow_incdec):
        op = expr.op
        if op in BOOL_OPS:
            self.expect_bool(expr.lhs)
            self.expect_bool(expr.rhs)
            return BOOL
        if op in ARITH_OPS or op in CMP_OPS or op in EQ_OPS:
            lhs_lit, rhs_lit = self.is_literalish(expr.lhs), self.is_literalish(expr.rhs)
            want = expected if (op in ARITH_OPS and isinstance(expected, IntType)) else None
            if lhs_lit and not rhs_lit:
                rt = self.check_expr(expr.rhs)
                lt = self.check_expr(expr.lhs, expected=rt if isinstance(rt, IntType) else None)
            elif rhs_lit and not lhs_lit:
                lt = self.check_expr(expr.lhs)
                rt = self.check_expr(expr.rhs, expected=lt if isinstance(lt, IntType) else None)
            elif lhs_lit and rhs_lit:
                lt = self.check_expr(expr.lhs, expected=want or UINT256)
                rt = self.check_expr(expr.rhs, expected=want or UINT256)
            else:
                lt = self.check_expr(expr.lhs)
                rt = self.check_expr(expr.rhs)
            if lt is None or rt is None:
                return None if op in ARITH_OPS else BOOL
            if op in EQ_OPS:
                if lt != rt:
                    self.type_error(expr.span, f"cannot compare {type_to_str(lt)} with {type_to_str(rt)}")
                elif isinstance(lt, MappingType):
                    self.type_error(expr.span, "mappings cannot be compared")
                return BOOL
            if not isinstance(lt, IntType) or not isinstance(rt, IntType):
                self.type_error(expr.span, f"operator {op} needs integer operands")
                return None if op in ARITH_OPS else BOOL
            if lt != rt:
                self.type_error(expr.span, f"operand types differ: {type_to_str(lt)} vs {type_to_str(rt)}")
            if op in CMP_OPS:
                return BOOL
            if op == "**" and rt.signed:
                self.type_error(expr.rhs.span, "exponent must be unsigned")
            return lt
        raise AssertionError(f"unknown operator {op}")

    def check_args(self, call, args, fn: FunctionDecl):
        if len(args) != len(fn.params):
            self.type_error(call.span, f"{fn.name} expects {len(fn.params)} argument(s), got {len(args)}")
        for a, p in zip(args, fn.params):
            self.check_expr(a, expected=p.ty)
        for a in args[len(fn.params) :]:
            self.check_expr(a)

    def expect_address(self, expr: Expr):
        ty = self.check_expr(expr)
        if ty is not None and not isinstance(ty, AddressType):
            self.type_error(expr.span, f"expected an address, got {type_to_str(ty)}")

    def expect_amount(self, expr: Expr):
        ty = self.check_expr(expr)
        if ty is not None and not (isinstance(ty, IntType) and not ty.signed):
            self.type_error(expr.span, "amounts must be unsigned integers")
