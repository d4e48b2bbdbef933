"""Recursive-descent parser for MiniSol.

`parse()` is the single frontend entry point: it lexes, parses, resolves
names and types (see checker.py), and either returns a fully annotated
SourceUnit or raises SourceError with every diagnostic collected.  Parsing
gives up after 20 syntax errors.

Call surface forms recognized on postfix chains:
    e.f(args)              external call (e has contract type)
    e.f.value(v)(args)     external call with attached value
    e.call.value(v)("")    low-level value call
    e.call("")             low-level call without value
    e.delegatecall(args)   delegate call (e is an address, or c.f)
    e.transfer(v)          value transfer
    new C(args)            contract creation
"""

from __future__ import annotations

from .errors import Diagnostic, SourceError
from .lexer import Token, lex, _is_int_type_name
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
    Span,
    Stmt,
    TransferExpr,
    TypeExpr,
    UnaryExpr,
    VarDecl,
    WhileStmt,
    is_lvalue,
    walk,
    BOOL,
    ADDRESS,
)

MAX_SYNTAX_ERRORS = 20


class _ParseAbort(Exception):
    """Internal: too many errors, stop parsing."""


class _ParseErr(Exception):
    """Internal: syntax error; recovery happens at statement/member level."""


class Parser:
    def __init__(self, source: str, source_name: str):
        self.source = source
        self.source_name = source_name
        self.tokens, self.diags, self.marker_lines = lex(source)
        self.pos = 0
        self.syntax_errors = len(self.diags)

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def at_kw(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "keyword" and t.text == word

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, message: str, token: Token = None):
        token = token or self.peek()
        self.diags.append(Diagnostic("SyntaxError", token.line, token.col, message))
        self.syntax_errors += 1
        if self.syntax_errors >= MAX_SYNTAX_ERRORS:
            raise _ParseAbort()
        raise _ParseErr()

    def expect(self, kind: str, what: str = None) -> Token:
        if self.peek().kind == kind:
            return self.advance()
        self.error(f"expected {what or kind!r}, found {self.peek().text or 'end of input'!r}")

    def expect_kw(self, word: str) -> Token:
        if self.at_kw(word):
            return self.advance()
        self.error(f"expected '{word}', found {self.peek().text or 'end of input'!r}")

    def span_from(self, start: Token, end: Token = None) -> Span:
        end = end or self.tokens[max(self.pos - 1, 0)]
        return Span(start.line, start.col, max(end.end_offset - start.offset, 0), start.offset)

    def synchronize(self, stops=(";", "}")):
        while self.peek().kind not in stops and self.peek().kind != "eof":
            self.advance()
        if self.peek().kind == ";":
            self.advance()

    # -- grammar -----------------------------------------------------------

    def parse_unit(self) -> SourceUnit:
        unit = SourceUnit(source_name=self.source_name)
        try:
            if self.at_kw("pragma"):
                unit.pragma_text = self.parse_pragma()
            while self.peek().kind != "eof":
                if self.at_kw("abstract") or self.at_kw("contract"):
                    c = self.parse_contract()
                    if c is not None:
                        unit.contracts.append(c)
                else:
                    try:
                        self.error("expected contract declaration")
                    except _ParseErr:
                        self.synchronize(stops=("}",))
                        if self.peek().kind == "}":
                            self.advance()
        except _ParseAbort:
            pass
        return unit

    def parse_pragma(self) -> str:
        start = self.expect_kw("pragma")
        while self.peek().kind not in (";", "eof"):
            self.advance()
        if self.peek().kind != ";":
            self.error("unterminated pragma")
        end = self.advance()
        return self.source[start.offset : end.end_offset]

    def parse_contract(self):
        start = self.peek()
        is_abstract = False
        if self.at_kw("abstract"):
            self.advance()
            is_abstract = True
        try:
            self.expect_kw("contract")
            name = self.expect("ident", "contract name").text
        except _ParseErr:
            self.synchronize(stops=("}",))
            if self.peek().kind == "}":
                self.advance()
            return None
        contract = ContractDecl(name=name, is_abstract=is_abstract)
        try:
            self.expect("{")
        except _ParseErr:
            return contract
        while self.peek().kind not in ("}", "eof"):
            try:
                self.parse_contract_member(contract)
            except _ParseErr:
                self.synchronize()
        if self.peek().kind == "}":
            self.advance()
        contract.span = self.span_from(start)
        return contract

    def parse_contract_member(self, contract: ContractDecl):
        if self.at_kw("function") or self.at_kw("constructor") or self.at_kw("virtual"):
            fn = self.parse_function()
            if fn.is_constructor:
                if contract.constructor is not None:
                    self.diags.append(
                        Diagnostic("NameError", fn.span.line, fn.span.col, f"duplicate constructor in contract {contract.name}")
                    )
                else:
                    contract.constructor = fn
            else:
                contract.functions.append(fn)
            return
        decl = self.parse_var_decl("state")
        contract.state_vars.append(decl)

    def parse_function(self) -> FunctionDecl:
        start = self.peek()
        is_virtual = False
        if self.at_kw("virtual"):
            self.advance()
            is_virtual = True
        if self.at_kw("constructor"):
            self.advance()
            fn = FunctionDecl(name="constructor", visibility="public", is_payable=False, is_constructor=True)
            self.expect("(")
            fn.params = self.parse_params()
            self.expect(")")
            if self.at_kw("public"):
                self.advance()
            fn.body = self.parse_block()
            fn.span = self.span_from(start)
            return fn
        self.expect_kw("function")
        name = self.expect("ident", "function name").text
        fn = FunctionDecl(name=name, visibility="public", is_payable=False, is_virtual=is_virtual)
        self.expect("(")
        fn.params = self.parse_params()
        self.expect(")")
        if self.at_kw("public") or self.at_kw("internal"):
            fn.visibility = self.advance().text
        else:
            self.error("expected 'public' or 'internal'")
        if self.at_kw("payable"):
            self.advance()
            fn.is_payable = True
        if self.at_kw("returns"):
            self.advance()
            self.expect("(")
            fn.returns_type = self.parse_type()
            self.expect(")")
        if self.peek().kind == ";":
            self.advance()
            fn.body = None
        else:
            fn.body = self.parse_block()
        fn.span = self.span_from(start)
        return fn

    def parse_params(self) -> list:
        params = []
        if self.peek().kind == ")":
            return params
        while True:
            start = self.peek()
            ty = self.parse_type()
            name = self.expect("ident", "parameter name").text
            params.append(VarDecl(name=name, ty=ty, storage_class="local", span=self.span_from(start)))
            if self.peek().kind != ",":
                break
            self.advance()
        return params

    def at_type(self) -> bool:
        t = self.peek()
        if t.kind == "keyword" and (t.text in ("bool", "address", "mapping") or _is_int_type_name(t.text)):
            return True
        return t.kind == "ident" and self.peek(1).kind == "ident"

    def parse_type(self) -> TypeExpr:
        t = self.peek()
        if t.kind == "keyword":
            if t.text == "bool":
                self.advance()
                return BOOL
            if t.text == "address":
                self.advance()
                return ADDRESS
            if t.text == "mapping":
                self.advance()
                self.expect("(")
                key = self.parse_type()
                self.expect("=>")
                value = self.parse_type()
                self.expect(")")
                if not isinstance(key, (IntType, type(ADDRESS))) or (isinstance(key, IntType) and key.signed):
                    self.diags.append(Diagnostic("TypeError", t.line, t.col, "mapping keys must be address or unsigned integers"))
                return MappingType(key, value)
            if _is_int_type_name(t.text):
                self.advance()
                signed = not t.text.startswith("u")
                digits = t.text[3:] if signed else t.text[4:]
                return IntType(int(digits) if digits else 256, signed)
        if t.kind == "ident":
            self.advance()
            from .nodes import ContractType

            return ContractType(t.text)
        self.error(f"expected a type, found {t.text or 'end of input'!r}")

    def parse_var_decl(self, storage_class: str) -> VarDecl:
        start = self.peek()
        ty = self.parse_type()
        name = self.expect("ident", "variable name").text
        init = None
        if self.peek().kind == "=":
            self.advance()
            init = self.parse_expr()
        self.expect(";")
        if isinstance(ty, MappingType):
            if storage_class != "state":
                self.diags.append(Diagnostic("TypeError", start.line, start.col, "mappings are legal only as state variables"))
            if init is not None:
                self.diags.append(Diagnostic("TypeError", start.line, start.col, "mapping variables cannot have initializers"))
        return VarDecl(name=name, ty=ty, storage_class=storage_class, init=init, span=self.span_from(start))

    def parse_block(self) -> Block:
        start = self.expect("{")
        block = Block()
        while self.peek().kind not in ("}", "eof"):
            try:
                block.statements.append(self.parse_stmt())
            except _ParseErr:
                self.synchronize()
        self.expect("}")
        block.span = self.span_from(start)
        return block

    def parse_stmt(self) -> Stmt:
        start = self.peek()
        if self.at_kw("if"):
            return self.parse_if()
        if self.at_kw("while"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            body = self.parse_block()
            return WhileStmt(cond=cond, body=body, span=self.span_from(start))
        if self.at_kw("for"):
            return self.parse_for()
        if self.at_kw("return"):
            self.advance()
            value = None
            if self.peek().kind != ";":
                value = self.parse_expr()
            self.expect(";")
            return ReturnStmt(value=value, span=self.span_from(start))
        if self.at_kw("require"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            message = None
            if self.peek().kind == ",":
                self.advance()
                tok = self.expect("string", "string message")
                message = getattr(tok, "value", "")
            self.expect(")")
            self.expect(";")
            return RequireStmt(cond=cond, message=message, span=self.span_from(start))
        if self.at_kw("assert"):
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            self.expect(";")
            return AssertStmt(cond=cond, span=self.span_from(start))
        if self.at_type():
            decl = self.parse_var_decl("local")
            return DeclStmt(decl=decl, span=decl.span)
        stmt = self.parse_assign_or_expr()
        self.expect(";")
        stmt.span = self.span_from(start)
        return stmt

    def parse_if(self) -> IfStmt:
        start = self.expect_kw("if")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then_block = self.parse_block()
        else_block = None
        if self.at_kw("else"):
            self.advance()
            if self.at_kw("if"):
                nested = self.parse_if()
                else_block = Block(statements=[nested], span=nested.span)
            else:
                else_block = self.parse_block()
        return IfStmt(cond=cond, then_block=then_block, else_block=else_block, span=self.span_from(start))

    def parse_for(self) -> ForStmt:
        start = self.expect_kw("for")
        self.expect("(")
        init = None
        if self.peek().kind != ";":
            if self.at_type():
                decl = self.parse_var_decl("local")  # consumes the ';'
                init = DeclStmt(decl=decl, span=decl.span)
            else:
                init = self.parse_assign_or_expr()
                self.expect(";")
        else:
            self.advance()
        cond = None
        if self.peek().kind != ";":
            cond = self.parse_expr()
        self.expect(";")
        step = None
        if self.peek().kind != ")":
            step = self.parse_assign_or_expr()
        self.expect(")")
        body = self.parse_block()
        return ForStmt(init=init, cond=cond, step=step, body=body, span=self.span_from(start))

    def parse_assign_or_expr(self) -> Stmt:
        start = self.peek()
        expr = self.parse_expr()
        if self.peek().kind in ("=", "+=", "-="):
            op = self.advance().text
            if not is_lvalue(expr):
                self.error("left-hand side of assignment is not assignable", start)
            rhs = self.parse_expr()
            return AssignStmt(lhs=expr, op=op, rhs=rhs, span=self.span_from(start))
        return ExprStmt(expr=expr, span=self.span_from(start))

    # -- expressions ---------------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_or()

    def _binary_chain(self, sub, ops):
        start = self.peek()
        lhs = sub()
        while self.peek().kind in ops:
            op = self.advance().text
            rhs = sub()
            lhs = BinaryExpr(op=op, lhs=lhs, rhs=rhs, span=self.span_from(start))
        return lhs

    def parse_or(self):
        return self._binary_chain(self.parse_and, ("||",))

    def parse_and(self):
        return self._binary_chain(self.parse_equality, ("&&",))

    def parse_equality(self):
        return self._binary_chain(self.parse_relational, ("==", "!="))

    def parse_relational(self):
        return self._binary_chain(self.parse_additive, ("<", "<=", ">", ">="))

    def parse_additive(self):
        return self._binary_chain(self.parse_multiplicative, ("+", "-"))

    def parse_multiplicative(self):
        return self._binary_chain(self.parse_unary, ("*", "/"))

    def parse_unary(self):
        start = self.peek()
        if self.peek().kind in ("!", "-"):
            op = self.advance().text
            operand = self.parse_unary()
            return UnaryExpr(op=op, operand=operand, span=self.span_from(start))
        return self.parse_power()

    def parse_power(self):
        start = self.peek()
        base = self.parse_postfix()
        if self.peek().kind == "**":
            self.advance()
            exponent = self.parse_power()  # right-associative
            return BinaryExpr(op="**", lhs=base, rhs=exponent, span=self.span_from(start))
        return base

    def parse_postfix(self):
        start = self.peek()
        expr = self.parse_primary()
        while True:
            t = self.peek()
            if t.kind == "[":
                self.advance()
                key = self.parse_expr()
                self.expect("]")
                expr = IndexExpr(base=expr, key=key, span=self.span_from(start))
            elif t.kind == ".":
                self.advance()
                expr = self.parse_member(expr, start)
            elif t.kind in ("++", "--"):
                self.advance()
                expr = UnaryExpr(op=t.kind, operand=expr, span=self.span_from(start))
            else:
                return expr

    def parse_member(self, base: Expr, start: Token) -> Expr:
        name_tok = self.peek()
        if name_tok.kind not in ("ident", "keyword"):
            self.error("expected member name after '.'")
        name = self.advance().text
        if isinstance(base, Ident) and base.name == "msg":
            if name == "sender":
                return MsgSender(span=self.span_from(start))
            if name == "value":
                return MsgValue(span=self.span_from(start))
            self.error(f"unknown msg member '{name}'", name_tok)
        if name == "call":
            attached = None
            if self.peek().kind == "." and self.peek(1).text == "value":
                self.advance()
                self.advance()
                self.expect("(")
                attached = self.parse_expr()
                self.expect(")")
            self.expect("(")
            if self.peek().kind == "string":
                self.advance()  # the conventional empty payload, carried only in source form
            self.expect(")")
            return LowLevelCall(target=base, attached_value=attached, span=self.span_from(start))
        if name == "delegatecall":
            self.expect("(")
            args = self.parse_args()
            self.expect(")")
            return DelegateCall(target=base, args=args, span=self.span_from(start))
        if name == "transfer":
            self.expect("(")
            amount = self.parse_expr()
            self.expect(")")
            return TransferExpr(target=base, amount=amount, span=self.span_from(start))
        if name == "value" and isinstance(base, MemberExpr) and self.peek().kind == "(":
            self.advance()
            attached = self.parse_expr()
            self.expect(")")
            self.expect("(")
            args = self.parse_args()
            self.expect(")")
            return CallExternal(
                target=base.base, fn_name=base.field_name, args=args, attached_value=attached, span=self.span_from(start)
            )
        if self.peek().kind == "(":
            self.advance()
            args = self.parse_args()
            self.expect(")")
            return CallExternal(target=base, fn_name=name, args=args, span=self.span_from(start))
        return MemberExpr(base=base, field_name=name, span=self.span_from(start))

    def parse_args(self) -> list:
        args = []
        if self.peek().kind == ")":
            return args
        while True:
            args.append(self.parse_expr())
            if self.peek().kind != ",":
                return args
            self.advance()

    def parse_primary(self):
        t = self.peek()
        start = t
        if t.kind == "number":
            self.advance()
            return IntLit(value=int(t.text), span=self.span_from(start))
        if t.kind == "hexnumber":
            self.advance()
            return AddressLit(value=int(t.text, 16), span=self.span_from(start))
        if t.kind == "(":
            self.advance()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        if t.kind == "keyword":
            if t.text == "true" or t.text == "false":
                self.advance()
                return BoolLit(value=t.text == "true", span=self.span_from(start))
            if t.text == "new":
                self.advance()
                name = self.expect("ident", "contract name").text
                self.expect("(")
                args = self.parse_args()
                self.expect(")")
                return NewExpr(contract_name=name, args=args, span=self.span_from(start))
            if t.text == "msg":
                self.advance()
                return Ident(name="msg", span=self.span_from(start))  # resolved by parse_member
            if _is_int_type_name(t.text):
                ty = self.parse_type()
                self.expect("(")
                operand = self.parse_expr()
                self.expect(")")
                return CastExpr(target_type=ty, operand=operand, span=self.span_from(start))
        if t.kind == "ident":
            self.advance()
            if self.peek().kind == "(":
                self.advance()
                args = self.parse_args()
                self.expect(")")
                return CallInternal(fn_name=t.text, args=args, span=self.span_from(start))
            return Ident(name=t.text, span=self.span_from(start))
        self.error(f"expected an expression, found {t.text or 'end of input'!r}")


def _mark_patch_lines(unit: SourceUnit, marker_lines) -> None:
    if not marker_lines:
        return
    for node in walk(unit):
        if isinstance(node, (Stmt, VarDecl)) and node.span.line in marker_lines:
            node.is_patch = True


def parse(source: str, source_name: str = "<memory>") -> SourceUnit:
    """Parse, resolve, and type a MiniSol source text.

    Raises SourceError carrying all diagnostics if anything is wrong.
    """
    unit, diags = parse_with_diagnostics(source, source_name)
    if diags:
        raise SourceError(diags)
    return unit


def parse_with_diagnostics(source: str, source_name: str = "<memory>"):
    parser = Parser(source, source_name)
    unit = parser.parse_unit()
    _mark_patch_lines(unit, parser.marker_lines)
    diags = list(parser.diags)
    if not any(d.kind == "SyntaxError" for d in diags):
        from .checker import check_unit

        diags.extend(check_unit(unit))
    return unit, diags


def parse_expression(source: str) -> Expr:
    """Parse a standalone expression (unresolved, untyped); span-soundness helper."""
    parser = Parser(source, "<expr>")
    expr = parser.parse_expr()
    if parser.diags or parser.peek().kind != "eof":
        raise SourceError(parser.diags or [Diagnostic("SyntaxError", 1, 0, "trailing input after expression")])
    return expr


def parse_statement(source: str) -> Stmt:
    """Parse a standalone statement (unresolved, untyped); span-soundness helper."""
    parser = Parser(source, "<stmt>")
    stmt = parser.parse_stmt()
    if parser.diags or parser.peek().kind != "eof":
        raise SourceError(parser.diags or [Diagnostic("SyntaxError", 1, 0, "trailing input after statement")])
    return stmt
