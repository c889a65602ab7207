"""Recursive-descent parser producing the syntactic AST.

Scope resolution, type checking, and specification-expression parsing live
in `analysis`; the combined entry point is `speceval.lang.parse_unit`.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import SyntaxError, UnsupportedFeature
from . import ast
from .lexer import Token, tokenize

ASSIGN_OPS = {"+=": "+", "-=": "-", "*=": "*", "/=": "/", "%=": "%"}


@dataclass
class RawSpec:
    """A `//@` clause collected during parsing, before expression parsing."""

    kind: str
    anchor: ast.Anchor
    text: str
    line: int


@dataclass
class ParsedUnit:
    unit: ast.SourceUnit
    raw_specs: list[RawSpec]


class Parser:
    def __init__(self, tokens: list[Token], *, spec_ctx: bool = False):
        self.toks = tokens
        self.pos = 0
        self.spec_ctx = spec_ctx
        self.loop_counter = 0

    # ------------------------------------------------------------ helpers

    def peek(self, ahead: int = 0) -> Token:
        i = min(self.pos + ahead, len(self.toks) - 1)
        return self.toks[i]

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, kind: str, text: str | None = None) -> Token:
        if not self.at(kind, text):
            t = self.peek()
            want = text if text is not None else kind
            raise SyntaxError(t.line, t.col, f"expected {want!r}, got {t.text or t.kind!r}")
        return self.advance()

    def error(self, msg: str):
        t = self.peek()
        raise SyntaxError(t.line, t.col, msg)

    # --------------------------------------------------------------- unit

    def parse_unit(self) -> ParsedUnit:
        raw_specs: list[RawSpec] = []
        while self.at("keyword", "public"):
            self.advance()
        self.expect("keyword", "class")
        name = self.expect("ident").text
        self.expect("op", "{")
        methods = []
        while not self.at("op", "}"):
            methods.append(self.parse_method(raw_specs))
        self.expect("op", "}")
        self.expect("eof")
        unit = ast.SourceUnit(name, methods, [], line=1)
        return ParsedUnit(unit, raw_specs)

    def collect_pending_specs(self) -> list[Token]:
        pending = []
        while self.at("spec"):
            pending.append(self.advance())
        return pending

    def parse_method(self, raw_specs: list[RawSpec]) -> ast.Method:
        pending = self.collect_pending_specs()
        seen = set()
        while self.at("keyword", "public") or self.at("keyword", "static") or self.at(
            "keyword", "private"
        ):
            mod = self.advance().text
            if mod in seen:
                self.error(f"duplicate modifier {mod!r}")
            seen.add(mod)
        line = self.peek().line
        ret = self.parse_type(allow_void=True)
        name = self.expect("ident").text
        self.expect("op", "(")
        params: list[tuple[str, str]] = []
        if not self.at("op", ")"):
            while True:
                pty = self.parse_type()
                pname = self.expect("ident").text
                params.append((pname, pty))
                if self.at("op", ","):
                    self.advance()
                    continue
                break
        self.expect("op", ")")
        for tok in pending:
            kind, text = split_spec_text(tok)
            if kind == ast.LOOP_INVARIANT:
                raise SyntaxError(tok.line, tok.col, "loop_invariant must precede a loop header")
            raw_specs.append(RawSpec(kind, name, text, tok.line))
        body = self.parse_block(raw_specs)
        return ast.Method(name, params, ret, body, line=line)

    def parse_type(self, allow_void: bool = False) -> str:
        t = self.peek()
        if t.kind == "keyword" and t.text in ("int", "boolean", "String", "void"):
            self.advance()
            if t.text == "void":
                if not allow_void:
                    raise SyntaxError(t.line, t.col, "void is only valid as a return type")
                return ast.T_VOID
            if t.text == "int" and self.at("op", "["):
                self.advance()
                self.expect("op", "]")
                return ast.T_ARRAY
            return {"int": ast.T_INT, "boolean": ast.T_BOOL, "String": ast.T_STRING}[t.text]
        if t.kind in ("ident", "keyword"):
            raise UnsupportedFeature(f"type {t.text!r}", t.line)
        self.error("expected a type")

    # --------------------------------------------------------- statements

    def parse_block(self, raw_specs: list[RawSpec]) -> list[ast.Stmt]:
        self.expect("op", "{")
        stmts = []
        while not self.at("op", "}"):
            stmts.append(self.parse_stmt(raw_specs))
        self.expect("op", "}")
        return stmts

    def parse_stmt(self, raw_specs: list[RawSpec]) -> ast.Stmt:
        if self.at("spec"):
            pending = self.collect_pending_specs()
            if not (self.at("keyword", "while") or self.at("keyword", "for")):
                t = self.peek()
                raise SyntaxError(
                    t.line, t.col, "specification comment must precede a loop header here"
                )
            return self.parse_loop(pending, raw_specs)
        t = self.peek()
        if t.kind == "keyword":
            if t.text in ("int", "boolean", "String"):
                st = self.parse_var_decl()
                self.expect("op", ";")
                return st
            if t.text == "if":
                return self.parse_if(raw_specs)
            if t.text in ("while", "for"):
                return self.parse_loop([], raw_specs)
            if t.text == "return":
                self.advance()
                value = None
                if not self.at("op", ";"):
                    value = self.parse_expr()
                self.expect("op", ";")
                return ast.Return(value, line=t.line)
            if t.text in ("new", "null"):
                raise UnsupportedFeature(t.text, t.line)
        if self.at("op", "{"):
            line = self.peek().line
            return ast.Block(self.parse_block(raw_specs), line=line)
        if t.kind == "ident":
            st = self.parse_assign()
            self.expect("op", ";")
            return st
        self.error(f"expected a statement, got {t.text or t.kind!r}")

    def parse_var_decl(self) -> ast.VarDecl:
        line = self.peek().line
        ty = self.parse_type()
        name = self.expect("ident").text
        if not self.at("op", "="):
            self.error(f"declaration of {name!r} requires an initializer")
        self.advance()
        init = self.parse_expr()
        return ast.VarDecl(name, ty, init, line=line)

    def parse_assign(self) -> ast.Assign:
        line = self.peek().line
        name_tok = self.expect("ident")
        target: ast.Expr = ast.VarRef(name_tok.text, line=name_tok.line)
        if self.at("op", "["):
            self.advance()
            idx = self.parse_expr()
            self.expect("op", "]")
            target = ast.ArrayIndex(target, idx, line=name_tok.line)
        t = self.peek()
        if self.at("op", "="):
            self.advance()
            return ast.Assign(target, self.parse_expr(), line=line)
        if t.kind == "op" and t.text in ASSIGN_OPS:
            self.advance()
            rhs = self.parse_expr()
            combined = ast.Binary(ASSIGN_OPS[t.text], _copy_lvalue(target), rhs, line=line)
            return ast.Assign(target, combined, line=line)
        if t.kind == "op" and t.text in ("++", "--"):
            self.advance()
            one = ast.IntLit(1, line=line)
            op = "+" if t.text == "++" else "-"
            return ast.Assign(target, ast.Binary(op, _copy_lvalue(target), one, line=line), line=line)
        self.error("expected an assignment operator")

    def parse_if(self, raw_specs: list[RawSpec]) -> ast.If:
        line = self.expect("keyword", "if").line
        self.expect("op", "(")
        cond = self.parse_expr()
        self.expect("op", ")")
        then_body = self.parse_block(raw_specs)
        else_body = None
        if self.at("keyword", "else"):
            self.advance()
            if self.at("keyword", "if"):
                else_body = [self.parse_if(raw_specs)]
            else:
                else_body = self.parse_block(raw_specs)
        return ast.If(cond, then_body, else_body, line=line)

    def parse_loop(self, pending: list[Token], raw_specs: list[RawSpec]) -> ast.Stmt:
        self.loop_counter += 1
        loop_id = self.loop_counter
        for tok in pending:
            kind, text = split_spec_text(tok)
            if kind != ast.LOOP_INVARIANT:
                raise SyntaxError(tok.line, tok.col, f"{kind} clause cannot anchor to a loop")
            raw_specs.append(RawSpec(kind, loop_id, text, tok.line))
        t = self.peek()
        if t.text == "while":
            self.advance()
            self.expect("op", "(")
            cond = self.parse_expr()
            self.expect("op", ")")
            body = self.parse_block(raw_specs)
            return ast.While(cond, body, loop_id, line=t.line)
        self.expect("keyword", "for")
        self.expect("op", "(")
        init = None
        if not self.at("op", ";"):
            if self.peek().kind == "keyword" and self.peek().text in ("int", "boolean", "String"):
                init = self.parse_var_decl()
            else:
                init = self.parse_assign()
        self.expect("op", ";")
        cond = None
        if not self.at("op", ";"):
            cond = self.parse_expr()
        self.expect("op", ";")
        update = None
        if not self.at("op", ")"):
            update = self.parse_assign()
        self.expect("op", ")")
        body = self.parse_block(raw_specs)
        return ast.For(init, cond, update, body, loop_id, line=t.line)

    # -------------------------------------------------------- expressions

    def parse_expr(self) -> ast.Expr:
        return self.parse_iff()

    def parse_iff(self) -> ast.Expr:
        left = self.parse_implies()
        while self.at("op", "<==>"):
            t = self.advance()
            self.require_spec_ctx(t)
            left = ast.Iff(left, self.parse_implies(), line=t.line)
        return left

    def parse_implies(self) -> ast.Expr:
        left = self.parse_or()
        if self.at("op", "==>"):
            t = self.advance()
            self.require_spec_ctx(t)
            return ast.Implies(left, self.parse_implies(), line=t.line)
        return left

    def parse_or(self) -> ast.Expr:
        left = self.parse_and()
        while self.at("op", "||"):
            t = self.advance()
            left = ast.Binary("||", left, self.parse_and(), line=t.line)
        return left

    def parse_and(self) -> ast.Expr:
        left = self.parse_equality()
        while self.at("op", "&&"):
            t = self.advance()
            left = ast.Binary("&&", left, self.parse_equality(), line=t.line)
        return left

    def parse_equality(self) -> ast.Expr:
        left = self.parse_relational()
        while self.peek().kind == "op" and self.peek().text in ("==", "!="):
            t = self.advance()
            left = ast.Binary(t.text, left, self.parse_relational(), line=t.line)
        return left

    def parse_relational(self) -> ast.Expr:
        left = self.parse_additive()
        while self.peek().kind == "op" and self.peek().text in ("<", "<=", ">", ">="):
            t = self.advance()
            left = ast.Binary(t.text, left, self.parse_additive(), line=t.line)
        return left

    def parse_additive(self) -> ast.Expr:
        left = self.parse_multiplicative()
        while self.peek().kind == "op" and self.peek().text in ("+", "-"):
            t = self.advance()
            left = ast.Binary(t.text, left, self.parse_multiplicative(), line=t.line)
        return left

    def parse_multiplicative(self) -> ast.Expr:
        left = self.parse_unary()
        while self.peek().kind == "op" and self.peek().text in ("*", "/", "%"):
            t = self.advance()
            left = ast.Binary(t.text, left, self.parse_unary(), line=t.line)
        return left

    def parse_unary(self) -> ast.Expr:
        t = self.peek()
        if t.kind == "op" and t.text in ("!", "-"):
            self.advance()
            operand = self.parse_unary()
            if t.text == "-" and isinstance(operand, ast.IntLit):
                v = -operand.value
                if v < ast.INT_MIN:
                    raise SyntaxError(t.line, t.col, "integer literal out of 32-bit range")
                return ast.IntLit(v, line=t.line)
            return ast.Unary(t.text, operand, line=t.line)
        return self.parse_postfix()

    def parse_postfix(self) -> ast.Expr:
        e = self.parse_primary()
        while True:
            if self.at("op", "["):
                t = self.advance()
                idx = self.parse_expr()
                self.expect("op", "]")
                e = ast.ArrayIndex(e, idx, line=t.line)
                continue
            if self.at("op", "."):
                t = self.advance()
                member = self.expect("ident").text
                if member == "length":
                    if self.at("op", "("):
                        self.advance()
                        self.expect("op", ")")
                        e = ast.FieldLen(e, line=t.line)
                    else:
                        e = ast.FieldLen(e, line=t.line)
                    continue
                if member == "charAt":
                    self.expect("op", "(")
                    idx = self.parse_expr()
                    self.expect("op", ")")
                    e = ast.CharAt(e, idx, line=t.line)
                    continue
                raise UnsupportedFeature(f"member access .{member}", t.line)
            break
        return e

    def parse_primary(self) -> ast.Expr:
        t = self.peek()
        if t.kind == "int":
            self.advance()
            v = int(t.text)
            if v > 2**31:
                raise SyntaxError(t.line, t.col, "integer literal out of 32-bit range")
            return ast.IntLit(v, line=t.line)
        if t.kind == "string":
            self.advance()
            return ast.StringLit(t.text, line=t.line)
        if t.kind == "keyword" and t.text in ("true", "false"):
            self.advance()
            return ast.BoolLit(t.text == "true", line=t.line)
        if t.kind == "keyword" and t.text in ("new", "null"):
            raise UnsupportedFeature(t.text, t.line)
        if t.kind == "specword":
            self.require_spec_ctx(t)
            self.advance()
            if t.text == "\\result":
                return ast.Result(line=t.line)
            if t.text == "\\old":
                self.expect("op", "(")
                inner = self.parse_expr()
                self.expect("op", ")")
                return ast.Old(inner, line=t.line)
            self.error(f"{t.text} is only valid after '('")
        if t.kind == "ident":
            if (
                t.text == "Integer"
                and self.peek(1).kind == "op"
                and self.peek(1).text == "."
                and self.peek(2).text in ("MAX_VALUE", "MIN_VALUE")
            ):
                self.advance()
                self.advance()
                const = self.advance().text
                return ast.IntLit(
                    ast.INT_MAX if const == "MAX_VALUE" else ast.INT_MIN, line=t.line
                )
            self.advance()
            if self.at("op", "("):
                self.advance()
                args = []
                if not self.at("op", ")"):
                    while True:
                        args.append(self.parse_expr())
                        if self.at("op", ","):
                            self.advance()
                            continue
                        break
                self.expect("op", ")")
                return ast.Call(t.text, args, line=t.line)
            return ast.VarRef(t.text, line=t.line)
        if self.at("op", "("):
            self.advance()
            if self.peek().kind == "specword" and self.peek().text in ("\\forall", "\\exists"):
                q = self.advance()
                self.require_spec_ctx(q)
                kind = "forall" if q.text == "\\forall" else "exists"
                ty_tok = self.peek()
                ty = self.parse_type()
                if ty != ast.T_INT:
                    raise UnsupportedFeature("non-int quantifier binder", ty_tok.line)
                binder = self.expect("ident").text
                self.expect("op", ";")
                rng = self.parse_expr()
                self.expect("op", ";")
                body = self.parse_expr()
                self.expect("op", ")")
                return ast.Quant(kind, binder, rng, body, line=q.line)
            e = self.parse_expr()
            self.expect("op", ")")
            return e
        self.error(f"expected an expression, got {t.text or t.kind!r}")

    def require_spec_ctx(self, t: Token):
        if not self.spec_ctx:
            raise SyntaxError(t.line, t.col, "specification syntax outside a //@ clause")


def _copy_lvalue(target: ast.Expr) -> ast.Expr:
    if isinstance(target, ast.VarRef):
        return ast.VarRef(target.name, line=target.line)
    return ast.ArrayIndex(
        ast.VarRef(target.base.name, line=target.line), target.index, line=target.line
    )


def split_spec_text(tok: Token) -> tuple[str, str]:
    text = tok.text.strip()
    for kind in ast.SPEC_KINDS:
        if text == kind or text.startswith(kind + " ") or text.startswith(kind + "\t"):
            body = text[len(kind):].strip()
            if body.endswith(";"):
                body = body[:-1].rstrip()
            if not body:
                raise SyntaxError(tok.line, tok.col, f"empty {kind} clause")
            return kind, body
    raise SyntaxError(tok.line, tok.col, f"unknown specification clause: {text[:30]!r}")


def parse_unit_syntax(text: str) -> ParsedUnit:
    """Syntactic pass only; see `speceval.lang.parse_unit` for the full pipeline."""
    return Parser(tokenize(text)).parse_unit()


def parse_expr_text(text: str, *, spec_ctx: bool, line: int = 1) -> ast.Expr:
    toks = tokenize(text, spec_mode=spec_ctx, start_line=line)
    p = Parser(toks, spec_ctx=spec_ctx)
    e = p.parse_expr()
    p.expect("eof")
    return e
