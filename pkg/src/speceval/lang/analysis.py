"""Scope resolution, type checking, def/use indexing, and spec validation.

The runtime environment of one method invocation is a flat map, which is
only sound because this pass enforces: unique names per method, lexical
declaration-before-use, and mandatory initializers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ScopeError, TypeError_, UnboundedQuantifier
from . import ast
from .parser import ParsedUnit, RawSpec, parse_expr_text


@dataclass
class VarInfo:
    name: str
    type_tag: str
    decl_site: int  # statement id; 0 for parameters
    decl_line: int


@dataclass
class MethodScope:
    method: str
    vars: dict[str, VarInfo] = field(default_factory=dict)
    def_sites: dict[str, list[int]] = field(default_factory=dict)
    use_sites: dict[str, list[int]] = field(default_factory=dict)
    site_lines: dict[int, int] = field(default_factory=dict)
    # statement id of each loop header, keyed by loop id
    loop_sites: dict[int, int] = field(default_factory=dict)
    # names lexically visible at each loop header (for invariant scoping)
    loop_visible: dict[int, dict[str, VarInfo]] = field(default_factory=dict)


@dataclass
class SymbolTable:
    unit_name: str
    signatures: dict[str, tuple[list[tuple[str, str]], str]] = field(default_factory=dict)
    scopes: dict[str, MethodScope] = field(default_factory=dict)

    def scope_of_anchor(self, unit: ast.SourceUnit, anchor: ast.Anchor) -> MethodScope:
        if isinstance(anchor, str):
            return self.scopes[anchor]
        for m in unit.methods:
            for st in ast.walk_stmts(m.body):
                if isinstance(st, (ast.While, ast.For)) and st.loop_id == anchor:
                    return self.scopes[m.name]
        raise ScopeError(f"no loop with id {anchor}")


class _Resolver:
    """Single walk computing scopes, def/use sites, and expression types."""

    def __init__(self, unit: ast.SourceUnit):
        self.unit = unit
        self.table = SymbolTable(unit.name)
        for m in unit.methods:
            if m.name in self.table.signatures:
                raise ScopeError(f"duplicate method name {m.name!r}", m.line)
            self.table.signatures[m.name] = (m.params, m.return_type)
        seen_loops: set[int] = set()
        for m in unit.methods:
            for st in ast.walk_stmts(m.body):
                if isinstance(st, (ast.While, ast.For)):
                    if st.loop_id in seen_loops:
                        raise ScopeError(f"duplicate loop id {st.loop_id}", st.line)
                    seen_loops.add(st.loop_id)

    def run(self) -> SymbolTable:
        for m in self.unit.methods:
            self.resolve_method(m)
        return self.table

    # ------------------------------------------------------------ methods

    def resolve_method(self, m: ast.Method):
        sc = MethodScope(m.name)
        self.table.scopes[m.name] = sc
        self.sc = sc
        self.method = m
        self.sid = 0
        seen = set()
        for pname, pty in m.params:
            if pname in seen:
                raise ScopeError(f"duplicate parameter {pname!r} in {m.name}", m.line)
            seen.add(pname)
            sc.vars[pname] = VarInfo(pname, pty, 0, m.line)
            sc.def_sites.setdefault(pname, []).append(0)
        sc.site_lines[0] = m.line
        # visibility stack: one name set per enclosing block
        self.visible: list[dict[str, VarInfo]] = [dict(sc.vars)]
        self.resolve_block(m.body)
        if m.return_type != ast.T_VOID and not _must_return(m.body):
            raise TypeError_(f"method {m.name!r} may fall off the end without a return", m.line)

    def lookup(self, name: str, line: int) -> VarInfo:
        for frame in reversed(self.visible):
            if name in frame:
                return frame[name]
        raise ScopeError(f"unknown identifier {name!r}", line)

    def declare(self, name: str, ty: str, line: int) -> VarInfo:
        if name in self.sc.vars:
            raise ScopeError(f"redeclaration of {name!r} in {self.method.name}", line)
        if name in self.table.signatures:
            raise ScopeError(f"{name!r} shadows a method name", line)
        info = VarInfo(name, ty, self.sid, line)
        self.sc.vars[name] = info
        self.visible[-1][name] = info
        return info

    def next_sid(self, st: ast.Stmt) -> int:
        self.sid += 1
        self.sc.site_lines[self.sid] = st.line
        return self.sid

    # --------------------------------------------------------- statements

    def resolve_block(self, body: list[ast.Stmt]):
        self.visible.append({})
        for st in body:
            self.resolve_stmt(st)
        self.visible.pop()

    def resolve_stmt(self, st: ast.Stmt):
        sid = self.next_sid(st)
        if isinstance(st, ast.VarDecl):
            self.type_expr(st.init, sid)
            if st.init.ty != st.type_tag:
                raise TypeError_(
                    f"cannot initialize {st.type_tag} {st.name!r} from {st.init.ty}", st.line
                )
            self.declare(st.name, st.type_tag, st.line)
            self.sc.def_sites.setdefault(st.name, []).append(sid)
        elif isinstance(st, ast.Assign):
            self.resolve_assign(st, sid)
        elif isinstance(st, ast.If):
            self.type_expr(st.cond, sid)
            _want(st.cond, ast.T_BOOL, "if condition")
            self.resolve_block(st.then_body)
            if st.else_body is not None:
                self.resolve_block(st.else_body)
        elif isinstance(st, ast.While):
            self.sc.loop_sites[st.loop_id] = sid
            self.snapshot_loop_scope(st.loop_id)
            self.type_expr(st.cond, sid)
            _want(st.cond, ast.T_BOOL, "while condition")
            self.resolve_block(st.body)
        elif isinstance(st, ast.For):
            self.sc.loop_sites[st.loop_id] = sid
            # the init variable is visible to the invariant, so open the
            # loop's scope frame before resolving init
            self.visible.append({})
            if st.init is not None:
                self.resolve_for_clause(st.init)
            self.snapshot_loop_scope(st.loop_id)
            if st.cond is not None:
                self.type_expr(st.cond, sid)
                _want(st.cond, ast.T_BOOL, "for condition")
            if st.update is not None:
                self.resolve_for_clause(st.update)
            self.resolve_block(st.body)
            self.visible.pop()
        elif isinstance(st, ast.Return):
            ret = self.method.return_type
            if st.value is None:
                if ret != ast.T_VOID:
                    raise TypeError_(f"missing return value in {self.method.name}", st.line)
            else:
                if ret == ast.T_VOID:
                    raise TypeError_("void method returns a value", st.line)
                self.type_expr(st.value, sid)
                if st.value.ty != ret:
                    raise TypeError_(f"return type {st.value.ty} != declared {ret}", st.line)
        elif isinstance(st, ast.Block):
            self.resolve_block(st.body)
        else:
            raise TypeError_(f"unhandled statement {type(st).__name__}", st.line)

    def resolve_for_clause(self, st: ast.Stmt):
        sid = self.next_sid(st)
        if isinstance(st, ast.VarDecl):
            self.type_expr(st.init, sid)
            if st.init.ty != st.type_tag:
                raise TypeError_(f"cannot initialize {st.type_tag} {st.name!r}", st.line)
            self.declare(st.name, st.type_tag, st.line)
            self.sc.def_sites.setdefault(st.name, []).append(sid)
        elif isinstance(st, ast.Assign):
            self.resolve_assign(st, sid)
        else:
            raise TypeError_("for clause must be a declaration or assignment", st.line)

    def resolve_assign(self, st: ast.Assign, sid: int):
        self.type_expr(st.value, sid)
        if isinstance(st.target, ast.VarRef):
            info = self.lookup(st.target.name, st.line)
            st.target.ty = info.type_tag
            self.sc.def_sites.setdefault(info.name, []).append(sid)
            if st.value.ty != info.type_tag:
                raise TypeError_(
                    f"cannot assign {st.value.ty} to {info.type_tag} {info.name!r}", st.line
                )
        elif isinstance(st.target, ast.ArrayIndex):
            base = st.target.base
            if not isinstance(base, ast.VarRef):
                raise TypeError_("array assignment target must be a named array", st.line)
            info = self.lookup(base.name, st.line)
            if info.type_tag != ast.T_ARRAY:
                raise TypeError_(f"{base.name!r} is not an array", st.line)
            base.ty = ast.T_ARRAY
            st.target.ty = ast.T_INT
            self.type_expr(st.target.index, sid)
            _want(st.target.index, ast.T_INT, "array index")
            # writing a[i] both uses and redefines a
            self.sc.def_sites.setdefault(info.name, []).append(sid)
            self.sc.use_sites.setdefault(info.name, []).append(sid)
            if st.value.ty != ast.T_INT:
                raise TypeError_("array element assignment requires an int", st.line)
        else:
            raise TypeError_("invalid assignment target", st.line)

    def snapshot_loop_scope(self, loop_id: int):
        merged: dict[str, VarInfo] = {}
        for frame in self.visible:
            merged.update(frame)
        self.sc.loop_visible[loop_id] = merged

    # -------------------------------------------------------- expressions

    def type_expr(self, e: ast.Expr, sid: int):
        """Program-expression typing; spec forms are rejected here."""
        self._type(e, sid, spec=None)

    def _type(self, e: ast.Expr, sid: int, spec):
        # spec: None for program code, else a _SpecCtx
        if isinstance(e, ast.IntLit):
            if not (ast.INT_MIN <= e.value <= ast.INT_MAX):
                raise TypeError_("integer literal out of 32-bit range", e.line)
            e.ty = ast.T_INT
        elif isinstance(e, ast.BoolLit):
            e.ty = ast.T_BOOL
        elif isinstance(e, ast.StringLit):
            e.ty = ast.T_STRING
        elif isinstance(e, ast.VarRef):
            if spec is not None:
                e.ty = spec.lookup(e.name, e.line)
            else:
                info = self.lookup(e.name, e.line)
                e.ty = info.type_tag
                self.sc.use_sites.setdefault(e.name, []).append(sid)
        elif isinstance(e, ast.ArrayIndex):
            self._type(e.base, sid, spec)
            self._type(e.index, sid, spec)
            _want(e.base, ast.T_ARRAY, "indexing base")
            _want(e.index, ast.T_INT, "array index")
            e.ty = ast.T_INT
        elif isinstance(e, ast.FieldLen):
            self._type(e.base, sid, spec)
            if e.base.ty not in (ast.T_ARRAY, ast.T_STRING):
                raise TypeError_(f"length of non-array/string ({e.base.ty})", e.line)
            e.ty = ast.T_INT
        elif isinstance(e, ast.CharAt):
            self._type(e.base, sid, spec)
            self._type(e.index, sid, spec)
            _want(e.base, ast.T_STRING, "charAt base")
            _want(e.index, ast.T_INT, "charAt index")
            e.ty = ast.T_INT
        elif isinstance(e, ast.Unary):
            self._type(e.operand, sid, spec)
            if e.op == "!":
                _want(e.operand, ast.T_BOOL, "operand of !")
                e.ty = ast.T_BOOL
            else:
                _want(e.operand, ast.T_INT, "operand of unary -")
                e.ty = ast.T_INT
        elif isinstance(e, ast.Binary):
            self._type(e.left, sid, spec)
            self._type(e.right, sid, spec)
            lt, rt = e.left.ty, e.right.ty
            if e.op in ("+", "-", "*", "/", "%"):
                if lt != ast.T_INT or rt != ast.T_INT:
                    raise TypeError_(f"arithmetic {e.op} needs ints, got {lt}, {rt}", e.line)
                e.ty = ast.T_INT
            elif e.op in ("<", "<=", ">", ">="):
                if lt != ast.T_INT or rt != ast.T_INT:
                    raise TypeError_(f"comparison {e.op} needs ints, got {lt}, {rt}", e.line)
                e.ty = ast.T_BOOL
            elif e.op in ("==", "!="):
                if lt != rt:
                    raise TypeError_(f"cannot compare {lt} with {rt}", e.line)
                if lt == ast.T_ARRAY:
                    raise TypeError_("array equality is not supported; compare elements", e.line)
                e.ty = ast.T_BOOL
            elif e.op in ("&&", "||"):
                _want(e.left, ast.T_BOOL, f"operand of {e.op}")
                _want(e.right, ast.T_BOOL, f"operand of {e.op}")
                e.ty = ast.T_BOOL
            else:
                raise TypeError_(f"unknown operator {e.op}", e.line)
        elif isinstance(e, ast.Call):
            if e.method not in self.table.signatures:
                raise ScopeError(f"call to unknown method {e.method!r}", e.line)
            params, ret = self.table.signatures[e.method]
            if len(params) != len(e.args):
                raise TypeError_(
                    f"{e.method} expects {len(params)} args, got {len(e.args)}", e.line
                )
            for a, (pname, pty) in zip(e.args, params):
                self._type(a, sid, spec)
                if a.ty != pty:
                    raise TypeError_(f"argument {pname!r} expects {pty}, got {a.ty}", e.line)
            if ret == ast.T_VOID:
                raise TypeError_(f"void call {e.method} used as a value", e.line)
            e.ty = ret
        elif isinstance(e, (ast.Result, ast.Old, ast.Quant, ast.Implies, ast.Iff)):
            if spec is None:
                raise TypeError_("specification form in program code", e.line)
            spec.type_spec_node(e, self, sid)
        else:
            raise TypeError_(f"unhandled expression {type(e).__name__}", e.line)


class _SpecCtx:
    """Typing context for one specification clause."""

    def __init__(self, kind: str, visible: dict[str, str], result_ty: str | None):
        self.kind = kind
        self.visible = visible  # name -> type
        self.result_ty = result_ty
        self.binders: list[str] = []

    def lookup(self, name: str, line: int) -> str:
        if name in self.binders:
            return ast.T_INT
        if name in self.visible:
            return self.visible[name]
        raise ScopeError(f"unknown identifier {name!r} in specification", line)

    def type_spec_node(self, e: ast.Expr, res: _Resolver, sid: int):
        if isinstance(e, ast.Result):
            if self.kind != ast.ENSURES:
                raise ScopeError("\\result is only valid in an ensures clause", e.line)
            if self.result_ty in (None, ast.T_VOID):
                raise TypeError_("\\result in a void method", e.line)
            e.ty = self.result_ty
        elif isinstance(e, ast.Old):
            if self.kind != ast.ENSURES:
                raise ScopeError("\\old is only valid in an ensures clause", e.line)
            for sub in ast.walk_exprs(e.inner):
                if isinstance(sub, (ast.Result, ast.Old)):
                    raise ScopeError("\\result and nested \\old are invalid inside \\old", e.line)
            res._type(e.inner, sid, self)
            e.ty = e.inner.ty
        elif isinstance(e, (ast.Implies, ast.Iff)):
            res._type(e.left, sid, self)
            res._type(e.right, sid, self)
            _want(e.left, ast.T_BOOL, "implication operand")
            _want(e.right, ast.T_BOOL, "implication operand")
            e.ty = ast.T_BOOL
        elif isinstance(e, ast.Quant):
            if e.binder in self.binders or e.binder in self.visible:
                raise ScopeError(f"quantifier binder {e.binder!r} shadows another name", e.line)
            self.binders.append(e.binder)
            res._type(e.range_, sid, self)
            _want(e.range_, ast.T_BOOL, "quantifier range")
            e.bounds = extract_interval(e.range_, e.binder)
            res._type(e.body, sid, self)
            _want(e.body, ast.T_BOOL, "quantifier body")
            self.binders.pop()
            e.ty = ast.T_BOOL


def _want(e: ast.Expr, ty: str, what: str):
    if e.ty != ty:
        raise TypeError_(f"{what} must be {ty}, got {e.ty}", e.line)


def _must_return(body: list[ast.Stmt]) -> bool:
    for st in body:
        if isinstance(st, ast.Return):
            return True
        if isinstance(st, ast.If) and st.else_body is not None:
            if _must_return(st.then_body) and _must_return(st.else_body):
                return True
        if isinstance(st, ast.Block) and _must_return(st.body):
            return True
        # `while (true)` without break cannot complete normally
        if isinstance(st, ast.While) and isinstance(st.cond, ast.BoolLit) and st.cond.value:
            return True
    return False


# ------------------------------------------------------- quantifier ranges


def extract_interval(range_: ast.Expr, binder: str) -> list[tuple[str, ast.Expr, bool]]:
    """Decompose a quantifier range into bounds on the binder.

    Returns [(side, expr, inclusive)] with side 'lo' or 'hi'; requires at
    least one of each, and every conjunct must be a bound on the binder.
    """
    bounds: list[tuple[str, ast.Expr, bool]] = []

    def visit(e: ast.Expr):
        if isinstance(e, ast.Binary) and e.op == "&&":
            visit(e.left)
            visit(e.right)
            return
        if isinstance(e, ast.Binary) and e.op in ("<", "<=", ">", ">="):
            lb = isinstance(e.left, ast.VarRef) and e.left.name == binder
            rb = isinstance(e.right, ast.VarRef) and e.right.name == binder
            if lb == rb:
                raise UnboundedQuantifier(
                    f"range conjunct must compare {binder!r} with a bound", e.line
                )
            other = e.right if lb else e.left
            if any(
                isinstance(x, ast.VarRef) and x.name == binder for x in ast.walk_exprs(other)
            ):
                raise UnboundedQuantifier(f"bound expression mentions {binder!r}", e.line)
            # normalize to binder REL other
            op = e.op if lb else {"<": ">", "<=": ">=", ">": "<", ">=": "<="}[e.op]
            if op in (">", ">="):
                bounds.append(("lo", other, op == ">="))
            else:
                bounds.append(("hi", other, op == "<="))
            return
        raise UnboundedQuantifier(
            "quantifier range must be a conjunction of bounds on the binder", e.line
        )

    visit(range_)
    sides = {s for s, _, _ in bounds}
    if sides != {"lo", "hi"}:
        raise UnboundedQuantifier(
            f"quantifier range must bound {binder!r} from both sides", range_.line
        )
    return bounds


# ------------------------------------------------------------ public entry


def resolve_scopes(unit: ast.SourceUnit) -> SymbolTable:
    """Bind every variable reference and index def/use sites per variable."""
    return _Resolver(unit).run()


def spec_visibility(
    unit: ast.SourceUnit, table: SymbolTable, kind: str, anchor: ast.Anchor
) -> tuple[dict[str, str], str | None]:
    """Names visible to a clause at `anchor`, plus the method return type."""
    if kind in (ast.REQUIRES, ast.ENSURES):
        if not isinstance(anchor, str):
            raise ScopeError(f"{kind} must anchor to a method")
        params, ret = table.signatures[anchor]
        return {p: t for p, t in params}, ret
    if not isinstance(anchor, int):
        raise ScopeError("loop_invariant must anchor to a loop")
    for mname, sc in table.scopes.items():
        if anchor in sc.loop_visible:
            return {n: v.type_tag for n, v in sc.loop_visible[anchor].items()}, None
    raise ScopeError(f"no loop with id {anchor}")


def parse_spec_expr(
    text: str, unit: ast.SourceUnit, table: SymbolTable, kind: str, anchor: ast.Anchor, *,
    line: int = 1,
) -> ast.Expr:
    """Parse and type-check one clause body in the scope of its anchor."""
    expr = parse_expr_text(text, spec_ctx=True, line=line)
    return check_spec_expr(expr, unit, table, kind, anchor)


def check_spec_expr(
    expr: ast.Expr, unit: ast.SourceUnit, table: SymbolTable, kind: str, anchor: ast.Anchor
) -> ast.Expr:
    """Type-check an already-parsed clause body in its anchor scope."""
    visible, ret = spec_visibility(unit, table, kind, anchor)
    ctx = _SpecCtx(kind, visible, ret)
    res = _Resolver.__new__(_Resolver)
    res.table = table
    res.unit = unit
    res._type(expr, -1, ctx)
    _want(expr, ast.T_BOOL, "specification clause")
    return expr


def attach_specs(parsed: ParsedUnit, table: SymbolTable) -> ast.SourceUnit:
    unit = parsed.unit
    clauses = []
    for i, raw in enumerate(parsed.raw_specs):
        expr = parse_spec_expr(
            raw.text, unit, table, raw.kind, raw.anchor, line=raw.line
        )
        clauses.append(ast.SpecClause(raw.kind, raw.anchor, expr, i, line=raw.line))
    unit.specs = clauses
    return unit
