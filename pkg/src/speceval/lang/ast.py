"""AST for the subject language and its embedded specification clauses.

Structural equality intentionally ignores source positions and inferred
types, so a pretty-printed and re-parsed unit compares equal to the
original. Nodes are treated as immutable after analysis; transformations
rebuild instead of mutating.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

# Type tags of the subject language. 'void' is only legal as a return type.
T_INT = "int"
T_BOOL = "boolean"
T_ARRAY = "int[]"
T_STRING = "String"
T_VOID = "void"

VALUE_TYPES = (T_INT, T_BOOL, T_ARRAY, T_STRING)

INT_MIN = -(2**31)
INT_MAX = 2**31 - 1


@dataclass(eq=True)
class Node:
    line: int = field(default=0, kw_only=True, compare=False, repr=False)


# ------------------------------------------------------------- expressions


@dataclass(eq=True)
class Expr(Node):
    # filled in by the type checker; not part of structural identity
    ty: Optional[str] = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass(eq=True)
class IntLit(Expr):
    value: int = 0


@dataclass(eq=True)
class BoolLit(Expr):
    value: bool = False


@dataclass(eq=True)
class StringLit(Expr):
    value: str = ""


@dataclass(eq=True)
class VarRef(Expr):
    name: str = ""


@dataclass(eq=True)
class ArrayIndex(Expr):
    base: Expr = None
    index: Expr = None


@dataclass(eq=True)
class FieldLen(Expr):
    """`a.length` on arrays, `s.length()` on strings."""

    base: Expr = None


@dataclass(eq=True)
class CharAt(Expr):
    """`s.charAt(i)`; yields the character code as an int."""

    base: Expr = None
    index: Expr = None


@dataclass(eq=True)
class Unary(Expr):
    op: str = ""  # '!' or '-'
    operand: Expr = None


@dataclass(eq=True)
class Binary(Expr):
    op: str = ""  # + - * / % < <= > >= == != && ||
    left: Expr = None
    right: Expr = None


@dataclass(eq=True)
class Call(Expr):
    method: str = ""
    args: list[Expr] = field(default_factory=list)


# Specification-only expression forms.


@dataclass(eq=True)
class Result(Expr):
    r"""`\result` in an ensures clause."""


@dataclass(eq=True)
class Old(Expr):
    r"""`\old(e)`: e evaluated in the method's entry state."""

    inner: Expr = None


@dataclass(eq=True)
class Quant(Expr):
    r"""`(\forall int i; range; body)` / `(\exists ...)` over a finite range."""

    kind: str = "forall"  # 'forall' | 'exists'
    binder: str = ""
    range_: Expr = None
    body: Expr = None
    # binder bounds cached by validation; recomputed lazily if absent
    bounds: Optional[list] = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass(eq=True)
class Implies(Expr):
    left: Expr = None
    right: Expr = None


@dataclass(eq=True)
class Iff(Expr):
    left: Expr = None
    right: Expr = None


@dataclass(eq=True)
class Mask(Expr):
    """Placeholder node used by task generation; prints as `<MASK>`."""


# -------------------------------------------------------------- statements


@dataclass(eq=True)
class Stmt(Node):
    pass


@dataclass(eq=True)
class VarDecl(Stmt):
    name: str = ""
    type_tag: str = T_INT
    init: Expr = None


@dataclass(eq=True)
class Assign(Stmt):
    target: Expr = None  # VarRef or ArrayIndex
    value: Expr = None


@dataclass(eq=True)
class If(Stmt):
    cond: Expr = None
    then_body: list[Stmt] = field(default_factory=list)
    else_body: Optional[list[Stmt]] = None
    site: int = field(default=0, kw_only=True, compare=False, repr=False)


@dataclass(eq=True)
class While(Stmt):
    cond: Expr = None
    body: list[Stmt] = field(default_factory=list)
    loop_id: int = 0
    site: int = field(default=0, kw_only=True, compare=False, repr=False)


@dataclass(eq=True)
class For(Stmt):
    init: Optional[Stmt] = None  # VarDecl or Assign
    cond: Optional[Expr] = None
    update: Optional[Stmt] = None  # Assign
    body: list[Stmt] = field(default_factory=list)
    loop_id: int = 0
    site: int = field(default=0, kw_only=True, compare=False, repr=False)


@dataclass(eq=True)
class Return(Stmt):
    value: Optional[Expr] = None


@dataclass(eq=True)
class Block(Stmt):
    body: list[Stmt] = field(default_factory=list)


# ------------------------------------------------------------------- unit


REQUIRES = "requires"
ENSURES = "ensures"
LOOP_INVARIANT = "loop_invariant"

SPEC_KINDS = (REQUIRES, ENSURES, LOOP_INVARIANT)

# Anchor of a clause: a method name for requires/ensures, a loop id for
# loop invariants.
Anchor = Union[str, int]


@dataclass(eq=True)
class SpecClause(Node):
    kind: str = REQUIRES
    anchor: Anchor = ""
    expr: Expr = None
    # bookkeeping identity (position at parse time), not structure
    cid: int = field(default=0, compare=False)


@dataclass(eq=True)
class Method(Node):
    name: str = ""
    params: list[tuple[str, str]] = field(default_factory=list)  # (name, type)
    return_type: str = T_VOID
    body: list[Stmt] = field(default_factory=list)


@dataclass(eq=True)
class SourceUnit(Node):
    name: str = ""
    methods: list[Method] = field(default_factory=list)
    specs: list[SpecClause] = field(default_factory=list)

    def method(self, name: str) -> Method:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(name)

    def clauses_at(self, kind: str, anchor: Anchor) -> list[SpecClause]:
        return [c for c in self.specs if c.kind == kind and c.anchor == anchor]


def walk_stmts(body: list[Stmt]):
    """Yield every statement in `body`, depth first, preorder."""
    for st in body:
        yield st
        if isinstance(st, If):
            yield from walk_stmts(st.then_body)
            if st.else_body is not None:
                yield from walk_stmts(st.else_body)
        elif isinstance(st, While):
            yield from walk_stmts(st.body)
        elif isinstance(st, For):
            if st.init is not None:
                yield st.init
            if st.update is not None:
                yield st.update
            yield from walk_stmts(st.body)
        elif isinstance(st, Block):
            yield from walk_stmts(st.body)


def walk_exprs(e: Expr):
    """Yield every expression node under `e`, preorder."""
    if e is None:
        return
    yield e
    if isinstance(e, (ArrayIndex, CharAt)):
        yield from walk_exprs(e.base)
        yield from walk_exprs(e.index)
    elif isinstance(e, FieldLen):
        yield from walk_exprs(e.base)
    elif isinstance(e, Unary):
        yield from walk_exprs(e.operand)
    elif isinstance(e, Binary):
        yield from walk_exprs(e.left)
        yield from walk_exprs(e.right)
    elif isinstance(e, Call):
        for a in e.args:
            yield from walk_exprs(a)
    elif isinstance(e, Old):
        yield from walk_exprs(e.inner)
    elif isinstance(e, Quant):
        yield from walk_exprs(e.range_)
        yield from walk_exprs(e.body)
    elif isinstance(e, (Implies, Iff)):
        yield from walk_exprs(e.left)
        yield from walk_exprs(e.right)


def stmt_exprs(st: Stmt):
    """Yield the expressions directly owned by one statement (not nested stmts)."""
    if isinstance(st, VarDecl):
        yield st.init
    elif isinstance(st, Assign):
        yield st.target
        yield st.value
    elif isinstance(st, If):
        yield st.cond
    elif isinstance(st, While):
        yield st.cond
    elif isinstance(st, For):
        if st.cond is not None:
            yield st.cond
    elif isinstance(st, Return):
        if st.value is not None:
            yield st.value


def unit_loops(unit: SourceUnit) -> list[Stmt]:
    """All loop statements of the unit in source order."""
    loops = []
    for m in unit.methods:
        for st in walk_stmts(m.body):
            if isinstance(st, (While, For)):
                loops.append(st)
    loops.sort(key=lambda s: s.loop_id)
    return loops
