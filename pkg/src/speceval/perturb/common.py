"""Shared machinery for the five semantic-preserving perturbations:
fresh-name generation, alpha-aware renaming, loop renumbering, def/use
aggregation, and the canonicalize-and-revalidate finalization step."""

from __future__ import annotations

import copy
import string
from dataclasses import dataclass, field
from random import Random

from ..lang import ast, parse_unit, print_unit

NAME_ALPHABET = string.ascii_letters
NAME_ALNUM = string.ascii_letters + string.digits

KIND_DEFUSE = "DefUseBreak"
KIND_FLIP = "IfElseFlip"
KIND_SWAP = "IndependentSwap"
KIND_RANDOM = "NameRandom"
KIND_SHUFFLE = "NameShuffle"

ALL_KINDS = (KIND_DEFUSE, KIND_FLIP, KIND_SWAP, KIND_RANDOM, KIND_SHUFFLE)


@dataclass
class DefUseBreakRule:
    """One applied def-use break: var2 supersedes var1 from the break point on."""

    method: str
    var1: str
    var2: str
    affected_loops: set = field(default_factory=set)  # original loop ids


@dataclass
class PerturbedUnit:
    kind: str
    unit: ast.SourceUnit
    rename_map: dict[str, str]
    spec_migration: dict[int, ast.SpecClause]
    seed: int
    # original anchor -> anchor in the perturbed unit (methods and loops)
    anchor_map: dict = field(default_factory=dict)
    break_rules: list[DefUseBreakRule] = field(default_factory=list)

    def migrate_clause(self, clause: ast.SpecClause) -> ast.SpecClause:
        """Rewrite any clause of the original unit (ground truth or task
        candidate) so it is equivalent on the perturbed unit.

        For def-use breaks only loop invariants downstream of the break
        point move to the new name: the broken variable is never written
        after the break, so method contracts (which can only see
        parameters) stay valid verbatim.
        """
        anchor = self.anchor_map.get(clause.anchor, clause.anchor)
        expr = clause.expr
        if self.kind in (KIND_RANDOM, KIND_SHUFFLE):
            expr = rename_spec_expr(expr, self.rename_map)
        elif self.kind == KIND_DEFUSE:
            for rule in self.break_rules:
                if clause.kind == ast.LOOP_INVARIANT and clause.anchor in rule.affected_loops:
                    expr = rename_spec_expr(expr, {rule.var1: rule.var2})
        return ast.SpecClause(clause.kind, anchor, expr, clause.cid, line=clause.line)

    def migrate_method_name(self, name: str) -> str:
        return self.rename_map.get(name, name) if self.kind == KIND_RANDOM else name


def identifiers_of(unit: ast.SourceUnit) -> set[str]:
    """Every name occurring in the unit: methods, variables, spec binders."""
    names: set[str] = set()
    for m in unit.methods:
        names.add(m.name)
        for pname, _ in m.params:
            names.add(pname)
        for st in ast.walk_stmts(m.body):
            if isinstance(st, ast.VarDecl):
                names.add(st.name)
            for e in ast.stmt_exprs(st):
                for sub in ast.walk_exprs(e):
                    if isinstance(sub, ast.VarRef):
                        names.add(sub.name)
    for c in unit.specs:
        for sub in ast.walk_exprs(c.expr):
            if isinstance(sub, ast.VarRef):
                names.add(sub.name)
            elif isinstance(sub, ast.Quant):
                names.add(sub.binder)
    return names


def fresh_name(rng: Random, taken: set[str]) -> str:
    """Five alphanumeric characters, leading letter, absent from `taken`."""
    while True:
        name = rng.choice(NAME_ALPHABET) + "".join(rng.choice(NAME_ALNUM) for _ in range(4))
        if name not in taken:
            taken.add(name)
            return name


# ----------------------------------------------------------------- renames


class CaptureError(Exception):
    """A rename target collides with an enclosing quantifier binder."""


def rename_spec_expr(e: ast.Expr, mapping: dict[str, str]) -> ast.Expr:
    """Rebuild a spec expression with variables and calls renamed.

    Quantifier binders shadow: bound occurrences are never renamed, and a
    rename whose target equals an enclosing binder raises CaptureError.
    """

    def go(e: ast.Expr, bound: frozenset) -> ast.Expr:
        if isinstance(e, ast.VarRef):
            if e.name in bound or e.name not in mapping:
                return e
            new = mapping[e.name]
            if new in bound:
                raise CaptureError(f"renaming {e.name!r} to bound {new!r}")
            out = ast.VarRef(new, line=e.line)
            out.ty = e.ty
            return out
        if isinstance(e, ast.Old):
            out = ast.Old(go(e.inner, bound), line=e.line)
            out.ty = e.ty
            return out
        if isinstance(e, ast.Quant):
            out = ast.Quant(
                e.kind, e.binder, go(e.range_, bound | {e.binder}),
                go(e.body, bound | {e.binder}), line=e.line,
            )
            out.ty = e.ty
            out.bounds = None
            return out
        if isinstance(e, ast.ArrayIndex):
            out = ast.ArrayIndex(go(e.base, bound), go(e.index, bound), line=e.line)
        elif isinstance(e, ast.FieldLen):
            out = ast.FieldLen(go(e.base, bound), line=e.line)
        elif isinstance(e, ast.CharAt):
            out = ast.CharAt(go(e.base, bound), go(e.index, bound), line=e.line)
        elif isinstance(e, ast.Unary):
            out = ast.Unary(e.op, go(e.operand, bound), line=e.line)
        elif isinstance(e, ast.Binary):
            out = ast.Binary(e.op, go(e.left, bound), go(e.right, bound), line=e.line)
        elif isinstance(e, ast.Call):
            out = ast.Call(
                mapping.get(e.method, e.method),
                [go(a, bound) for a in e.args],
                line=e.line,
            )
        elif isinstance(e, ast.Implies):
            out = ast.Implies(go(e.left, bound), go(e.right, bound), line=e.line)
        elif isinstance(e, ast.Iff):
            out = ast.Iff(go(e.left, bound), go(e.right, bound), line=e.line)
        else:
            return e  # literals, \result, <MASK>
        out.ty = e.ty
        return out

    return go(e, frozenset())


def rename_in_program(unit: ast.SourceUnit, mapping: dict[str, str]):
    """In-place rename of variables, parameters, calls, and method names."""
    for m in unit.methods:
        m.name = mapping.get(m.name, m.name)
        m.params = [(mapping.get(n, n), t) for n, t in m.params]
        for st in ast.walk_stmts(m.body):
            if isinstance(st, ast.VarDecl):
                st.name = mapping.get(st.name, st.name)
            for e in ast.stmt_exprs(st):
                for sub in ast.walk_exprs(e):
                    if isinstance(sub, ast.VarRef):
                        sub.name = mapping.get(sub.name, sub.name)
                    elif isinstance(sub, ast.Call):
                        sub.method = mapping.get(sub.method, sub.method)


# --------------------------------------------------------- loop renumbering


def renumber_loops(unit: ast.SourceUnit) -> dict[int, int]:
    """Reassign loop ids in source order; returns old id -> new id."""
    mapping: dict[int, int] = {}
    counter = 0
    for m in unit.methods:
        for st in ast.walk_stmts(m.body):
            if isinstance(st, (ast.While, ast.For)):
                counter += 1
                mapping[st.loop_id] = counter
    for m in unit.methods:
        for st in ast.walk_stmts(m.body):
            if isinstance(st, (ast.While, ast.For)):
                st.loop_id = mapping[st.loop_id]
    for c in unit.specs:
        if c.kind == ast.LOOP_INVARIANT:
            c.anchor = mapping[c.anchor]
    return mapping


# ------------------------------------------------------------ def/use sets


def stmt_def_use(st: ast.Stmt) -> tuple[set[str], set[str], bool]:
    """Aggregate (defs, uses, blocked) for one statement subtree.

    blocked marks statements that must not be reordered: anything
    containing a call (conservatively reaches arbitrary state) or a
    return (control transfer the def/use sets cannot express).
    """
    defs: set[str] = set()
    uses: set[str] = set()
    blocked = False

    def expr_uses(e: ast.Expr):
        nonlocal blocked
        for sub in ast.walk_exprs(e):
            if isinstance(sub, ast.VarRef):
                uses.add(sub.name)
            elif isinstance(sub, ast.Call):
                blocked = True

    def visit(st: ast.Stmt):
        nonlocal blocked
        if isinstance(st, ast.VarDecl):
            defs.add(st.name)
            expr_uses(st.init)
        elif isinstance(st, ast.Assign):
            if isinstance(st.target, ast.VarRef):
                defs.add(st.target.name)
            else:
                # a[i] = e both uses and redefines a
                defs.add(st.target.base.name)
                uses.add(st.target.base.name)
                expr_uses(st.target.index)
            expr_uses(st.value)
        elif isinstance(st, ast.If):
            expr_uses(st.cond)
            for s in st.then_body:
                visit(s)
            if st.else_body is not None:
                for s in st.else_body:
                    visit(s)
        elif isinstance(st, ast.While):
            expr_uses(st.cond)
            for s in st.body:
                visit(s)
        elif isinstance(st, ast.For):
            if st.init is not None:
                visit(st.init)
            if st.cond is not None:
                expr_uses(st.cond)
            if st.update is not None:
                visit(st.update)
            for s in st.body:
                visit(s)
        elif isinstance(st, ast.Return):
            blocked = True
            if st.value is not None:
                expr_uses(st.value)
        elif isinstance(st, ast.Block):
            for s in st.body:
                visit(s)

    visit(st)
    return defs, uses, blocked


# ------------------------------------------------------------- finalization


def clone_unit(unit: ast.SourceUnit) -> ast.SourceUnit:
    return copy.deepcopy(unit)


def finalize(
    kind: str,
    transformed: ast.SourceUnit,
    original: ast.SourceUnit,
    rename_map: dict[str, str],
    seed: int,
    *,
    break_rules: list[DefUseBreakRule] | None = None,
    method_anchor_map: dict[str, str] | None = None,
) -> PerturbedUnit:
    """Renumber loops, canonicalize through print/parse, and build the
    migration record. Raises if the transformed unit fails re-validation."""
    from ..lang.printer import emit_order

    loop_map = renumber_loops(transformed)
    # moving loops (flip/swap) changes print order; align before comparing
    ordered = emit_order(transformed)
    if len(ordered) != len(transformed.specs):
        raise AssertionError(f"{kind}: clause lost during transformation")
    transformed.specs = ordered
    reparsed = parse_unit(print_unit(transformed))
    if reparsed != transformed:
        raise AssertionError(f"{kind}: perturbed unit does not survive canonicalization")
    anchor_map: dict = {old: new for old, new in loop_map.items() if old != new}
    if method_anchor_map:
        anchor_map.update(method_anchor_map)
    migration = {
        orig.cid: mig for orig, mig in zip(ordered, reparsed.specs)
    }
    return PerturbedUnit(
        kind=kind,
        unit=reparsed,
        rename_map=dict(rename_map),
        spec_migration=migration,
        seed=seed,
        anchor_map=anchor_map,
        break_rules=break_rules or [],
    )


def forced_choices(rng: Random, n: int, p: float = 0.5) -> list[bool]:
    """n independent coin flips with at least one True."""
    picks = [rng.random() < p for _ in range(n)]
    if n and not any(picks):
        picks[rng.randrange(n)] = True
    return picks
