"""The five perturbations. Each is a pure function of (unit, seed) and
returns a PerturbedUnit whose migrated specs are equivalent on the new
unit; semantics preservation is separately enforced by differential
execution in the pipeline."""

from __future__ import annotations

from random import Random

from ..errors import (
    NoEligibleBranch,
    NoEligiblePair,
    NoEligibleVariable,
    NoShufflePossible,
)
from ..lang import ast
from .common import (
    KIND_DEFUSE,
    KIND_FLIP,
    KIND_RANDOM,
    KIND_SHUFFLE,
    KIND_SWAP,
    DefUseBreakRule,
    PerturbedUnit,
    clone_unit,
    finalize,
    forced_choices,
    fresh_name,
    identifiers_of,
    rename_spec_expr,
    stmt_def_use,
)

# ------------------------------------------------------------ def-use break


def _rebind_regions(m: ast.Method):
    """Per variable: (last rebind top-level index or -1 for params, ok flag).

    A rebind is a declaration or whole-variable assignment. Variables
    rebound inside loops or non-top-level blocks are ineligible; array
    element writes alias through the new name and do not count.
    """
    info: dict[str, dict] = {}
    for pname, pty in m.params:
        info[pname] = {"ty": pty, "last": -1, "ok": True}

    def scan(stmts, top: bool, in_loop: bool, top_idx: int | None):
        for i, st in enumerate(stmts):
            idx = i if top else top_idx
            if isinstance(st, ast.VarDecl):
                rec = info.setdefault(st.name, {"ty": st.type_tag, "last": idx, "ok": True})
                rec["ty"] = st.type_tag
                rec["last"] = idx
                if not top or in_loop:
                    rec["ok"] = False
            elif isinstance(st, ast.Assign) and isinstance(st.target, ast.VarRef):
                name = st.target.name
                rec = info.setdefault(name, {"ty": None, "last": idx, "ok": True})
                rec["last"] = idx
                if not top or in_loop:
                    rec["ok"] = False
            elif isinstance(st, ast.If):
                scan(st.then_body, False, in_loop, idx)
                if st.else_body is not None:
                    scan(st.else_body, False, in_loop, idx)
            elif isinstance(st, ast.While):
                scan(st.body, False, True, idx)
            elif isinstance(st, ast.For):
                if st.init is not None:
                    scan([st.init], False, True, idx)
                if st.update is not None:
                    scan([st.update], False, True, idx)
                scan(st.body, False, True, idx)
            elif isinstance(st, ast.Block):
                scan(st.body, False, in_loop, idx)

    scan(m.body, True, False, None)
    return info


def _uses_after(m: ast.Method, name: str, after_idx: int) -> bool:
    for sub in ast.walk_stmts(m.body[after_idx:]):
        for e in ast.stmt_exprs(sub):
            if any(isinstance(x, ast.VarRef) and x.name == name for x in ast.walk_exprs(e)):
                return True
    return False


def defuse_break(unit: ast.SourceUnit, seed: int) -> PerturbedUnit:
    """Insert `T var2 = var1;` after var1's final rebind and redirect every
    later read of var1 (including array-element writes, which alias) to
    var2. Ensures and downstream loop invariants migrate to the new name;
    \\old(var1) keeps naming the entry value."""
    rng = Random(seed)
    eligible: list[tuple[str, str, int, str]] = []  # (method, var, insert_idx, ty)
    seen_names: set[str] = set()
    for m in unit.methods:
        regions = _rebind_regions(m)
        for name, rec in regions.items():
            if not rec["ok"] or rec["ty"] is None or name in seen_names:
                continue
            insert_idx = rec["last"] + 1
            if _uses_after(m, name, insert_idx):
                eligible.append((m.name, name, insert_idx, rec["ty"]))
                seen_names.add(name)
    if not eligible:
        raise NoEligibleVariable(f"{unit.name}: no def-use chain can be broken")

    picks = forced_choices(rng, len(eligible))
    chosen = [item for item, p in zip(eligible, picks) if p]
    taken = identifiers_of(unit)
    new = clone_unit(unit)
    rename_map: dict[str, str] = {}
    rules: list[DefUseBreakRule] = []
    by_method: dict[str, list[tuple[str, int, str]]] = {}
    for mname, var, idx, ty in chosen:
        by_method.setdefault(mname, []).append((var, idx, ty))

    for m in new.methods:
        plan = by_method.get(m.name)
        if not plan:
            continue
        # insert bottom-up so earlier indices stay valid
        for var, idx, ty in sorted(plan, key=lambda p: -p[1]):
            var2 = fresh_name(rng, taken)
            rename_map[var] = var2
            affected = {
                st.loop_id
                for top in m.body[idx:]
                for st in ast.walk_stmts([top])
                if isinstance(st, (ast.While, ast.For))
            }
            rules.append(DefUseBreakRule(m.name, var, var2, affected))
            decl = ast.VarDecl(var2, ty, ast.VarRef(var, ty=ty), line=0)
            for top in m.body[idx:]:
                for sub in ast.walk_stmts([top]):
                    for e in ast.stmt_exprs(sub):
                        for x in ast.walk_exprs(e):
                            if isinstance(x, ast.VarRef) and x.name == var:
                                x.name = var2
            m.body.insert(idx, decl)

    new.specs = [_migrate_defuse(c, rules) for c in new.specs]
    return finalize(KIND_DEFUSE, new, unit, rename_map, seed, break_rules=rules)


def _migrate_defuse(clause: ast.SpecClause, rules: list[DefUseBreakRule]) -> ast.SpecClause:
    # method contracts stay verbatim (the broken variable keeps its value
    # and the new local is out of their scope); downstream invariants move
    expr = clause.expr
    for rule in rules:
        if clause.kind == ast.LOOP_INVARIANT and clause.anchor in rule.affected_loops:
            expr = rename_spec_expr(expr, {rule.var1: rule.var2})
    return ast.SpecClause(clause.kind, clause.anchor, expr, clause.cid, line=clause.line)


# -------------------------------------------------------------- if-else flip


def ifelse_flip(unit: ast.SourceUnit, seed: int) -> PerturbedUnit:
    """Swap then/else branches of seed-chosen if-else statements and negate
    their conditions; specs inside a branch move with it."""
    rng = Random(seed)
    sites = [
        st
        for m in unit.methods
        for st in ast.walk_stmts(m.body)
        if isinstance(st, ast.If) and st.else_body is not None
    ]
    if not sites:
        raise NoEligibleBranch(f"{unit.name}: no if-else statement to flip")
    picks = forced_choices(rng, len(sites))

    new = clone_unit(unit)
    new_sites = [
        st
        for m in new.methods
        for st in ast.walk_stmts(m.body)
        if isinstance(st, ast.If) and st.else_body is not None
    ]
    for st, p in zip(new_sites, picks):
        if not p:
            continue
        neg = ast.Unary("!", st.cond, line=st.cond.line)
        neg.ty = ast.T_BOOL
        st.cond = neg
        st.then_body, st.else_body = st.else_body, st.then_body
    return finalize(KIND_FLIP, new, unit, {}, seed)


# ---------------------------------------------------------- independent swap


def _blocks_of(unit: ast.SourceUnit):
    """Every statement list of the unit (method bodies, branches, loop
    bodies, braced blocks), in preorder."""
    out = []

    def visit(stmts):
        out.append(stmts)
        for st in stmts:
            if isinstance(st, ast.If):
                visit(st.then_body)
                if st.else_body is not None:
                    visit(st.else_body)
            elif isinstance(st, ast.While):
                visit(st.body)
            elif isinstance(st, ast.For):
                visit(st.body)
            elif isinstance(st, ast.Block):
                visit(st.body)

    for m in unit.methods:
        visit(m.body)
    return out


def _pair_sites(unit: ast.SourceUnit) -> list[tuple[list, int]]:
    sites = []
    for block in _blocks_of(unit):
        for i in range(len(block) - 1):
            d1, u1, b1 = stmt_def_use(block[i])
            d2, u2, b2 = stmt_def_use(block[i + 1])
            if b1 or b2:
                continue
            if d1 & d2 or u1 & d2 or d1 & u2:
                continue
            sites.append((block, i))
    return sites


def find_independent_pairs(unit: ast.SourceUnit) -> list[tuple[ast.Stmt, ast.Stmt]]:
    """Adjacent same-block statement pairs with disjoint def/def, use/def,
    and def/use sets; statements containing calls or returns are excluded."""
    return [(block[i], block[i + 1]) for block, i in _pair_sites(unit)]


def independent_swap(unit: ast.SourceUnit, seed: int) -> PerturbedUnit:
    rng = Random(seed)
    if not _pair_sites(unit):
        raise NoEligiblePair(f"{unit.name}: no independent adjacent statements")
    new = clone_unit(unit)
    sites = _pair_sites(new)
    picks = forced_choices(rng, len(sites))
    used: set[tuple[int, int]] = set()
    for (block, i), p in zip(sites, picks):
        if not p:
            continue
        # overlapping pairs share a statement; first pick wins
        if (id(block), i - 1) in used or (id(block), i + 1) in used:
            continue
        used.add((id(block), i))
        block[i], block[i + 1] = block[i + 1], block[i]
    return finalize(KIND_SWAP, new, unit, {}, seed)


# ----------------------------------------------------------------- renaming


def _var_names_with_types(unit: ast.SourceUnit) -> dict[str, set[str]]:
    """Variable name -> set of types it is declared with anywhere."""
    types: dict[str, set[str]] = {}
    for m in unit.methods:
        for pname, pty in m.params:
            types.setdefault(pname, set()).add(pty)
        for st in ast.walk_stmts(m.body):
            if isinstance(st, ast.VarDecl):
                types.setdefault(st.name, set()).add(st.type_tag)
    return types


def _apply_rename(unit: ast.SourceUnit, mapping: dict[str, str]) -> ast.SourceUnit:
    from .common import rename_in_program

    new = clone_unit(unit)
    rename_in_program(new, mapping)
    new.specs = [
        ast.SpecClause(
            c.kind,
            mapping.get(c.anchor, c.anchor) if isinstance(c.anchor, str) else c.anchor,
            rename_spec_expr(c.expr, mapping),
            c.cid,
            line=c.line,
        )
        for c in new.specs
    ]
    return new


def name_random(unit: ast.SourceUnit, seed: int) -> PerturbedUnit:
    """Fresh five-character names for every variable and method; specs and
    anchors are rewritten through the same map."""
    rng = Random(seed)
    taken = identifiers_of(unit)
    mapping: dict[str, str] = {}
    for m in unit.methods:
        mapping[m.name] = fresh_name(rng, taken)
    for name in sorted(_var_names_with_types(unit)):
        mapping[name] = fresh_name(rng, taken)
    new = _apply_rename(unit, mapping)
    method_map = {m: mapping[m] for m in (mm.name for mm in unit.methods)}
    return finalize(
        KIND_RANDOM, new, unit, mapping, seed, method_anchor_map=method_map
    )


def name_shuffle(unit: ast.SourceUnit, seed: int) -> PerturbedUnit:
    """Permute existing variable names within type-compatible groups,
    preferring derangements (a random single cycle per group).

    A permutation whose target collides with a quantifier binder would
    capture; such draws are discarded and redrawn.
    """
    from .common import CaptureError

    rng = Random(seed)
    types = _var_names_with_types(unit)
    if len(types) < 2:
        raise NoShufflePossible(f"{unit.name}: fewer than two variable names")
    groups: dict[str, list[str]] = {}
    for name in sorted(types):
        tys = types[name]
        if len(tys) == 1:
            groups.setdefault(next(iter(tys)), []).append(name)
    if not any(len(members) >= 2 for members in groups.values()):
        raise NoShufflePossible(
            f"{unit.name}: no type-compatible group of two or more names"
        )
    for _ in range(24):
        mapping: dict[str, str] = {}
        for ty in sorted(groups):
            members = groups[ty]
            if len(members) < 2:
                continue
            order = members[:]
            rng.shuffle(order)
            for i, name in enumerate(order):
                mapping[name] = order[(i + 1) % len(order)]
        try:
            new = _apply_rename(unit, mapping)
        except CaptureError:
            continue
        return finalize(KIND_SHUFFLE, new, unit, mapping, seed)
    raise NoShufflePossible(f"{unit.name}: every drawn permutation captures a binder")
