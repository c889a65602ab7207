"""Canonical pretty-printer.

Whitespace is normalized (4-space indents, one space around binary
operators); identifier spelling and statement order are preserved, so a
perturbation is the only source of textual difference between variants.
Parenthesization is minimal by precedence; re-parsing printed text yields
a structurally identical unit.
"""

from __future__ import annotations

from . import ast

_PREC_IFF = 1
_PREC_IMPLIES = 2
_PREC_OR = 3
_PREC_AND = 4
_PREC_EQ = 5
_PREC_REL = 6
_PREC_ADD = 7
_PREC_MUL = 8
_PREC_UNARY = 9
_PREC_ATOM = 10

_BIN_PREC = {
    "||": _PREC_OR, "&&": _PREC_AND,
    "==": _PREC_EQ, "!=": _PREC_EQ,
    "<": _PREC_REL, "<=": _PREC_REL, ">": _PREC_REL, ">=": _PREC_REL,
    "+": _PREC_ADD, "-": _PREC_ADD,
    "*": _PREC_MUL, "/": _PREC_MUL, "%": _PREC_MUL,
}


def expr_to_text(e: ast.Expr, prec: int = 0) -> str:
    if isinstance(e, ast.IntLit):
        if e.value == ast.INT_MAX:
            return "Integer.MAX_VALUE"
        if e.value == ast.INT_MIN:
            return "Integer.MIN_VALUE"
        return str(e.value)
    if isinstance(e, ast.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, ast.StringLit):
        body = e.value.replace("\\", "\\\\").replace('"', '\\"')
        body = body.replace("\n", "\\n").replace("\t", "\\t")
        return f'"{body}"'
    if isinstance(e, ast.VarRef):
        return e.name
    if isinstance(e, ast.Mask):
        return "<MASK>"
    if isinstance(e, ast.Result):
        return "\\result"
    if isinstance(e, ast.ArrayIndex):
        return f"{expr_to_text(e.base, _PREC_ATOM)}[{expr_to_text(e.index)}]"
    if isinstance(e, ast.FieldLen):
        suffix = ".length" if e.base.ty == ast.T_ARRAY else ".length()"
        return f"{expr_to_text(e.base, _PREC_ATOM)}{suffix}"
    if isinstance(e, ast.CharAt):
        return f"{expr_to_text(e.base, _PREC_ATOM)}.charAt({expr_to_text(e.index)})"
    if isinstance(e, ast.Call):
        args = ", ".join(expr_to_text(a) for a in e.args)
        return f"{e.method}({args})"
    if isinstance(e, ast.Old):
        return f"\\old({expr_to_text(e.inner)})"
    if isinstance(e, ast.Quant):
        word = "\\forall" if e.kind == "forall" else "\\exists"
        return (
            f"({word} int {e.binder}; "
            f"{expr_to_text(e.range_)}; {expr_to_text(e.body)})"
        )
    if isinstance(e, ast.Unary):
        text = f"{e.op}{expr_to_text(e.operand, _PREC_ATOM)}"
        return _wrap(text, _PREC_UNARY, prec)
    if isinstance(e, ast.Binary):
        p = _BIN_PREC[e.op]
        text = f"{expr_to_text(e.left, p)} {e.op} {expr_to_text(e.right, p + 1)}"
        return _wrap(text, p, prec)
    if isinstance(e, ast.Implies):
        text = (
            f"{expr_to_text(e.left, _PREC_IMPLIES + 1)} ==> "
            f"{expr_to_text(e.right, _PREC_IMPLIES)}"
        )
        return _wrap(text, _PREC_IMPLIES, prec)
    if isinstance(e, ast.Iff):
        text = (
            f"{expr_to_text(e.left, _PREC_IFF)} <==> "
            f"{expr_to_text(e.right, _PREC_IFF + 1)}"
        )
        return _wrap(text, _PREC_IFF, prec)
    raise ValueError(f"cannot print {type(e).__name__}")


def _wrap(text: str, own: int, context: int) -> str:
    return f"({text})" if context > own else text


def clause_to_text(clause: ast.SpecClause) -> str:
    return f"//@ {clause.kind} {expr_to_text(clause.expr)};"


def _type_text(ty: str) -> str:
    return ty


def print_unit(unit: ast.SourceUnit) -> str:
    out: list[str] = [f"class {unit.name} {{"]
    for idx, m in enumerate(unit.methods):
        if idx:
            out.append("")
        for clause in unit.specs:
            if clause.kind in (ast.REQUIRES, ast.ENSURES) and clause.anchor == m.name:
                out.append("    " + clause_to_text(clause))
        params = ", ".join(f"{_type_text(t)} {n}" for n, t in m.params)
        out.append(f"    static {_type_text(m.return_type)} {m.name}({params}) {{")
        _print_body(out, m.body, 2, unit)
        out.append("    }")
    out.append("}")
    return "\n".join(out) + "\n"


def _print_body(out: list[str], body: list[ast.Stmt], depth: int, unit: ast.SourceUnit):
    pad = "    " * depth
    for st in body:
        _print_stmt(out, st, depth, unit, pad)


def _print_stmt(out, st: ast.Stmt, depth: int, unit: ast.SourceUnit, pad: str):
    if isinstance(st, ast.VarDecl):
        out.append(f"{pad}{_type_text(st.type_tag)} {st.name} = {expr_to_text(st.init)};")
    elif isinstance(st, ast.Assign):
        out.append(f"{pad}{expr_to_text(st.target)} = {expr_to_text(st.value)};")
    elif isinstance(st, ast.Return):
        if st.value is None:
            out.append(f"{pad}return;")
        else:
            out.append(f"{pad}return {expr_to_text(st.value)};")
    elif isinstance(st, ast.If):
        _print_if(out, st, depth, unit, pad)
    elif isinstance(st, ast.While):
        for clause in unit.specs:
            if clause.kind == ast.LOOP_INVARIANT and clause.anchor == st.loop_id:
                out.append(pad + clause_to_text(clause))
        out.append(f"{pad}while ({expr_to_text(st.cond)}) {{")
        _print_body(out, st.body, depth + 1, unit)
        out.append(f"{pad}}}")
    elif isinstance(st, ast.For):
        for clause in unit.specs:
            if clause.kind == ast.LOOP_INVARIANT and clause.anchor == st.loop_id:
                out.append(pad + clause_to_text(clause))
        init = _for_clause_text(st.init)
        cond = expr_to_text(st.cond) if st.cond is not None else ""
        update = _for_clause_text(st.update)
        out.append(f"{pad}for ({init}; {cond}; {update}) {{")
        _print_body(out, st.body, depth + 1, unit)
        out.append(f"{pad}}}")
    elif isinstance(st, ast.Block):
        out.append(f"{pad}{{")
        _print_body(out, st.body, depth + 1, unit)
        out.append(f"{pad}}}")
    else:
        raise ValueError(f"cannot print {type(st).__name__}")


def _print_if(out, st: ast.If, depth: int, unit: ast.SourceUnit, pad: str):
    out.append(f"{pad}if ({expr_to_text(st.cond)}) {{")
    _print_body(out, st.then_body, depth + 1, unit)
    cur = st
    # else-if chains print flat; re-parsing restores the same nesting
    while (
        cur.else_body is not None
        and len(cur.else_body) == 1
        and isinstance(cur.else_body[0], ast.If)
    ):
        cur = cur.else_body[0]
        out.append(f"{pad}}} else if ({expr_to_text(cur.cond)}) {{")
        _print_body(out, cur.then_body, depth + 1, unit)
    if cur.else_body is None:
        out.append(f"{pad}}}")
    else:
        out.append(f"{pad}}} else {{")
        _print_body(out, cur.else_body, depth + 1, unit)
        out.append(f"{pad}}}")


def _for_clause_text(st) -> str:
    if st is None:
        return ""
    if isinstance(st, ast.VarDecl):
        return f"{_type_text(st.type_tag)} {st.name} = {expr_to_text(st.init)}"
    if isinstance(st, ast.Assign):
        return f"{expr_to_text(st.target)} = {expr_to_text(st.value)}"
    raise ValueError("bad for clause")


def emit_order(unit: ast.SourceUnit) -> list[ast.SpecClause]:
    """Clauses in the order print_unit emits them (= re-parse order)."""
    out: list[ast.SpecClause] = []
    for m in unit.methods:
        out.extend(
            c for c in unit.specs
            if c.kind in (ast.REQUIRES, ast.ENSURES) and c.anchor == m.name
        )
        for st in ast.walk_stmts(m.body):
            if isinstance(st, (ast.While, ast.For)):
                out.extend(
                    c for c in unit.specs
                    if c.kind == ast.LOOP_INVARIANT and c.anchor == st.loop_id
                )
    return out
