"""Construction of the four task types: spec mutation with runtime
refutation, four-option candidate assembly, AST masking, and generation
packaging. Builders are deterministic in (inputs, seed); tasks for
perturbed categories are obtained by migrating the original task so each
perturbed twin stays semantically equivalent."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from random import Random

from .errors import NoMaskableNode, SpecEvalError, UnrefutableMutant
from .lang import ast, check_spec_expr, clause_to_text, expr_to_text, resolve_scopes, strip_specs
from .lang.analysis import SymbolTable, spec_visibility
from .perturb import PerturbedUnit
from .runtime import TestCase, clause_correct

REL_OPS = ["<", "<=", ">", ">=", "==", "!="]
REL_OPS_RANGE = ["<", "<=", ">", ">="]  # inside quantifier ranges
ARITH_OPS = ["+", "-", "*"]
LOGIC_OPS = ["&&", "||"]

DEFAULT_MAX_RETRIES = 8

log = logging.getLogger(__name__)


# ------------------------------------------------------------ task records


@dataclass
class JudgementTask:
    unit: ast.SourceUnit  # specs stripped
    candidate: ast.SpecClause
    truth: bool


@dataclass
class SelectionTask:
    unit: ast.SourceUnit
    options: list[ast.SpecClause]  # exactly 4, labeled A-D by position
    answer: str  # label of the ground-truth option
    trivial_labels: list[str] = field(default_factory=list)

    LABELS = ("A", "B", "C", "D")


@dataclass
class InfillingTask:
    unit: ast.SourceUnit  # with ground-truth specs still attached
    masked_spec: ast.SpecClause
    hidden_answer: str
    source: ast.SpecClause = None
    mask_desc: tuple = None  # (node class, preorder index)


@dataclass
class GenerationTask:
    unit: ast.SourceUnit  # specs stripped
    required_anchors: list[tuple[ast.Anchor, str]]
    ground_truth: list[ast.SpecClause]


# ------------------------------------------------------------- trivial pool


class TrivialSpecPool:
    """Clauses too weak to be falsified on any type-compatible unit."""

    @staticmethod
    def candidates(kind: str, anchor: ast.Anchor, return_type: str | None) -> list[ast.Expr]:
        true_lit = ast.BoolLit(True)
        true_lit.ty = ast.T_BOOL
        out = [true_lit]
        if kind == ast.ENSURES and return_type == ast.T_INT:
            for op, value in (("<=", ast.INT_MAX), (">=", ast.INT_MIN)):
                res = ast.Result()
                res.ty = ast.T_INT
                lit = ast.IntLit(value)
                lit.ty = ast.T_INT
                cmp = ast.Binary(op, res, lit)
                cmp.ty = ast.T_BOOL
                out.append(cmp)
        return out

    @staticmethod
    def instantiate(
        kind: str, anchor: ast.Anchor, return_type: str | None, rng: Random
    ) -> ast.SpecClause:
        expr = rng.choice(TrivialSpecPool.candidates(kind, anchor, return_type))
        return ast.SpecClause(kind, anchor, expr, -1)


# ---------------------------------------------------------------- mutation


def _visible_vars(unit: ast.SourceUnit, table: SymbolTable, clause_kind: str,
                  anchor: ast.Anchor) -> dict[str, str]:
    visible, _ = spec_visibility(unit, table, clause_kind, anchor)
    return visible


def _components(expr: ast.Expr, visible: dict[str, str]):
    """Mutable components in preorder: (index, kind, payload)."""
    comps = []
    counter = [0]

    def descend(e: ast.Expr, binders: tuple, in_range: bool):
        idx = counter[0]
        counter[0] += 1
        if isinstance(e, ast.VarRef):
            ty = ast.T_INT if e.name in binders else visible.get(e.name)
            alts = sorted(
                n for n, t in visible.items() if t == ty and n != e.name
            ) + [b for b in binders if b != e.name and ty == ast.T_INT]
            alts = sorted(set(alts))
            if alts:
                comps.append((idx, "var", (alts, ty)))
        elif isinstance(e, ast.Binary):
            if e.op in REL_OPS:
                if e.left.ty == ast.T_INT:
                    pool = REL_OPS_RANGE if in_range else REL_OPS
                else:
                    pool = ["==", "!="]
                alts = [op for op in pool if op != e.op]
                if alts:
                    comps.append((idx, "op", alts))
            elif e.op in ARITH_OPS:
                comps.append((idx, "op", [op for op in ARITH_OPS if op != e.op]))
            elif e.op in LOGIC_OPS and not in_range:
                comps.append((idx, "op", [op for op in LOGIC_OPS if op != e.op]))
            descend(e.left, binders, in_range)
            descend(e.right, binders, in_range)
            return
        elif isinstance(e, (ast.Implies, ast.Iff)):
            comps.append((idx, "impl", None))
            descend(e.left, binders, in_range)
            descend(e.right, binders, in_range)
            return
        elif isinstance(e, ast.Quant):
            comps.append((idx, "quant", None))
            descend(e.range_, binders + (e.binder,), True)
            descend(e.body, binders + (e.binder,), False)
            return
        for child in _children(e):
            descend(child, binders, in_range)

    descend(expr, (), False)
    return comps


def _children(e: ast.Expr) -> list[ast.Expr]:
    if isinstance(e, (ast.ArrayIndex, ast.CharAt)):
        return [e.base, e.index]
    if isinstance(e, ast.FieldLen):
        return [e.base]
    if isinstance(e, ast.Unary):
        return [e.operand]
    if isinstance(e, ast.Call):
        return list(e.args)
    if isinstance(e, ast.Old):
        return [e.inner]
    return []


def _rebuild_with_plan(expr: ast.Expr, plan: dict):
    """Rebuild `expr` applying {preorder index: (kind, choice)}."""
    counter = [0]

    def go(e: ast.Expr):
        idx = counter[0]
        counter[0] += 1
        action = plan.get(idx)
        if isinstance(e, ast.VarRef):
            if action is not None and action[0] == "var":
                out = ast.VarRef(action[1], line=e.line)
                return out
            return e
        if isinstance(e, ast.Binary):
            op = action[1] if action is not None and action[0] == "op" else e.op
            return ast.Binary(op, go(e.left), go(e.right), line=e.line)
        if isinstance(e, ast.Implies):
            l, r = go(e.left), go(e.right)
            if action is not None and action[0] == "impl":
                return ast.Iff(l, r, line=e.line)
            return ast.Implies(l, r, line=e.line)
        if isinstance(e, ast.Iff):
            l, r = go(e.left), go(e.right)
            if action is not None and action[0] == "impl":
                return ast.Implies(l, r, line=e.line)
            return ast.Iff(l, r, line=e.line)
        if isinstance(e, ast.Quant):
            kind = e.kind
            if action is not None and action[0] == "quant":
                kind = "exists" if kind == "forall" else "forall"
            return ast.Quant(kind, e.binder, go(e.range_), go(e.body), line=e.line)
        if isinstance(e, ast.ArrayIndex):
            return ast.ArrayIndex(go(e.base), go(e.index), line=e.line)
        if isinstance(e, ast.CharAt):
            return ast.CharAt(go(e.base), go(e.index), line=e.line)
        if isinstance(e, ast.FieldLen):
            return ast.FieldLen(go(e.base), line=e.line)
        if isinstance(e, ast.Unary):
            return ast.Unary(e.op, go(e.operand), line=e.line)
        if isinstance(e, ast.Call):
            return ast.Call(e.method, [go(a) for a in e.args], line=e.line)
        if isinstance(e, ast.Old):
            return ast.Old(go(e.inner), line=e.line)
        return e

    return go(expr)


def mutate_spec(
    spec: ast.SpecClause,
    table: SymbolTable,
    unit: ast.SourceUnit,
    tests: list[TestCase],
    seed: int,
    max_retries: int = DEFAULT_MAX_RETRIES,
    avoid_texts: set[str] | None = None,
) -> ast.SpecClause:
    """Mutate components of a correct clause (variables, operators,
    quantifier predicates) at 50% each, at least one forced, until the
    result is runtime-refuted by `tests`.

    Raises UnrefutableMutant when max_retries attempts all stay correct.
    """
    rng = Random(seed)
    visible = _visible_vars(unit, table, spec.kind, spec.anchor)
    comps = _components(spec.expr, visible)
    if not comps:
        raise UnrefutableMutant(f"no mutable component in {clause_to_text(spec)!r}")
    gt_texts = {
        expr_to_text(c.expr)
        for c in unit.specs
        if c.kind == spec.kind and c.anchor == spec.anchor
    }
    if avoid_texts:
        gt_texts = gt_texts | set(avoid_texts)

    for _ in range(max_retries):
        plan: dict[int, tuple] = {}
        for idx, kind, payload in comps:
            if rng.random() < 0.5:
                plan[idx] = _choice_for(kind, payload, rng)
        if not plan:
            idx, kind, payload = comps[rng.randrange(len(comps))]
            plan[idx] = _choice_for(kind, payload, rng)
        mutated = _rebuild_with_plan(spec.expr, plan)
        try:
            check_spec_expr(mutated, unit, table, spec.kind, spec.anchor)
        except SpecEvalError:
            continue  # e.g. mutation broke the quantifier interval form
        if expr_to_text(mutated) in gt_texts:
            continue
        candidate = ast.SpecClause(spec.kind, spec.anchor, mutated, spec.cid, line=spec.line)
        if not clause_correct(unit, candidate, tests).correct:
            return candidate
    raise UnrefutableMutant(
        f"could not refute any mutant of {clause_to_text(spec)!r} "
        f"after {max_retries} attempts"
    )


def _choice_for(kind: str, payload, rng: Random) -> tuple:
    if kind == "var":
        alts, _ = payload
        return ("var", rng.choice(alts))
    if kind == "op":
        return ("op", rng.choice(payload))
    return (kind, None)


# ----------------------------------------------------------------- masking


MASKABLE_CLASSES = ("variable", "array index", "method name", "boundary")


def _maskable_nodes(expr: ast.Expr) -> list[tuple[str, int]]:
    """(class, preorder index) of every maskable node."""
    out = []
    counter = [0]

    def descend(e: ast.Expr):
        idx = counter[0]
        counter[0] += 1
        if isinstance(e, ast.VarRef):
            out.append(("variable", idx))
        elif isinstance(e, ast.Call):
            out.append(("method name", idx))
        elif isinstance(e, (ast.ArrayIndex, ast.CharAt)):
            descend(e.base)
            out.append(("array index", counter[0]))
            descend(e.index)
            return
        elif isinstance(e, ast.Quant):
            out.append(("boundary", counter[0] + 0))  # range subtree root
            # skip range indices by descending normally; index math below
        if isinstance(e, ast.Binary):
            descend(e.left)
            descend(e.right)
        elif isinstance(e, (ast.Implies, ast.Iff)):
            descend(e.left)
            descend(e.right)
        elif isinstance(e, ast.Quant):
            descend(e.range_)
            descend(e.body)
        elif isinstance(e, ast.Unary):
            descend(e.operand)
        elif isinstance(e, ast.FieldLen):
            descend(e.base)
        elif isinstance(e, ast.Old):
            descend(e.inner)
        elif isinstance(e, ast.Call):
            for a in e.args:
                descend(a)

    descend(expr)
    return out


def _apply_mask(expr: ast.Expr, desc: tuple[str, int]) -> tuple[ast.Expr, str]:
    """Rebuild with the described node replaced by <MASK>; returns
    (masked expr, removed text). Types are carried over so the masked
    clause still prints canonically."""
    klass, target = desc
    counter = [0]
    answer: list[str] = []

    def go(e: ast.Expr):
        idx = counter[0]
        counter[0] += 1
        if idx == target:
            if klass == "variable":
                answer.append(e.name)
                mask = ast.Mask(line=e.line)
                mask.ty = e.ty  # keeps ty-sensitive printing (.length form)
                return mask
            if klass == "method name":
                answer.append(e.method)
                out = ast.Call("<MASK>", [go(a) for a in e.args], line=e.line)
                out.ty = e.ty
                return out
            if klass in ("array index", "boundary"):
                answer.append(expr_to_text(e))
                mask = ast.Mask(line=e.line)
                mask.ty = e.ty
                return mask
        if isinstance(e, ast.Binary):
            out = ast.Binary(e.op, go(e.left), go(e.right), line=e.line)
        elif isinstance(e, ast.Implies):
            out = ast.Implies(go(e.left), go(e.right), line=e.line)
        elif isinstance(e, ast.Iff):
            out = ast.Iff(go(e.left), go(e.right), line=e.line)
        elif isinstance(e, ast.Quant):
            out = ast.Quant(e.kind, e.binder, go(e.range_), go(e.body), line=e.line)
        elif isinstance(e, ast.ArrayIndex):
            out = ast.ArrayIndex(go(e.base), go(e.index), line=e.line)
        elif isinstance(e, ast.CharAt):
            out = ast.CharAt(go(e.base), go(e.index), line=e.line)
        elif isinstance(e, ast.FieldLen):
            out = ast.FieldLen(go(e.base), line=e.line)
        elif isinstance(e, ast.Unary):
            out = ast.Unary(e.op, go(e.operand), line=e.line)
        elif isinstance(e, ast.Call):
            out = ast.Call(e.method, [go(a) for a in e.args], line=e.line)
        elif isinstance(e, ast.Old):
            out = ast.Old(go(e.inner), line=e.line)
        else:
            return e
        out.ty = e.ty
        return out

    masked = go(expr)
    if not answer:
        raise NoMaskableNode(f"mask target {desc} not found")
    return masked, answer[0]


def mask_spec(spec: ast.SpecClause, seed: int) -> tuple[ast.SpecClause, str]:
    """Replace one seed-chosen maskable node with `<MASK>`."""
    nodes = _maskable_nodes(spec.expr)
    if not nodes:
        raise NoMaskableNode(f"nothing maskable in {clause_to_text(spec)!r}")
    rng = Random(seed)
    desc = nodes[rng.randrange(len(nodes))]
    masked_expr, answer = _apply_mask(spec.expr, desc)
    masked = ast.SpecClause(spec.kind, spec.anchor, masked_expr, spec.cid, line=spec.line)
    return masked, answer


# ----------------------------------------------------------------- builders


def _mutable_clauses(
    unit: ast.SourceUnit, table: SymbolTable, clauses: list[ast.SpecClause]
) -> list[ast.SpecClause]:
    """Clauses with at least one mutable component (e.g. not `requires true`)."""
    out = []
    for c in clauses:
        visible = _visible_vars(unit, table, c.kind, c.anchor)
        if _components(c.expr, visible):
            out.append(c)
    return out


def build_judgement(
    unit: ast.SourceUnit,
    ground_truth: list[ast.SpecClause],
    tests: list[TestCase],
    seed: int,
    table: SymbolTable | None = None,
) -> JudgementTask:
    """Candidate is a verbatim ground-truth clause (p=0.5) or a
    runtime-refuted mutant; falls back to a correct candidate when no
    mutant can be refuted."""
    if not ground_truth:
        raise ValueError("ground truth required")
    rng = Random(seed)
    table = table or resolve_scopes(unit)
    truth = rng.random() < 0.5
    if truth:
        return JudgementTask(
            strip_specs(unit), ground_truth[rng.randrange(len(ground_truth))], True
        )
    pool = _mutable_clauses(unit, table, ground_truth) or ground_truth
    target = pool[rng.randrange(len(pool))]
    try:
        mutant = mutate_spec(target, table, unit, tests, rng.getrandbits(32))
        return JudgementTask(strip_specs(unit), mutant, False)
    except UnrefutableMutant:
        log.warning("%s: unrefutable mutant, falling back to a correct candidate", unit.name)
        return JudgementTask(strip_specs(unit), target, True)


def build_selection(
    unit: ast.SourceUnit,
    ground_truth: list[ast.SpecClause],
    tests: list[TestCase],
    seed: int,
    table: SymbolTable | None = None,
) -> SelectionTask:
    """One ground-truth option, the rest refuted mutants and at most one
    trivial clause, shuffled with recorded answer label."""
    if not ground_truth:
        raise ValueError("ground truth required")
    rng = Random(seed)
    table = table or resolve_scopes(unit)
    pool = _mutable_clauses(unit, table, ground_truth) or ground_truth
    target = pool[rng.randrange(len(pool))]
    return_type = (
        table.signatures[target.anchor][1] if isinstance(target.anchor, str) else None
    )
    options = [target]
    texts = {expr_to_text(target.expr)}
    trivial_used = False

    use_trivial_slot = rng.random() < 0.25
    attempts = 0
    while len(options) < 4:
        attempts += 1
        if attempts > 24:
            raise UnrefutableMutant(
                f"could not assemble four selection options for {unit.name}"
            )
        want_trivial = use_trivial_slot and not trivial_used and len(options) == 3
        if want_trivial:
            cand = TrivialSpecPool.instantiate(target.kind, target.anchor, return_type, rng)
            if expr_to_text(cand.expr) in texts:
                use_trivial_slot = False
                continue
            trivial_used = True
            options.append(cand)
            texts.add(expr_to_text(cand.expr))
            continue
        try:
            cand = mutate_spec(
                target, table, unit, tests, rng.getrandbits(32), avoid_texts=texts
            )
        except UnrefutableMutant:
            if trivial_used:
                continue  # keep drawing mutants until the attempt budget ends
            cand = TrivialSpecPool.instantiate(target.kind, target.anchor, return_type, rng)
            if expr_to_text(cand.expr) in texts:
                continue
            trivial_used = True
        options.append(cand)
        texts.add(expr_to_text(cand.expr))

    order = list(range(4))
    rng.shuffle(order)
    shuffled = [options[i] for i in order]
    answer = SelectionTask.LABELS[shuffled.index(target)]
    trivial_labels = [
        SelectionTask.LABELS[pos] for pos, opt in enumerate(shuffled) if opt.cid == -1
    ]
    return SelectionTask(strip_specs(unit), shuffled, answer, trivial_labels)


def build_infilling(
    unit: ast.SourceUnit,
    ground_truth: list[ast.SpecClause],
    tests: list[TestCase],
    seed: int,
) -> InfillingTask:
    """Mask one node of a seed-chosen ground-truth clause."""
    if not ground_truth:
        raise ValueError("ground truth required")
    rng = Random(seed)
    maskable = [c for c in ground_truth if _maskable_nodes(c.expr)]
    if not maskable:
        raise NoMaskableNode(f"{unit.name}: no clause has a maskable node")
    clause = maskable[rng.randrange(len(maskable))]
    nodes = _maskable_nodes(clause.expr)
    desc = nodes[rng.randrange(len(nodes))]
    masked_expr, answer = _apply_mask(clause.expr, desc)
    masked = ast.SpecClause(clause.kind, clause.anchor, masked_expr, clause.cid, line=clause.line)
    return InfillingTask(unit, masked, answer, clause, desc)


def build_generation(
    unit: ast.SourceUnit, ground_truth: list[ast.SpecClause]
) -> GenerationTask:
    """Spec-stripped unit plus the anchors a response must cover."""
    if not ground_truth:
        raise ValueError("ground truth required")
    anchors: list[tuple[ast.Anchor, str]] = []
    for m in unit.methods:
        anchors.append((m.name, ast.REQUIRES))
        anchors.append((m.name, ast.ENSURES))
    for lp in ast.unit_loops(unit):
        anchors.append((lp.loop_id, ast.LOOP_INVARIANT))
    return GenerationTask(strip_specs(unit), anchors, list(ground_truth))


# ---------------------------------------------------------------- migration


def migrate_judgement(task: JudgementTask, pu: PerturbedUnit) -> JudgementTask:
    return JudgementTask(
        strip_specs(pu.unit), pu.migrate_clause(task.candidate), task.truth
    )


def migrate_selection(task: SelectionTask, pu: PerturbedUnit) -> SelectionTask:
    return SelectionTask(
        strip_specs(pu.unit),
        [pu.migrate_clause(o) for o in task.options],
        task.answer,
        task.trivial_labels,
    )


def migrate_infilling(task: InfillingTask, pu: PerturbedUnit) -> InfillingTask:
    source = pu.migrate_clause(task.source)
    masked_expr, answer = _apply_mask(source.expr, task.mask_desc)
    masked = ast.SpecClause(source.kind, source.anchor, masked_expr, source.cid, line=source.line)
    return InfillingTask(pu.unit, masked, answer, source, task.mask_desc)


def migrate_generation(task: GenerationTask, pu: PerturbedUnit) -> GenerationTask:
    anchors = [
        (pu.anchor_map.get(a, a), kind) for a, kind in task.required_anchors
    ]
    gt = [pu.spec_migration.get(c.cid, pu.migrate_clause(c)) for c in task.ground_truth]
    return GenerationTask(strip_specs(pu.unit), anchors, gt)


# ------------------------------------------------------------- serialization


@dataclass
class TaskInstance:
    """One serialized task; answer_key is written to a separate keys file."""

    task_id: str
    type: str
    category: str
    program: str
    seed: int
    payload: dict
    answer_key: dict

    def public_record(self) -> dict:
        return {
            "task_id": self.task_id,
            "type": self.type,
            "category": self.category,
            "program": self.program,
            "seed": self.seed,
            "payload": self.payload,
        }

    def key_record(self) -> dict:
        return {"task_id": self.task_id, "answer_key": self.answer_key}


def clause_json(c: ast.SpecClause) -> dict:
    return {"kind": c.kind, "anchor": c.anchor, "text": expr_to_text(c.expr)}


def describe_anchor(ref_unit: ast.SourceUnit, anchor: ast.Anchor) -> str:
    if isinstance(anchor, str):
        return f"method `{anchor}`"
    for m in ref_unit.methods:
        loops = [
            st for st in ast.walk_stmts(m.body) if isinstance(st, (ast.While, ast.For))
        ]
        for i, lp in enumerate(loops, 1):
            if lp.loop_id == anchor:
                return f"loop #{i} in method `{m.name}` (header on line {lp.line})"
    return f"loop {anchor}"


def _task_id(program_id: str, category: str, ttype: str) -> str:
    return f"{program_id}:{category}:{ttype}"


def package_judgement(
    task: JudgementTask, program_id: str, category: str, seed: int,
    method_map: dict[str, str] | None = None,
) -> TaskInstance:
    from .lang import parse_unit, print_unit

    text = print_unit(task.unit)
    ref = parse_unit(text)
    return TaskInstance(
        task_id=_task_id(program_id, category, "judgement"),
        type="judgement",
        category=category,
        program=program_id,
        seed=seed,
        payload={
            "program": text,
            "candidate": clause_to_text(task.candidate),
            "anchor_desc": describe_anchor(ref, task.candidate.anchor),
        },
        answer_key={
            "truth": task.truth,
            "candidate": clause_json(task.candidate),
            "method_map": method_map or {},
        },
    )


def package_selection(
    task: SelectionTask, program_id: str, category: str, seed: int,
    method_map: dict[str, str] | None = None,
) -> TaskInstance:
    from .lang import parse_unit, print_unit

    text = print_unit(task.unit)
    ref = parse_unit(text)
    options = {
        label: clause_to_text(opt)
        for label, opt in zip(SelectionTask.LABELS, task.options)
    }
    return TaskInstance(
        task_id=_task_id(program_id, category, "selection"),
        type="selection",
        category=category,
        program=program_id,
        seed=seed,
        payload={
            "program": text,
            "options": options,
            "anchor_desc": describe_anchor(ref, task.options[0].anchor),
        },
        answer_key={
            "label": task.answer,
            "options": [clause_json(o) for o in task.options],
            "trivial_labels": task.trivial_labels,
            "method_map": method_map or {},
        },
    )


def package_infilling(
    task: InfillingTask, program_id: str, category: str, seed: int,
    method_map: dict[str, str] | None = None,
) -> TaskInstance:
    from .lang import print_unit

    display = ast.SourceUnit(
        task.unit.name,
        task.unit.methods,
        [task.masked_spec if c.cid == task.masked_spec.cid else c for c in task.unit.specs],
        line=task.unit.line,
    )
    return TaskInstance(
        task_id=_task_id(program_id, category, "infilling"),
        type="infilling",
        category=category,
        program=program_id,
        seed=seed,
        payload={"program": print_unit(display)},
        answer_key={
            "answer": task.hidden_answer,
            "masked_text": expr_to_text(task.masked_spec.expr),
            "source_text": expr_to_text(task.source.expr),
            "kind": task.masked_spec.kind,
            "anchor": task.masked_spec.anchor,
            "program": print_unit(strip_specs(task.unit)),
            "method_map": method_map or {},
        },
    )


def package_generation(
    task: GenerationTask, annotated_unit: ast.SourceUnit, program_id: str,
    category: str, seed: int, method_map: dict[str, str] | None = None,
) -> TaskInstance:
    from .lang import print_unit

    stripped_text = print_unit(task.unit)
    return TaskInstance(
        task_id=_task_id(program_id, category, "generation"),
        type="generation",
        category=category,
        program=program_id,
        seed=seed,
        payload={"program": stripped_text},
        answer_key={
            "anchors": [[a, k] for a, k in task.required_anchors],
            "ground_truth": [clause_json(c) for c in task.ground_truth],
            "program": stripped_text,
            "annotated": print_unit(annotated_unit),
            "method_map": method_map or {},
        },
    )


# ------------------------------------------------------------------ grading


def migrate_tests(tests: list[TestCase], method_map: dict[str, str]) -> list[TestCase]:
    if not method_map:
        return tests
    return [TestCase(method_map.get(t.method, t.method), t.args, t.expected) for t in tests]


def grade_judgement(key: dict, parsed) -> bool:
    return parsed.kind == "judgement" and parsed.value == key["truth"]


def grade_selection(key: dict, parsed) -> bool:
    return parsed.kind == "selection" and parsed.value == key["label"]


def _cleanup_expr_text(text: str) -> str:
    text = text.strip()
    if text.startswith("//@"):
        text = text[3:].strip()
    for kind in ast.SPEC_KINDS:
        if text.startswith(kind + " ") or text == kind:
            text = text[len(kind):].strip()
            break
    return text.rstrip(";").strip()


def grade_infilling(key: dict, parsed, tests: list[TestCase]) -> bool:
    """Cr of the filled-in clause: substitution of the reply into <MASK>
    first, whole-clause interpretation as fallback."""
    from .lang import parse_spec_expr, parse_unit

    if parsed.kind != "infilling":
        return False
    reply = _cleanup_expr_text(str(parsed.value))
    if not reply:
        return False
    unit = parse_unit(key["program"])
    table = resolve_scopes(unit)
    tests = migrate_tests(tests, key.get("method_map", {}))
    candidates = [key["masked_text"].replace("<MASK>", reply), reply]
    for text in candidates:
        try:
            expr = parse_spec_expr(text, unit, table, key["kind"], key["anchor"])
        except (SpecEvalError, RecursionError):
            continue
        clause = ast.SpecClause(key["kind"], key["anchor"], expr, 0)
        return clause_correct(unit, clause, tests).correct
    return False
