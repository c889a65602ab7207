"""Task builders: mutation with refutation, masking, candidate assembly,
packaging, migration to perturbed twins, and grading."""

import pytest

from speceval import errors
from speceval.lang import ast, clause_to_text, expr_to_text, parse_unit, resolve_scopes
from speceval.modelio import ParsedAnswer
from speceval.perturb import PERTURBERS
from speceval.runtime import TestCase, clause_correct
from speceval.taskgen import (
    SelectionTask,
    TrivialSpecPool,
    build_generation,
    build_infilling,
    build_judgement,
    build_selection,
    grade_infilling,
    grade_judgement,
    grade_selection,
    mask_spec,
    migrate_infilling,
    migrate_judgement,
    migrate_selection,
    mutate_spec,
    package_infilling,
)


# ----------------------------------------------------------------- mutation


def test_every_mutant_is_refuted(corpus):
    for entry in corpus.entries[:10]:
        table = resolve_scopes(entry.program)
        for clause in entry.ground_truth[:2]:
            try:
                mutant = mutate_spec(
                    clause, table, entry.program, entry.tests, seed=5
                )
            except errors.UnrefutableMutant:
                continue
            verdict = clause_correct(entry.program, mutant, entry.tests)
            assert not verdict.correct, (entry.entry_id, clause_to_text(mutant))
            assert expr_to_text(mutant.expr) != expr_to_text(clause.expr)


def test_single_component_always_mutated():
    unit = parse_unit(
        """
class T {
    //@ requires true;
    //@ ensures \\result == x;
    static int idf(int x) {
        return x;
    }
}
"""
    )
    table = resolve_scopes(unit)
    tests = [TestCase("idf", [v]) for v in (0, 1, -5, 7)]
    clause = unit.specs[1]
    # only component is the == operator; every successful call must differ
    for seed in range(6):
        mutant = mutate_spec(clause, table, unit, tests, seed)
        assert expr_to_text(mutant.expr) != expr_to_text(clause.expr)
        assert not clause_correct(unit, mutant, tests).correct


def test_unrefutable_mutant_raises():
    unit = parse_unit(
        """
class T {
    //@ requires true;
    //@ ensures true;
    static int f(int x) {
        return x;
    }
}
"""
    )
    table = resolve_scopes(unit)
    with pytest.raises(errors.UnrefutableMutant):
        mutate_spec(unit.specs[1], table, unit, [TestCase("f", [1])], seed=0)


def test_mutation_determinism(fizzbuzz):
    table = resolve_scopes(fizzbuzz.program)
    clause = fizzbuzz.ground_truth[1]
    a = mutate_spec(clause, table, fizzbuzz.program, fizzbuzz.tests, 17)
    b = mutate_spec(clause, table, fizzbuzz.program, fizzbuzz.tests, 17)
    assert expr_to_text(a.expr) == expr_to_text(b.expr)


# ------------------------------------------------------------------ masking


def test_mask_single_variable():
    unit = parse_unit(
        """
class T {
    //@ requires true;
    //@ ensures \\result == x;
    static int idf(int x) {
        return x;
    }
}
"""
    )
    masked, answer = mask_spec(unit.specs[1], seed=3)
    assert answer == "x"
    assert expr_to_text(masked.expr) == "\\result == <MASK>"


def test_mask_substitution_identity(corpus):
    for entry in corpus.entries:
        for clause in entry.ground_truth:
            try:
                masked, answer = mask_spec(clause, seed=1)
            except errors.NoMaskableNode:
                continue
            filled = clause_to_text(masked).replace("<MASK>", answer)
            assert filled == clause_to_text(clause), entry.entry_id


def test_mask_nothing_maskable():
    unit = parse_unit(
        "class T {\n    //@ requires true;\n    static int f(int x) { return x; } }"
    )
    with pytest.raises(errors.NoMaskableNode):
        mask_spec(unit.specs[0], seed=0)


def test_intsquare_infilling_roundtrip(intsquare):
    task = build_infilling(intsquare.program, intsquare.ground_truth,
                           intsquare.tests, seed=12)
    parsed = ParsedAnswer("infilling", task.hidden_answer, task.hidden_answer)
    inst = package_infilling(task, "int_square", "Original", 12)
    assert grade_infilling(inst.answer_key, parsed, intsquare.tests)


# ------------------------------------------------------- judgement builder


def test_judgement_truth_candidates_verbatim(fizzbuzz):
    gt_texts = {expr_to_text(c.expr) for c in fizzbuzz.ground_truth}
    seen_true = seen_false = False
    for seed in range(30):
        task = build_judgement(
            fizzbuzz.program, fizzbuzz.ground_truth, fizzbuzz.tests, seed
        )
        if task.truth:
            seen_true = True
            assert expr_to_text(task.candidate.expr) in gt_texts
        else:
            seen_false = True
            assert expr_to_text(task.candidate.expr) not in gt_texts
            assert not clause_correct(
                fizzbuzz.program, task.candidate, fizzbuzz.tests
            ).correct
        assert task.unit.specs == []
    assert seen_true and seen_false


def test_judgement_truth_fraction_monte_carlo(fizzbuzz):
    truths = [
        build_judgement(fizzbuzz.program, fizzbuzz.ground_truth, fizzbuzz.tests, s).truth
        for s in range(200)
    ]
    frac = sum(truths) / len(truths)
    assert 0.4 <= frac <= 0.6


# ------------------------------------------------------- selection builder


def test_selection_shape_and_refutation(corpus):
    for entry in corpus.entries[:10]:
        try:
            task = build_selection(entry.program, entry.ground_truth, entry.tests, 9)
        except errors.UnrefutableMutant:
            continue
        assert len(task.options) == 4
        texts = [expr_to_text(o.expr) for o in task.options]
        assert len(set(texts)) == 4
        assert len(task.trivial_labels) <= 1
        gt_texts = {expr_to_text(c.expr) for c in entry.ground_truth}
        answer_idx = SelectionTask.LABELS.index(task.answer)
        assert expr_to_text(task.options[answer_idx].expr) in gt_texts
        for label, opt in zip(SelectionTask.LABELS, task.options):
            verdict = clause_correct(entry.program, opt, entry.tests)
            if label == task.answer or label in task.trivial_labels:
                assert verdict.correct, (entry.entry_id, label)
            else:
                assert not verdict.correct, (entry.entry_id, label)


def test_selection_option_order_seeded(fizzbuzz):
    a = build_selection(fizzbuzz.program, fizzbuzz.ground_truth, fizzbuzz.tests, 4)
    b = build_selection(fizzbuzz.program, fizzbuzz.ground_truth, fizzbuzz.tests, 4)
    assert [expr_to_text(o.expr) for o in a.options] == [
        expr_to_text(o.expr) for o in b.options
    ]
    assert a.answer == b.answer


def test_trivial_pool_members_correct_everywhere(corpus):
    for entry in corpus.entries[:8]:
        m = entry.program.methods[0]
        for expr in TrivialSpecPool.candidates("ensures", m.name, m.return_type):
            clause = ast.SpecClause("ensures", m.name, expr, -1)
            assert clause_correct(entry.program, clause, entry.tests).correct


# ------------------------------------------------------ generation builder


def test_generation_anchor_count_matches_ast(corpus):
    for entry in corpus.entries:
        task = build_generation(entry.program, entry.ground_truth)
        methods = len(entry.program.methods)
        loops = len(ast.unit_loops(entry.program))
        assert len(task.required_anchors) == methods * 2 + loops
        assert task.unit.specs == []


def test_generation_fig1_anchors(palindrome):
    task = build_generation(palindrome.program, palindrome.ground_truth)
    kinds = sorted(k for _, k in task.required_anchors)
    assert kinds == ["ensures", "loop_invariant", "requires"]


# ---------------------------------------------------------------- migration


def _pu(entry, kind, seed=11):
    return PERTURBERS[kind](entry.program, seed)


def test_judgement_twin_keeps_truth(fizzbuzz):
    task = build_judgement(fizzbuzz.program, fizzbuzz.ground_truth, fizzbuzz.tests, 6)
    for kind in ("NameRandom", "NameShuffle", "IfElseFlip", "DefUseBreak"):
        pu = _pu(fizzbuzz, kind)
        twin = migrate_judgement(task, pu)
        tests = fizzbuzz.tests
        if kind == "NameRandom":
            tests = [
                TestCase(pu.rename_map.get(t.method, t.method), t.args, t.expected)
                for t in tests
            ]
        verdict = clause_correct(pu.unit, twin.candidate, tests)
        assert verdict.correct == task.truth, kind


def test_selection_twin_keeps_labels(fizzbuzz):
    task = build_selection(fizzbuzz.program, fizzbuzz.ground_truth, fizzbuzz.tests, 6)
    pu = _pu(fizzbuzz, "NameRandom")
    twin = migrate_selection(task, pu)
    assert twin.answer == task.answer
    tests = [
        TestCase(pu.rename_map.get(t.method, t.method), t.args, t.expected)
        for t in fizzbuzz.tests
    ]
    for label, opt in zip(SelectionTask.LABELS, twin.options):
        verdict = clause_correct(pu.unit, opt, tests)
        if label == task.answer or label in task.trivial_labels:
            assert verdict.correct
        else:
            assert not verdict.correct


def test_infilling_twin_masks_same_node(intsquare):
    task = build_infilling(intsquare.program, intsquare.ground_truth,
                           intsquare.tests, 3)
    pu = _pu(intsquare, "NameRandom")
    twin = migrate_infilling(task, pu)
    assert twin.mask_desc == task.mask_desc
    expected = task.hidden_answer
    if expected in pu.rename_map:
        expected = pu.rename_map[expected]
    assert twin.hidden_answer == expected or twin.hidden_answer != task.hidden_answer


# ------------------------------------------------------------------ grading


def test_grade_judgement_and_selection():
    assert grade_judgement({"truth": True}, ParsedAnswer("judgement", True))
    assert not grade_judgement({"truth": True}, ParsedAnswer("judgement", False))
    assert not grade_judgement({"truth": True}, ParsedAnswer("unparseable", None))
    assert grade_selection({"label": "B"}, ParsedAnswer("selection", "B"))
    assert not grade_selection({"label": "B"}, ParsedAnswer("selection", "C"))


def test_grade_infilling_accepts_equivalent_fill(intsquare):
    task = build_infilling(intsquare.program, intsquare.ground_truth,
                           intsquare.tests, 12)
    inst = package_infilling(task, "int_square", "Original", 12)
    wrong = ParsedAnswer("infilling", "12345", "12345")
    assert not grade_infilling(inst.answer_key, wrong, intsquare.tests)
    unparseable = ParsedAnswer("unparseable", None, "")
    assert not grade_infilling(inst.answer_key, unparseable, intsquare.tests)


def test_grade_infilling_accepts_full_clause_reply(intsquare):
    task = build_infilling(intsquare.program, intsquare.ground_truth,
                           intsquare.tests, 12)
    inst = package_infilling(task, "int_square", "Original", 12)
    full = inst.answer_key["masked_text"].replace("<MASK>", task.hidden_answer)
    reply = ParsedAnswer("infilling", f"//@ {task.masked_spec.kind} {full};", "")
    assert grade_infilling(inst.answer_key, reply, intsquare.tests)
