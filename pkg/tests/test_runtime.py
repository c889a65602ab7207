"""Execution semantics, spec verdicts, equivalence, and coverage."""

import pytest

from speceval import errors
from speceval.lang import ast, parse_spec_expr, parse_unit, resolve_scopes
from speceval.runtime import (
    TestCase,
    check_equivalence,
    check_specs,
    clause_correct,
    evalcore,
    execute,
    measure_coverage,
    prepare,
)


def _spec(entry, kind, text, anchor=None):
    unit = entry.program
    anchor = anchor if anchor is not None else unit.methods[0].name
    table = resolve_scopes(unit)
    expr = parse_spec_expr(text, unit, table, kind, anchor)
    return ast.SpecClause(kind, anchor, expr, 0)


# ---------------------------------------------------------------- execution


def test_palindrome_examples(palindrome):
    out, _ = execute(palindrome.program, TestCase("isPalindrome", ["aba"]))
    assert out.value is True
    out, _ = execute(palindrome.program, TestCase("isPalindrome", [""]))
    assert out.value is True
    out, _ = execute(palindrome.program, TestCase("isPalindrome", ["ab"]))
    assert out.value is False


def test_step_limit_guards_nontermination():
    unit = parse_unit("class T { static void spin() { while (true) { } } }")
    out, _ = execute(unit, TestCase("spin", []), step_limit=10_000)
    assert out.fault_kind == "StepLimitExceeded"


def test_java_division_and_wraparound():
    unit = parse_unit(
        """
class Arith {
    static int div(int a, int b) { return a / b; }
    static int rem(int a, int b) { return a % b; }
    static int inc(int a) { return a + 1; }
}
"""
    )
    assert execute(unit, TestCase("div", [-7, 2]))[0].value == -3
    assert execute(unit, TestCase("div", [7, -2]))[0].value == -3
    assert execute(unit, TestCase("rem", [-7, 2]))[0].value == -1
    assert execute(unit, TestCase("rem", [7, -2]))[0].value == 1
    assert execute(unit, TestCase("inc", [ast.INT_MAX]))[0].value == ast.INT_MIN
    assert execute(unit, TestCase("div", [ast.INT_MIN, -1]))[0].value == ast.INT_MIN
    out, _ = execute(unit, TestCase("div", [1, 0]))
    assert out.fault_kind == "DivisionByZero"


def test_index_out_of_bounds():
    unit = parse_unit("class T { static int get(int[] a, int i) { return a[i]; } }")
    out, _ = execute(unit, TestCase("get", [[1, 2], 5]))
    assert out.fault_kind == "IndexOutOfBounds"
    out, _ = execute(unit, TestCase("get", [[1, 2], -1]))
    assert out.fault_kind == "IndexOutOfBounds"


def test_execution_determinism(corpus):
    for entry in corpus.entries[:6]:
        for t in entry.tests[:3]:
            a, cov_a = execute(entry.program, t)
            b, cov_b = execute(entry.program, t)
            assert a.key() == b.key()
            assert cov_a.line_hits == cov_b.line_hits
            assert cov_a.branch_outcomes == cov_b.branch_outcomes


# ------------------------------------------------------------- check_specs


def test_fig1_ground_truth_all_correct(palindrome):
    verdicts = check_specs(palindrome.program, palindrome.tests)
    assert len(verdicts) == 5
    assert all(v.correct for v in verdicts)
    assert all(v.counterexample is None for v in verdicts)


def test_ensures_true_always_correct(corpus):
    for entry in corpus.entries[:8]:
        clause = _spec(entry, "ensures", "true")
        assert clause_correct(entry.program, clause, entry.tests).correct


def test_weakened_postcondition_refuted(palindrome):
    # <==> weakened to ==>: a non-palindrome returning false violates
    # nothing on the forward direction but the original iff did constrain it;
    # the weakened spec is still correct, so instead flip the direction
    clause = _spec(
        palindrome, "ensures",
        "(\\forall int i; 0 <= i && i < s.length(); "
        "s.charAt(i) == s.charAt(s.length() - 1 - i)) ==> \\result",
    )
    assert clause_correct(palindrome.program, clause, palindrome.tests).correct
    wrong = _spec(
        palindrome, "ensures",
        "\\result ==> (\\exists int i; 0 <= i && i < s.length(); "
        "s.charAt(i) != s.charAt(s.length() - 1 - i))",
    )
    verdict = clause_correct(palindrome.program, wrong, palindrome.tests)
    assert not verdict.correct
    assert verdict.counterexample is not None


def test_counterexample_replays_to_false(palindrome):
    wrong = _spec(palindrome, "ensures", "\\result")
    verdict = clause_correct(palindrome.program, wrong, palindrome.tests)
    assert not verdict.correct
    cex = verdict.counterexample
    prepared = prepare(palindrome.program)
    ok, fault = evalcore.eval_clause_in_state(prepared, wrong, cex.state, 100_000)
    assert ok is False


def test_spec_internal_fault_counts_as_falsification():
    unit = parse_unit(
        """
class T {
    //@ requires true;
    //@ ensures a[0] >= 0 || a[0] < 0;
    static int first(int[] a) {
        int n = a.length;
        return n;
    }
}
"""
    )
    tests = [TestCase("first", [[]])]
    verdicts = check_specs(unit, tests)
    ensures = [v for v in verdicts if v.spec.kind == "ensures"][0]
    assert not ensures.correct
    assert ensures.counterexample.state["fault"] == "IndexOutOfBounds"


def test_violated_precondition_skips_ensures():
    unit = parse_unit(
        """
class T {
    //@ requires n > 0;
    //@ ensures \\result == n - 1;
    //@ ensures \\result >= 0;
    static int dec(int n) {
        return n - 1;
    }
}
"""
    )
    tests = [TestCase("dec", [0]), TestCase("dec", [3])]
    verdicts = check_specs(unit, tests)
    req = verdicts[0]
    assert req.spec.kind == "requires"
    assert not req.correct  # n == 0 falsifies the requires clause itself
    for v in verdicts[1:]:
        assert v.correct
        assert v.evaluations == 1  # only the n == 3 run creates an obligation
        assert v.skips == 1
        # accounting: evaluations + skips == (test, anchor) encounters
        assert v.evaluations + v.skips == len(tests)


def test_old_captures_entry_state(swapdiff):
    verdicts = check_specs(swapdiff.program, swapdiff.tests)
    assert all(v.correct for v in verdicts)


def test_old_deep_copies_arrays(corpus):
    entry = corpus.entry("reverse_in_place")
    verdicts = check_specs(entry.program, entry.tests)
    assert all(v.correct for v in verdicts)


# ------------------------------------------------------------- equivalence


def test_equivalence_reflexive_on_ground_truth(corpus):
    for entry in corpus.entries[:8]:
        for clause in entry.ground_truth:
            assert check_equivalence(clause, clause, entry.program, entry.tests), (
                entry.entry_id, clause.cid)


def test_commuted_arithmetic_equivalent(corpus):
    entry = corpus.entry("add_mul")
    a = _spec(entry, "ensures", "\\result == a + b + a * b")
    b = _spec(entry, "ensures", "\\result == b + a + b * a")
    assert check_equivalence(a, b, entry.program, entry.tests)


def test_ensures_true_not_equivalent_to_ground_truth(palindrome):
    gt = [c for c in palindrome.ground_truth if c.kind == "ensures"][0]
    trivial = _spec(palindrome, "ensures", "true")
    assert not check_equivalence(gt, trivial, palindrome.program, palindrome.tests)


def test_anchor_mismatch_raises(palindrome, fizzbuzz):
    a = _spec(palindrome, "ensures", "true")
    b = _spec(palindrome, "requires", "true")
    with pytest.raises(errors.AnchorMismatch):
        check_equivalence(a, b, palindrome.program, palindrome.tests)


def test_equivalence_symmetric(corpus):
    entry = corpus.entry("add_mul")
    a = _spec(entry, "ensures", "\\result == a + b + a * b")
    b = _spec(entry, "ensures", "true")
    ab = check_equivalence(a, b, entry.program, entry.tests)
    ba = check_equivalence(b, a, entry.program, entry.tests)
    assert ab == ba


# ---------------------------------------------------------------- coverage


def test_fizzbuzz_coverage_complete(fizzbuzz):
    tests = [TestCase("fizzBuzz", [n]) for n in (3, 5, 15, 7)]
    cov = measure_coverage(fizzbuzz.program, tests)
    assert cov.branch_coverage == 1.0


def test_straight_line_coverage_vacuously_full():
    unit = parse_unit("class T { static int f(int x) { return x; } }")
    cov = measure_coverage(unit, [TestCase("f", [1])])
    assert cov.branch_coverage == 1.0
    assert cov.branch_sites == 0


def test_corpus_branch_coverage_high(corpus):
    covs = [
        measure_coverage(e.program, e.tests).branch_coverage for e in corpus.entries
    ]
    assert sum(covs) / len(covs) >= 0.90


def test_coverage_monotone_in_tests(corpus):
    for entry in corpus.entries[:5]:
        prev_b = prev_l = 0.0
        for k in range(1, len(entry.tests) + 1):
            cov = measure_coverage(entry.program, entry.tests[:k])
            assert cov.branch_coverage >= prev_b - 1e-12
            assert cov.line_coverage >= prev_l - 1e-12
            prev_b, prev_l = cov.branch_coverage, cov.line_coverage


def test_coverage_errors_do_not_abort_batch():
    unit = parse_unit("class T { static int div(int a, int b) { return a / b; } }")
    cov = measure_coverage(unit, [TestCase("div", [1, 0]), TestCase("div", [4, 2])])
    assert cov.line_coverage == 1.0
