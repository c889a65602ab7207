"""The five perturbations: semantics preservation, spec migration,
fresh-name shape, independence conditions, and determinism."""

import re

import pytest

from speceval import errors
from speceval.lang import ast, parse_unit, print_unit
from speceval.perturb import (
    ALL_KINDS,
    PERTURBERS,
    defuse_break,
    find_independent_pairs,
    ifelse_flip,
    independent_swap,
    name_random,
    name_shuffle,
    stmt_def_use,
)
from speceval.perturb.common import identifiers_of
from speceval.runtime import TestCase, check_specs, execute
from speceval.taskgen import migrate_tests

FRESH_NAME = re.compile(r"^[A-Za-z][A-Za-z0-9]{4}$")


def _applicable_variants(entry, seed=11):
    out = {}
    for kind in ALL_KINDS:
        try:
            out[kind] = PERTURBERS[kind](entry.program, seed)
        except errors.SpecEvalError:
            pass
    return out


def _tests_for(pu, tests):
    return migrate_tests(tests, pu.rename_map if pu.kind == "NameRandom" else {})


# ------------------------------------------------- semantics & spec safety


def test_all_kinds_preserve_semantics_whole_corpus(corpus):
    emitted = 0
    for entry in corpus.entries:
        for kind, pu in _applicable_variants(entry).items():
            for t in entry.tests:
                o1, _ = execute(entry.program, t)
                o2, _ = execute(pu.unit, _tests_for(pu, [t])[0])
                assert o1.key() == o2.key(), (entry.entry_id, kind, t.args)
            emitted += 1
    assert emitted >= 3 * len(corpus.entries)


def test_migrated_ground_truth_stays_correct(corpus):
    for entry in corpus.entries:
        for kind, pu in _applicable_variants(entry).items():
            verdicts = check_specs(pu.unit, _tests_for(pu, entry.tests))
            assert all(v.correct for v in verdicts), (entry.entry_id, kind)


def test_migrated_specs_reanchor_and_resolve(corpus):
    for entry in corpus.entries:
        for kind, pu in _applicable_variants(entry).items():
            assert len(pu.spec_migration) == len(entry.ground_truth)
            # pu.unit already re-validated through print/parse in finalize;
            # sanity: clause counts and kinds survive
            kinds = sorted(c.kind for c in pu.unit.specs)
            assert kinds == sorted(c.kind for c in entry.ground_truth)


def test_seed_determinism(corpus):
    entry = corpus.entry("int_square")
    for kind in ALL_KINDS:
        try:
            a = PERTURBERS[kind](entry.program, 99)
            b = PERTURBERS[kind](entry.program, 99)
        except errors.SpecEvalError:
            continue
        assert print_unit(a.unit) == print_unit(b.unit), kind
        assert a.rename_map == b.rename_map


# ------------------------------------------------------------ def-use break


def test_defuse_break_fig2_analog(swapdiff):
    pu = defuse_break(swapdiff.program, 42)
    assert pu.rename_map, "at least one chain broken"
    originals = identifiers_of(swapdiff.program)
    text = print_unit(pu.unit)
    for old, new in pu.rename_map.items():
        assert FRESH_NAME.match(new), new
        assert new not in originals
        assert f"int {new} = {old};" in text


def test_defuse_break_no_eligible_variable():
    unit = parse_unit("class T { static int f(int x) { return 1; } }")
    with pytest.raises(errors.NoEligibleVariable):
        defuse_break(unit, 1)


def test_defuse_break_rewrites_downstream_invariants():
    unit = parse_unit(
        """
class T {
    //@ requires n >= 0 && n <= 50;
    //@ ensures \\result == n;
    static int copyLoop(int n) {
        int acc = 0;
        //@ loop_invariant 0 <= i && i <= n;
        //@ loop_invariant acc == i;
        for (int i = 0; i < n; i++) {
            acc = acc + 1;
        }
        return acc;
    }
}
"""
    )
    # break every eligible chain until the parameter n is broken
    for seed in range(40):
        pu = defuse_break(unit, seed)
        if "n" in pu.rename_map:
            break
    else:
        pytest.fail("parameter n never selected")
    new = pu.rename_map["n"]
    migrated = [c for c in pu.unit.specs if c.kind == "loop_invariant"]
    texts = [print_unit(pu.unit)]
    assert any(new in t for t in texts)
    # invariant mentioning n now mentions the new name
    from speceval.lang import expr_to_text

    bound_texts = [expr_to_text(c.expr) for c in migrated]
    assert any(new in t for t in bound_texts)
    # method contract kept verbatim (new local is out of its scope)
    ens = [c for c in pu.unit.specs if c.kind == "ensures"][0]
    assert new not in expr_to_text(ens.expr)
    tests = [TestCase("copyLoop", [k]) for k in (0, 3, 9)]
    assert all(v.correct for v in check_specs(pu.unit, tests))


# -------------------------------------------------------------- ifelse flip


def test_flip_swaps_branches_and_negates():
    unit = parse_unit(
        "class T { static int f(int a, int b) { int x = 0;"
        " if (a < b) { x = 1; } else { x = 2; } return x; } }"
    )
    pu = ifelse_flip(unit, 5)
    text = print_unit(pu.unit)
    assert "if (!(a < b)) {" in text
    assert text.index("x = 2;") < text.index("x = 1;")


def test_flip_requires_else_branch():
    unit = parse_unit(
        "class T { static int f(int a) { if (a > 0) { return 1; } return 0; } }"
    )
    with pytest.raises(errors.NoEligibleBranch):
        ifelse_flip(unit, 1)


def test_flip_fizzbuzz_specs_stay_correct(fizzbuzz):
    pu = ifelse_flip(fizzbuzz.program, 3)
    assert all(v.correct for v in check_specs(pu.unit, fizzbuzz.tests))


def test_double_flip_restores_semantics_not_syntax(fizzbuzz):
    pu1 = ifelse_flip(fizzbuzz.program, 1)
    # force-flip everything again with a fresh seed
    pu2 = ifelse_flip(pu1.unit, 1)
    assert print_unit(pu2.unit) != print_unit(fizzbuzz.program)
    for t in fizzbuzz.tests:
        o1, _ = execute(fizzbuzz.program, t)
        o2, _ = execute(pu2.unit, t)
        assert o1.key() == o2.key()


# --------------------------------------------------------- independent swap


def test_fig2_style_adjacent_pair_detected(corpus):
    entry = corpus.entry("add_mul")
    pairs = find_independent_pairs(entry.program)
    assert any(
        isinstance(a, ast.VarDecl) and isinstance(b, ast.VarDecl) for a, b in pairs
    )


def test_dependent_pair_not_detected():
    unit = parse_unit(
        "class T { static int f() { int x = 1; int y = x; return y; } }"
    )
    assert find_independent_pairs(unit) == []


def test_independence_conditions_hold_for_every_pair(corpus):
    for entry in corpus.entries:
        for s1, s2 in find_independent_pairs(entry.program):
            d1, u1, b1 = stmt_def_use(s1)
            d2, u2, b2 = stmt_def_use(s2)
            assert not b1 and not b2
            assert not (d1 & d2)
            assert not (u1 & d2)
            assert not (d1 & u2)


def _adjacent_pairs_brute(unit):
    """Oracle: enumerate every adjacent same-block index pair."""
    out = []

    def visit(block):
        for i in range(len(block) - 1):
            out.append((block, i))
        for st in block:
            if isinstance(st, ast.If):
                visit(st.then_body)
                if st.else_body is not None:
                    visit(st.else_body)
            elif isinstance(st, (ast.While, ast.For)):
                visit(st.body)
            elif isinstance(st, ast.Block):
                visit(st.body)

    for m in unit.methods:
        visit(m.body)
    return out


def test_flagged_pairs_survive_brute_force_swap(corpus):
    """Exhaustive oracle on >=10 programs: swap every flagged adjacent pair
    in isolation and require identical outputs on the whole suite."""
    checked = 0
    for entry in corpus.entries[:12]:
        flagged = {
            (print_unit_stmt(a), print_unit_stmt(b))
            for a, b in find_independent_pairs(entry.program)
        }
        fresh = parse_unit(print_unit(entry.program))
        baseline = {
            i: execute(entry.program, t)[0].key() for i, t in enumerate(entry.tests)
        }
        for block, i in _adjacent_pairs_brute(fresh):
            key = (print_unit_stmt(block[i]), print_unit_stmt(block[i + 1]))
            if key not in flagged:
                continue
            block[i], block[i + 1] = block[i + 1], block[i]
            for j, t in enumerate(entry.tests):
                got, _ = execute(fresh, t)
                assert got.key() == baseline[j], (entry.entry_id, key, t.args)
            block[i], block[i + 1] = block[i + 1], block[i]  # restore
        checked += 1
    assert checked >= 10


def test_swap_preserves_outputs(corpus):
    for entry in corpus.entries:
        try:
            pu = independent_swap(entry.program, 77)
        except errors.NoEligiblePair:
            continue
        for t in entry.tests:
            o1, _ = execute(entry.program, t)
            o2, _ = execute(pu.unit, t)
            assert o1.key() == o2.key(), (entry.entry_id, t.args)


def test_swap_no_eligible_pair():
    unit = parse_unit("class T { static int f(int x) { return x; } }")
    with pytest.raises(errors.NoEligiblePair):
        independent_swap(unit, 1)


# ----------------------------------------------------------------- renaming


def test_name_random_renames_everything(intsquare):
    pu = name_random(intsquare.program, 8)
    originals = identifiers_of(intsquare.program)
    method_names = {m.name for m in intsquare.program.methods}
    var_names = {
        n for n in originals
        if n not in method_names and n not in _binders(intsquare.program)
    }
    for name in method_names | var_names:
        assert name in pu.rename_map, name
        assert FRESH_NAME.match(pu.rename_map[name])
        assert pu.rename_map[name] not in originals
    text = print_unit(pu.unit)
    for name in var_names:
        # (?<!\\) keeps the JML \result keyword from matching a var `result`
        assert re.search(rf"(?<!\\)\b{name}\b", text) is None, name


def _binders(unit):
    return {
        sub.binder
        for c in unit.specs
        for sub in ast.walk_exprs(c.expr)
        if isinstance(sub, ast.Quant)
    }


def test_name_random_zero_variable_unit():
    unit = parse_unit("class T { static int seven() { return 7; } }")
    pu = name_random(unit, 4)
    assert len(pu.rename_map) == 1
    assert list(pu.rename_map) == ["seven"]


def test_name_random_specs_still_correct(corpus):
    for entry in corpus.entries[:8]:
        pu = name_random(entry.program, 21)
        tests = migrate_tests(entry.tests, pu.rename_map)
        assert all(v.correct for v in check_specs(pu.unit, tests))


def test_name_shuffle_two_locals_exchange():
    unit = parse_unit(
        "class T { static int f() { int a = 1; int b = 2; return a - b; } }"
    )
    pu = name_shuffle(unit, 2)
    assert pu.rename_map == {"a": "b", "b": "a"}
    out, _ = execute(pu.unit, TestCase("f", []))
    assert out.value == -1


def test_name_shuffle_is_nonidentity_permutation(corpus):
    for entry in corpus.entries:
        try:
            pu = name_shuffle(entry.program, 13)
        except errors.NoShufflePossible:
            continue
        domain = sorted(pu.rename_map)
        image = sorted(pu.rename_map.values())
        assert domain == image  # bijection on the shuffled name set
        assert any(k != v for k, v in pu.rename_map.items())


def test_name_shuffle_fig2_never_identity(swapdiff):
    for seed in range(10):
        pu = name_shuffle(swapdiff.program, seed)
        assert any(k != v for k, v in pu.rename_map.items())
        assert set(pu.rename_map) == {"num1", "num2", "temp"}


def test_name_shuffle_requires_two_names():
    unit = parse_unit("class T { static int f(int x) { return x; } }")
    with pytest.raises(errors.NoShufflePossible):
        name_shuffle(unit, 1)


def print_unit_stmt(st) -> str:
    out = []
    from speceval.lang.printer import _print_stmt

    _print_stmt(out, st, 0, ast.SourceUnit("X", [], []), "")
    return "\n".join(out)
