"""Deterministic execution, spec verdicts (runtime-checked Cr), spec
equivalence via bidirectional implication, and coverage measurement.

Correctness here is testing-based: a clause is "correct" when no executed
check across the provided suite falsified it, which is weaker than the
universally-quantified ideal. Reports call this runtime-checked
correctness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from ..errors import AnchorMismatch
from ..lang import ast
from ._select import evalcore

DEFAULT_STEP_LIMIT = 1_000_000


@dataclass
class TestCase:
    method: str
    args: list
    expected: object = None

    @staticmethod
    def from_json(line: str) -> "TestCase":
        obj = json.loads(line)
        return TestCase(obj["method"], obj["args"], obj.get("expected"))

    def to_json(self) -> str:
        obj = {"method": self.method, "args": self.args}
        if self.expected is not None:
            obj["expected"] = self.expected
        return json.dumps(obj, sort_keys=True)


@dataclass
class CoverageReport:
    line_hits: dict[int, int] = field(default_factory=dict)
    branch_outcomes: dict[int, tuple[int, int]] = field(default_factory=dict)
    line_coverage: float = 1.0
    branch_coverage: float = 1.0
    coverable_lines: int = 0
    branch_sites: int = 0


@dataclass
class Counterexample:
    test: TestCase
    state: dict
    site: str


@dataclass
class SpecVerdict:
    spec: ast.SpecClause
    correct: bool
    counterexample: Optional[Counterexample]
    evaluations: int = 0
    skips: int = 0


def prepare(unit: ast.SourceUnit) -> "evalcore.Prepared":
    return evalcore.Prepared(unit)


def execute(
    unit: ast.SourceUnit,
    test: TestCase,
    step_limit: int = DEFAULT_STEP_LIMIT,
    prepared=None,
):
    """Run one test without spec checking; returns (outcome, coverage)."""
    if prepared is None:
        prepared = prepare(unit)
    outcome = evalcore.run_test(prepared, test.method, test.args, step_limit)
    cov = _coverage_from_runs(prepared, [outcome])
    return outcome, cov


def check_specs(
    unit: ast.SourceUnit,
    tests: list[TestCase],
    step_limit: int = DEFAULT_STEP_LIMIT,
    prepared=None,
) -> list[SpecVerdict]:
    """Evaluate every clause of `unit` across `tests` and aggregate verdicts.

    Requires clauses are checked at entry; a violated precondition skips
    that invocation's ensures obligations (logged as skips). Ensures run at
    the taken return with \\result and \\old bound; loop invariants run at
    every loop-head visit. A clause that faults mid-check is falsified.
    """
    if prepared is None:
        prepared = prepare(unit)
    evals: dict[int, int] = {}
    skips: dict[int, int] = {}
    failures: dict[int, Counterexample] = {}
    for test in tests:
        probe = evalcore.SpecProbe()
        evalcore.run_test(prepared, test.method, test.args, step_limit, probe)
        for cid, n in probe.evals.items():
            evals[cid] = evals.get(cid, 0) + n
        for cid, n in probe.skips.items():
            skips[cid] = skips.get(cid, 0) + n
        for cid, (site, state) in probe.failures.items():
            if cid not in failures:
                failures[cid] = Counterexample(test, state, site)
    verdicts = []
    for clause in unit.specs:
        cex = failures.get(clause.cid)
        verdicts.append(
            SpecVerdict(
                spec=clause,
                correct=cex is None,
                counterexample=cex,
                evaluations=evals.get(clause.cid, 0),
                skips=skips.get(clause.cid, 0),
            )
        )
    return verdicts


def clause_correct(
    unit: ast.SourceUnit,
    clause: ast.SpecClause,
    tests: list[TestCase],
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> SpecVerdict:
    """Verdict for a single clause checked in isolation on `unit`."""
    probe_unit = ast.SourceUnit(unit.name, unit.methods, [_with_cid(clause, 0)], line=unit.line)
    return check_specs(probe_unit, tests, step_limit)[0]


def check_equivalence(
    a: ast.SpecClause,
    b: ast.SpecClause,
    unit: ast.SourceUnit,
    tests: list[TestCase],
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> bool:
    """Runtime equivalence of two same-anchor clauses via the composite
    `a.expr <==> b.expr`.

    For ensures clauses the composite is additionally evaluated at
    counterfactual states that rebind \\result to the other return values
    observed in the suite; two clauses of different strength (e.g. a real
    postcondition versus `ensures true`) disagree on such states, so the
    check can tell them apart even though both pass on actual runs.
    """
    if a.kind != b.kind or a.anchor != b.anchor:
        raise AnchorMismatch(
            f"cannot compare {a.kind}@{a.anchor} with {b.kind}@{b.anchor}"
        )
    iff = ast.Iff(a.expr, b.expr, line=a.expr.line)
    iff.ty = ast.T_BOOL
    composite = ast.SpecClause(a.kind, a.anchor, iff, 0, line=a.line)
    probe_unit = ast.SourceUnit(unit.name, unit.methods, [composite], line=unit.line)
    if not check_specs(probe_unit, tests, step_limit)[0].correct:
        return False
    if a.kind != ast.ENSURES:
        return True
    prepared = prepare(probe_unit)
    states = evalcore.collect_return_states(prepared, a.anchor, tests, step_limit)
    observed = []
    for st in states:
        if not any(values_equal(st["result"], r) for r in observed):
            observed.append(st["result"])

    def holds(expr, st, result) -> bool:
        # a clause that faults at a state does not hold there
        try:
            return bool(
                evalcore.eval_spec_standalone(
                    prepared, expr, st["env"], st["old"], evalcore.copy_value(result),
                    step_limit,
                )
            )
        except evalcore.Fault:
            return False

    for st in states:
        for result in observed:
            if values_equal(result, st["result"]):
                continue
            if holds(a.expr, st, result) != holds(b.expr, st, result):
                return False
    return True


def measure_coverage(
    unit: ast.SourceUnit,
    tests: list[TestCase],
    step_limit: int = DEFAULT_STEP_LIMIT,
    prepared=None,
) -> CoverageReport:
    """Union coverage of the whole suite; per-test faults do not abort the batch."""
    if prepared is None:
        prepared = prepare(unit)
    runs = [
        evalcore.run_test(prepared, t.method, t.args, step_limit) for t in tests
    ]
    return _coverage_from_runs(prepared, runs)


def _coverage_from_runs(prepared, runs) -> CoverageReport:
    line_hits: dict[int, int] = {}
    branch: dict[int, list[int]] = {}
    for r in runs:
        for line, n in r.line_hits.items():
            line_hits[line] = line_hits.get(line, 0) + n
        for site, (t, f) in ((s, tuple(v)) for s, v in r.branch_hits.items()):
            rec = branch.setdefault(site, [0, 0])
            rec[0] += t
            rec[1] += f
    coverable = prepared.coverable_lines
    sites = prepared.branch_sites
    if coverable:
        line_cov = len([ln for ln in coverable if line_hits.get(ln)]) / len(coverable)
    else:
        line_cov = 1.0
    if sites:
        taken = 0
        for s in sites:
            rec = branch.get(s, (0, 0))
            taken += (1 if rec[0] else 0) + (1 if rec[1] else 0)
        branch_cov = taken / (2 * len(sites))
    else:
        branch_cov = 1.0
    return CoverageReport(
        line_hits=line_hits,
        branch_outcomes={s: (v[0], v[1]) for s, v in branch.items()},
        line_coverage=line_cov,
        branch_coverage=branch_cov,
        coverable_lines=len(coverable),
        branch_sites=len(sites),
    )


def _with_cid(clause: ast.SpecClause, cid: int) -> ast.SpecClause:
    return ast.SpecClause(clause.kind, clause.anchor, clause.expr, cid, line=clause.line)


def values_equal(a, b) -> bool:
    return evalcore.values_equal(a, b)
