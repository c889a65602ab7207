"""Runtime checking: execution, spec verdicts, equivalence, coverage."""

from ._select import COMPILED, evalcore
from .checker import (
    DEFAULT_STEP_LIMIT,
    Counterexample,
    CoverageReport,
    SpecVerdict,
    TestCase,
    check_equivalence,
    check_specs,
    clause_correct,
    execute,
    measure_coverage,
    prepare,
    values_equal,
)

__all__ = [
    "COMPILED",
    "evalcore",
    "DEFAULT_STEP_LIMIT",
    "TestCase",
    "CoverageReport",
    "SpecVerdict",
    "Counterexample",
    "execute",
    "check_specs",
    "clause_correct",
    "check_equivalence",
    "measure_coverage",
    "prepare",
    "values_equal",
]
