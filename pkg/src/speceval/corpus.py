"""Corpus loading/validation, structure statistics, and coverage-guided
test augmentation.

Layout of a corpus root:
    programs/<id>.sj     annotated subject programs
    tests/<id>.jsonl     one JSON test case per line
    manifest.json        ids, sha-256 per file, stats, recorded coverage
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from random import Random

from .errors import ManifestMismatch, SpecEvalError, ValidationFailure
from .lang import ast, parse_unit, resolve_scopes
from .runtime import (
    DEFAULT_STEP_LIMIT,
    TestCase,
    check_specs,
    clause_correct,
    execute,
    measure_coverage,
    prepare,
    values_equal,
)

log = logging.getLogger(__name__)

STRUCTURE_CLASSES = ("sequential", "branch-only", "single-loop", "nested-loop")

# ranges for type-directed random inputs
RAND_INT_LO, RAND_INT_HI = -100, 100
RAND_LEN_LO, RAND_LEN_HI = 0, 12


@dataclass
class CorpusEntry:
    entry_id: str
    program: ast.SourceUnit
    ground_truth: list[ast.SpecClause]
    tests: list[TestCase]
    stats: dict = field(default_factory=dict)


@dataclass
class CorpusManifest:
    root: Path
    entries: list[CorpusEntry]
    aggregate: dict = field(default_factory=dict)
    schema_version: int = 1

    def entry(self, entry_id: str) -> CorpusEntry:
        for e in self.entries:
            if e.entry_id == entry_id:
                return e
        raise KeyError(entry_id)


# ------------------------------------------------------------------ loading


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_tests(path: Path) -> list[TestCase]:
    tests = []
    for line in path.read_text("utf-8").splitlines():
        line = line.strip()
        if line:
            tests.append(TestCase.from_json(line))
    return tests


def classify_structure(unit: ast.SourceUnit) -> str:
    """sequential / branch-only / single-loop / nested-loop by AST shape."""
    max_depth = 0
    has_branch = False

    def visit(body, depth):
        nonlocal max_depth, has_branch
        for st in body:
            if isinstance(st, ast.If):
                has_branch = True
                visit(st.then_body, depth)
                if st.else_body is not None:
                    visit(st.else_body, depth)
            elif isinstance(st, ast.While):
                max_depth = max(max_depth, depth + 1)
                visit(st.body, depth + 1)
            elif isinstance(st, ast.For):
                max_depth = max(max_depth, depth + 1)
                visit(st.body, depth + 1)
            elif isinstance(st, ast.Block):
                visit(st.body, depth)

    for m in unit.methods:
        visit(m.body, 0)
    if max_depth >= 2:
        return "nested-loop"
    if max_depth == 1:
        return "single-loop"
    return "branch-only" if has_branch else "sequential"


def unit_stats(unit: ast.SourceUnit, text: str) -> dict:
    decisions = 0
    for m in unit.methods:
        for st in ast.walk_stmts(m.body):
            if isinstance(st, (ast.If, ast.While, ast.For)):
                decisions += 1
    return {
        "loc": len([ln for ln in text.splitlines() if ln.strip()]),
        "cyclomatic": decisions + len(unit.methods),
        "structure": classify_structure(unit),
    }


def validate_entry(
    entry_id: str,
    program_path: Path,
    tests_path: Path,
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> CorpusEntry:
    """Parse, scope-resolve, spec-check, and expectation-check one entry."""
    try:
        text = program_path.read_text("utf-8")
        unit = parse_unit(text)
        resolve_scopes(unit)
    except SpecEvalError as exc:
        raise ValidationFailure(entry_id, f"parse/analysis failed: {exc}")
    if not unit.specs:
        raise ValidationFailure(entry_id, "no ground-truth specification")
    tests = load_tests(tests_path)
    if not tests:
        raise ValidationFailure(entry_id, "empty test suite")
    method_names = {m.name for m in unit.methods}
    for i, t in enumerate(tests):
        if t.method not in method_names:
            raise ValidationFailure(entry_id, f"test {i} targets unknown method {t.method!r}")
    prepared = prepare(unit)
    for i, t in enumerate(tests):
        outcome, _ = execute(unit, t, step_limit, prepared=prepared)
        if outcome.fault_kind is not None:
            raise ValidationFailure(
                entry_id, f"test {i} ({t.method}{t.args}) faults: {outcome.fault_kind}"
            )
        if t.expected is not None and not values_equal(outcome.value, t.expected):
            raise ValidationFailure(
                entry_id,
                f"test {i} expected {t.expected!r}, got {outcome.value!r}",
            )
    for verdict in check_specs(unit, tests, step_limit, prepared=prepared):
        if not verdict.correct:
            cex = verdict.counterexample
            raise ValidationFailure(
                entry_id,
                f"ground-truth clause cid={verdict.spec.cid} ({verdict.spec.kind}@"
                f"{verdict.spec.anchor}) refuted by test "
                f"{cex.test.method}{cex.test.args} at {cex.site}",
            )
    cov = measure_coverage(unit, tests, step_limit, prepared=prepared)
    stats = unit_stats(unit, text)
    stats["branch_coverage"] = cov.branch_coverage
    stats["line_coverage"] = cov.line_coverage
    stats["num_tests"] = len(tests)
    return CorpusEntry(entry_id, unit, list(unit.specs), tests, stats)


def load_corpus(root: str | Path, step_limit: int = DEFAULT_STEP_LIMIT) -> CorpusManifest:
    """Load and validate every entry listed in the manifest.

    Raises ManifestMismatch on hash drift and ValidationFailure on the
    first invalid entry; an empty manifest is allowed with a warning.
    """
    root = Path(root)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise ManifestMismatch(f"missing manifest: {manifest_path}")
    manifest = json.loads(manifest_path.read_text("utf-8"))
    entries = []
    if not manifest.get("entries"):
        log.warning("corpus at %s lists no entries", root)
    for rec in manifest.get("entries", []):
        entry_id = rec["id"]
        program_path = root / "programs" / f"{entry_id}.sj"
        tests_path = root / "tests" / f"{entry_id}.jsonl"
        for path, want in ((program_path, rec["program_sha256"]),
                           (tests_path, rec["tests_sha256"])):
            if not path.exists():
                raise ManifestMismatch(f"{path} listed in manifest but missing")
            got = _sha256(path)
            if got != want:
                raise ManifestMismatch(f"{path}: sha256 {got} != manifest {want}")
        entries.append(validate_entry(entry_id, program_path, tests_path, step_limit))
    aggregate = _aggregate_stats(entries)
    return CorpusManifest(root, entries, aggregate, manifest.get("schema_version", 1))


def _aggregate_stats(entries: list[CorpusEntry]) -> dict:
    if not entries:
        return {"count": 0}
    count = len(entries)
    by_class = {c: 0 for c in STRUCTURE_CLASSES}
    for e in entries:
        by_class[e.stats["structure"]] += 1
    return {
        "count": count,
        "avg_loc": sum(e.stats["loc"] for e in entries) / count,
        "avg_cyclomatic": sum(e.stats["cyclomatic"] for e in entries) / count,
        "avg_branch_coverage": sum(e.stats["branch_coverage"] for e in entries) / count,
        "avg_tests": sum(e.stats["num_tests"] for e in entries) / count,
        "structure_classes": by_class,
    }


def write_manifest(root: str | Path) -> dict:
    """Build manifest.json from the files on disk (corpus authoring aid)."""
    root = Path(root)
    records = []
    for program_path in sorted((root / "programs").glob("*.sj")):
        entry_id = program_path.stem
        tests_path = root / "tests" / f"{entry_id}.jsonl"
        if not tests_path.exists():
            raise ValidationFailure(entry_id, "no test suite file")
        entry = validate_entry(entry_id, program_path, tests_path)
        records.append(
            {
                "id": entry_id,
                "program_sha256": _sha256(program_path),
                "tests_sha256": _sha256(tests_path),
                "stats": entry.stats,
            }
        )
    manifest = {"schema_version": 1, "entries": records}
    (root / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8"
    )
    return manifest


# ------------------------------------------------------------- augmentation


def _random_value(rng: Random, ty: str):
    if ty == ast.T_INT:
        return rng.randint(RAND_INT_LO, RAND_INT_HI)
    if ty == ast.T_BOOL:
        return rng.random() < 0.5
    if ty == ast.T_ARRAY:
        return [rng.randint(RAND_INT_LO, RAND_INT_HI)
                for _ in range(rng.randint(RAND_LEN_LO, RAND_LEN_HI))]
    return "".join(
        chr(rng.randint(97, 122)) for _ in range(rng.randint(RAND_LEN_LO, RAND_LEN_HI))
    )


def _sample_mutants(entry: CorpusEntry, rng: Random, per_clause: int = 2):
    from .taskgen import mutate_spec

    table = resolve_scopes(entry.program)
    mutants = []
    for clause in entry.ground_truth:
        for _ in range(per_clause):
            try:
                mutants.append(
                    mutate_spec(
                        clause, table, entry.program, entry.tests, rng.getrandbits(32)
                    )
                )
            except SpecEvalError:
                break
    return mutants


def augment_tests(
    entry: CorpusEntry,
    seed: int,
    budget: int = 200,
    target_size: int = 15,
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> list[TestCase]:
    """Type-directed random tests kept greedily while they add branch
    coverage, refute sampled mutants, or top the suite up toward the
    target size; ground truth must stay verdict-correct throughout.

    Returns the tests to ADD. Logs a MutantSurvived warning naming any
    sampled mutant the final suite still fails to refute.
    """
    rng = Random(seed)
    unit = entry.program
    prepared = prepare(unit)
    suite = list(entry.tests)
    added: list[TestCase] = []
    cov = measure_coverage(unit, suite, step_limit, prepared=prepared).branch_coverage
    mutants = _sample_mutants(entry, rng)
    unrefuted = [
        m for m in mutants if clause_correct(unit, m, suite, step_limit).correct
    ]
    methods = list(unit.methods)
    for _ in range(budget):
        if cov >= 1.0 and not unrefuted and len(suite) >= target_size:
            break
        m = methods[rng.randrange(len(methods))]
        args = [_random_value(rng, ty) for _, ty in m.params]
        cand = TestCase(m.name, args)
        outcome, _ = execute(unit, cand, step_limit, prepared=prepared)
        if outcome.fault_kind is not None:
            continue
        trial = suite + [cand]
        if not all(v.correct for v in check_specs(unit, trial, step_limit,
                                                  prepared=prepared)):
            continue  # input outside the ground-truth contract
        new_cov = measure_coverage(unit, trial, step_limit, prepared=prepared).branch_coverage
        newly_refuted = [
            mt for mt in unrefuted
            if not clause_correct(unit, mt, [cand], step_limit).correct
        ]
        keep = (
            new_cov > cov
            or newly_refuted
            or len(suite) < target_size
        )
        if not keep:
            continue
        cand.expected = outcome.value
        suite.append(cand)
        added.append(cand)
        cov = new_cov
        for mt in newly_refuted:
            unrefuted.remove(mt)
    if unrefuted:
        from .lang import clause_to_text

        log.warning(
            "MutantSurvived: %s: %d sampled mutants unrefuted (e.g. %s)",
            entry.entry_id, len(unrefuted), clause_to_text(unrefuted[0]),
        )
    return added


def bundled_corpus_root() -> Path:
    """Root of the sample corpus shipped inside the package."""
    from importlib import resources

    return Path(str(resources.files("speceval").joinpath("data/corpus")))
