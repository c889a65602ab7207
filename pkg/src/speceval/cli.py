"""Pipeline orchestration: validate, perturb, gen-tasks, run, score.

A run is reproducible from (config, master seed): perturbation and task
seeds are derived by stable hashing so adding a program never shifts the
randomness of the others, and cmd_run resumes by task_id.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import logging
import os
import sys
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import metrics, modelio, taskgen
from .corpus import CorpusEntry, bundled_corpus_root, load_corpus, write_manifest
from .errors import (
    ManifestMismatch,
    NoMaskableNode,
    SpecEvalError,
    TransportError,
    UnrefutableMutant,
    ValidationFailure,
)
from .lang import parse_spec_expr, parse_unit, resolve_scopes
from .metrics import GradedResult
from .perturb import ALL_KINDS, PERTURBERS, PerturbedUnit
from .runtime import DEFAULT_STEP_LIMIT, TestCase, clause_correct, execute, prepare
from .taskgen import TaskInstance, migrate_tests

log = logging.getLogger("speceval")

TASK_TYPES = ("judgement", "selection", "infilling", "generation")
ALL_CATEGORIES = ("Original",) + ALL_KINDS


@dataclass
class RunConfig:
    corpus_root: str = ""
    categories: list[str] = field(default_factory=lambda: list(ALL_CATEGORIES))
    task_types: list[str] = field(default_factory=lambda: list(TASK_TYPES))
    shots: int = 2
    endpoint: dict = field(default_factory=lambda: {"type": "oracle"})
    master_seed: int = 0
    output_dir: str = "runs/default"
    concurrency: int = 1
    step_limit: int = DEFAULT_STEP_LIMIT

    @staticmethod
    def load(path: str | None) -> "RunConfig":
        if path is None:
            return RunConfig()
        text = Path(path).read_text("utf-8")
        if path.endswith(".toml"):
            try:
                import tomllib
            except ImportError:
                raise SystemExit("TOML configs need Python 3.11+; use JSON")
            data = tomllib.loads(text)
        else:
            data = json.loads(text)
        cfg = RunConfig()
        for key, value in data.items():
            if not hasattr(cfg, key):
                raise SystemExit(f"unknown config key {key!r}")
            setattr(cfg, key, value)
        return cfg

    def to_json(self) -> dict:
        return {
            "corpus_root": self.corpus_root,
            "categories": self.categories,
            "task_types": self.task_types,
            "shots": self.shots,
            "endpoint": self.endpoint,
            "master_seed": self.master_seed,
            "output_dir": self.output_dir,
            "concurrency": self.concurrency,
            "step_limit": self.step_limit,
        }


def derive_seed(master: int, *parts) -> int:
    blob = "|".join([str(master)] + [str(p) for p in parts]).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def _atomic_write(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, "utf-8")
    os.replace(tmp, path)


# ----------------------------------------------------------------- validate


def cmd_validate(corpus_root: str, write: bool = False) -> int:
    root = Path(corpus_root) if corpus_root else bundled_corpus_root()
    if write:
        write_manifest(root)
        print(f"manifest rebuilt at {root / 'manifest.json'}")
    try:
        manifest = load_corpus(root)
    except (ValidationFailure, ManifestMismatch) as exc:
        print(f"VALIDATION FAILED: {exc}", file=sys.stderr)
        return 2
    print(f"{'entry':20s} {'class':12s} {'tests':>5s} {'branch':>7s} {'line':>7s}")
    for e in manifest.entries:
        print(
            f"{e.entry_id:20s} {e.stats['structure']:12s} "
            f"{e.stats['num_tests']:5d} {e.stats['branch_coverage']:7.3f} "
            f"{e.stats['line_coverage']:7.3f}"
        )
    agg = manifest.aggregate
    print(
        f"\n{agg['count']} entries valid; avg branch coverage "
        f"{agg['avg_branch_coverage']:.4f}; avg tests {agg['avg_tests']:.2f}"
    )
    return 0


# ------------------------------------------------------------------ perturb


def build_variants(
    entries: list[CorpusEntry], master_seed: int, categories: list[str],
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> dict[str, dict[str, PerturbedUnit]]:
    """Perturbed units per entry per kind; ineligible combinations are
    skipped with a log line. Raises on any preservation violation."""
    out: dict[str, dict[str, PerturbedUnit]] = {}
    for entry in entries:
        out[entry.entry_id] = {}
        for kind in categories:
            if kind == "Original":
                continue
            seed = derive_seed(master_seed, entry.entry_id, kind)
            try:
                pu = PERTURBERS[kind](entry.program, seed)
            except SpecEvalError as exc:
                log.info("%s/%s skipped: %s", entry.entry_id, kind, exc)
                continue
            _check_preservation(entry, pu, step_limit)
            out[entry.entry_id][kind] = pu
    return out


def _check_preservation(entry: CorpusEntry, pu: PerturbedUnit, step_limit: int):
    prepared_orig = prepare(entry.program)
    prepared_pert = prepare(pu.unit)
    for t in entry.tests:
        o1, _ = execute(entry.program, t, step_limit, prepared=prepared_orig)
        t2 = TestCase(pu.migrate_method_name(t.method), t.args, t.expected)
        o2, _ = execute(pu.unit, t2, step_limit, prepared=prepared_pert)
        if o1.key() != o2.key():
            raise ValidationFailure(
                entry.entry_id,
                f"{pu.kind} changed behavior on {t.method}{t.args}: "
                f"{o1.key()} != {o2.key()}",
            )
    tests = migrate_tests(entry.tests, pu.rename_map if pu.kind == "NameRandom" else {})
    for clause in pu.unit.specs:
        if not clause_correct(pu.unit, clause, tests, step_limit).correct:
            raise ValidationFailure(
                entry.entry_id,
                f"{pu.kind} migrated spec cid={clause.cid} no longer verdict-correct",
            )


def cmd_perturb(cfg: RunConfig) -> int:
    root = Path(cfg.corpus_root) if cfg.corpus_root else bundled_corpus_root()
    manifest = load_corpus(root, cfg.step_limit)
    out_dir = Path(cfg.output_dir) / "variants"
    try:
        variants = build_variants(
            manifest.entries, cfg.master_seed, cfg.categories, cfg.step_limit
        )
    except ValidationFailure as exc:
        print(f"PRESERVATION FAILED: {exc}", file=sys.stderr)
        return 3
    from .lang import print_unit

    count = 0
    for entry_id, per_kind in variants.items():
        for kind, pu in per_kind.items():
            kind_dir = out_dir / kind
            kind_dir.mkdir(parents=True, exist_ok=True)
            _atomic_write(kind_dir / f"{entry_id}.sj", print_unit(pu.unit))
            _atomic_write(
                kind_dir / f"{entry_id}.rename_map.json",
                json.dumps(pu.rename_map, indent=2, sort_keys=True) + "\n",
            )
            count += 1
    print(f"wrote {count} variants under {out_dir}")
    return 0


# ---------------------------------------------------------------- gen-tasks


def build_tasks(
    entries: list[CorpusEntry],
    cfg: RunConfig,
    variants: dict[str, dict[str, PerturbedUnit]],
) -> tuple[list[TaskInstance], list[dict]]:
    """Original tasks per program per type, then migrated twins per
    perturbation category; returns (tasks, skip log)."""
    tasks: list[TaskInstance] = []
    skipped: list[dict] = []
    for entry in entries:
        unit = entry.program
        table = resolve_scopes(unit)
        built: dict[str, object] = {}
        for ttype in cfg.task_types:
            seed = derive_seed(cfg.master_seed, entry.entry_id, ttype)
            try:
                if ttype == "judgement":
                    built[ttype] = taskgen.build_judgement(
                        unit, entry.ground_truth, entry.tests, seed, table
                    )
                elif ttype == "selection":
                    built[ttype] = taskgen.build_selection(
                        unit, entry.ground_truth, entry.tests, seed, table
                    )
                elif ttype == "infilling":
                    built[ttype] = taskgen.build_infilling(
                        unit, entry.ground_truth, entry.tests, seed
                    )
                else:
                    built[ttype] = taskgen.build_generation(unit, entry.ground_truth)
            except (UnrefutableMutant, NoMaskableNode) as exc:
                skipped.append(
                    {"program": entry.entry_id, "type": ttype, "category": "*",
                     "reason": str(exc)}
                )
        for category in cfg.categories:
            pu = None
            if category != "Original":
                pu = variants.get(entry.entry_id, {}).get(category)
                if pu is None:
                    skipped.append(
                        {"program": entry.entry_id, "type": "*", "category": category,
                         "reason": "no eligible perturbation"}
                    )
                    continue
            for ttype, task in built.items():
                seed = derive_seed(cfg.master_seed, entry.entry_id, ttype)
                method_map = (
                    pu.rename_map if pu is not None and pu.kind == "NameRandom" else {}
                )
                if ttype == "judgement":
                    t = task if pu is None else taskgen.migrate_judgement(task, pu)
                    inst = taskgen.package_judgement(
                        t, entry.entry_id, category, seed, method_map
                    )
                elif ttype == "selection":
                    t = task if pu is None else taskgen.migrate_selection(task, pu)
                    inst = taskgen.package_selection(
                        t, entry.entry_id, category, seed, method_map
                    )
                elif ttype == "infilling":
                    t = task if pu is None else taskgen.migrate_infilling(task, pu)
                    inst = taskgen.package_infilling(
                        t, entry.entry_id, category, seed, method_map
                    )
                else:
                    t = task if pu is None else taskgen.migrate_generation(task, pu)
                    annotated = unit if pu is None else pu.unit
                    inst = taskgen.package_generation(
                        t, annotated, entry.entry_id, category, seed, method_map
                    )
                tasks.append(inst)
    return tasks, skipped


def cmd_gentasks(cfg: RunConfig) -> int:
    root = Path(cfg.corpus_root) if cfg.corpus_root else bundled_corpus_root()
    manifest = load_corpus(root, cfg.step_limit)
    try:
        variants = build_variants(
            manifest.entries, cfg.master_seed, cfg.categories, cfg.step_limit
        )
    except ValidationFailure as exc:
        print(f"PRESERVATION FAILED: {exc}", file=sys.stderr)
        return 3
    tasks, skipped = build_tasks(manifest.entries, cfg, variants)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write(
        out / "tasks.jsonl",
        "".join(json.dumps(t.public_record(), sort_keys=True) + "\n" for t in tasks),
    )
    _atomic_write(
        out / "answer_keys.jsonl",
        "".join(json.dumps(t.key_record(), sort_keys=True) + "\n" for t in tasks),
    )
    _atomic_write(
        out / "skipped.json", json.dumps(skipped, indent=2, sort_keys=True) + "\n"
    )
    _atomic_write(
        out / "config.json", json.dumps(cfg.to_json(), indent=2, sort_keys=True) + "\n"
    )
    for rec in skipped:
        log.warning(
            "skipped %s/%s/%s: %s",
            rec["program"], rec["category"], rec["type"], rec["reason"],
        )
    print(f"wrote {len(tasks)} tasks ({len(skipped)} skips) under {out}")
    return 0


# --------------------------------------------------------------------- run


def make_endpoint(spec: dict, keys: dict[str, dict]):
    kind = spec.get("type", "oracle")
    if kind == "oracle":
        return modelio.Oracle(keys), "oracle"
    if kind == "fixed":
        return modelio.FixedAnswer(spec.get("template", "true")), "fixed"
    if kind == "random":
        return modelio.RandomAnswer(int(spec.get("seed", 0))), "random"
    if kind == "http":
        ep = modelio.HttpChat(
            base_url=spec["base_url"],
            model_name=spec.get("model", "default"),
            temperature=float(spec.get("temperature", 0.0)),
            top_k=int(spec.get("top_k", 1)),
            timeout=float(spec.get("timeout", 60.0)),
            max_retries=int(spec.get("max_retries", 3)),
        )
        return ep, spec.get("model", "http")
    raise SystemExit(f"unknown endpoint type {kind!r}")


def parse_endpoint_arg(arg: str) -> dict:
    if arg == "oracle":
        return {"type": "oracle"}
    if arg.startswith("fixed:"):
        return {"type": "fixed", "template": arg.split(":", 1)[1]}
    if arg.startswith("random:"):
        return {"type": "random", "seed": int(arg.split(":", 1)[1])}
    if arg.startswith("http:"):
        rest = arg.split(":", 1)[1]
        if "#" in rest:
            url, model = rest.rsplit("#", 1)
        else:
            url, model = rest, "default"
        return {"type": "http", "base_url": url, "model": model}
    raise SystemExit(f"cannot parse endpoint {arg!r}")


def grade_task(
    task: dict, key: dict, parsed, entry: CorpusEntry, model: str, step_limit: int
) -> GradedResult:
    ttype = task["type"]
    base = dict(
        task_id=task["task_id"], program=task["program"], category=task["category"],
        task_type=ttype, model=model,
    )
    if ttype == "judgement":
        return GradedResult(success=taskgen.grade_judgement(key, parsed), **base)
    if ttype == "selection":
        return GradedResult(success=taskgen.grade_selection(key, parsed), **base)
    if ttype == "infilling":
        ok = taskgen.grade_infilling(key, parsed, entry.tests)
        return GradedResult(success=ok, **base)
    gen_task = generation_task_from_key(key)
    tests = migrate_tests(entry.tests, key.get("method_map", {}))
    prec, rec, all_pass = metrics.generation_scores(gen_task, parsed, tests)
    return GradedResult(
        success=all_pass, precision=prec, recall=rec, all_pass=all_pass, **base
    )


def generation_task_from_key(key: dict) -> taskgen.GenerationTask:
    unit = parse_unit(key["program"])
    table = resolve_scopes(unit)
    gt = []
    for rec in key["ground_truth"]:
        expr = parse_spec_expr(rec["text"], unit, table, rec["kind"], rec["anchor"])
        gt.append(taskgen.ast.SpecClause(rec["kind"], rec["anchor"], expr, 0))
    anchors = [(a, k) for a, k in key["anchors"]]
    return taskgen.GenerationTask(unit, anchors, gt)


def cmd_run(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    tasks_path = out / "tasks.jsonl"
    keys_path = out / "answer_keys.jsonl"
    if not tasks_path.exists():
        print(f"no tasks.jsonl under {out}; run gen-tasks first", file=sys.stderr)
        return 1
    tasks = [json.loads(ln) for ln in tasks_path.read_text("utf-8").splitlines() if ln]
    keys = {
        rec["task_id"]: rec["answer_key"]
        for rec in (json.loads(ln) for ln in keys_path.read_text("utf-8").splitlines() if ln)
    }
    root = Path(cfg.corpus_root) if cfg.corpus_root else bundled_corpus_root()
    manifest = load_corpus(root, cfg.step_limit)
    entries = {e.entry_id: e for e in manifest.entries}
    endpoint, model = make_endpoint(cfg.endpoint, keys)

    results_path = out / "results.jsonl"
    done: set[str] = set()
    if results_path.exists():
        for ln in results_path.read_text("utf-8").splitlines():
            if ln:
                done.add(json.loads(ln)["task_id"])
    todo = [t for t in tasks if t["task_id"] not in done]
    log.info("%d tasks total, %d already graded, %d to run", len(tasks), len(done), len(todo))

    write_lock = threading.Lock()
    transcript_fh = (out / "transcript.jsonl").open("a", encoding="utf-8")
    results_fh = results_path.open("a", encoding="utf-8")

    def transcript_log(record: dict):
        with write_lock:
            transcript_fh.write(json.dumps(record, sort_keys=True) + "\n")
            transcript_fh.flush()

    def run_one(task: dict) -> GradedResult:
        prompt = modelio.build_prompt(_TaskView(task), cfg.shots)
        try:
            raw = modelio.query(endpoint, prompt, log=transcript_log)
            parsed = modelio.PARSERS[task["type"]](raw)
        except TransportError as exc:
            log.warning("%s: endpoint error: %s", task["task_id"], exc)
            parsed = modelio.ParsedAnswer("unparseable", None, str(exc))
        return grade_task(
            task, keys[task["task_id"]], parsed, entries[task["program"]],
            model, cfg.step_limit,
        )

    graded_count = 0

    def emit(g: GradedResult):
        nonlocal graded_count
        with write_lock:
            results_fh.write(json.dumps(g.to_json(), sort_keys=True) + "\n")
            results_fh.flush()
            graded_count += 1

    if cfg.concurrency > 1:
        with concurrent.futures.ThreadPoolExecutor(cfg.concurrency) as pool:
            for g in pool.map(run_one, todo):
                emit(g)
    else:
        for t in todo:
            emit(run_one(t))
    results_fh.close()
    transcript_fh.close()
    _atomic_write(
        out / "config.json", json.dumps(cfg.to_json(), indent=2, sort_keys=True) + "\n"
    )
    print(f"graded {graded_count} tasks (resumed past {len(done)}); results in {results_path}")
    return 0


class _TaskView:
    """Prompt-side view of a task record: payload only, no answer key."""

    def __init__(self, record: dict):
        self.task_id = record["task_id"]
        self.type = record["type"]
        self.payload = record["payload"]


# ------------------------------------------------------------------- score


def cmd_score(run_dir: str) -> int:
    out = Path(run_dir)
    results_path = out / "results.jsonl"
    if not results_path.exists():
        print(f"no results.jsonl under {out}", file=sys.stderr)
        return 4
    graded = [
        GradedResult.from_json(json.loads(ln))
        for ln in results_path.read_text("utf-8").splitlines()
        if ln
    ]
    report = metrics.aggregate_report(graded)
    cfg_path = out / "config.json"
    missing = []
    if cfg_path.exists():
        cfg = json.loads(cfg_path.read_text("utf-8"))
        have = {(g.category, g.task_type) for g in graded}
        for cat in cfg.get("categories", []):
            for ttype in cfg.get("task_types", []):
                if (cat, ttype) not in have:
                    missing.append(f"{cat}/{ttype}")
    _atomic_write(out / "report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    _atomic_write(out / "report.md", metrics.render_markdown(report))
    print(f"report written to {out / 'report.json'} and {out / 'report.md'}")
    if missing:
        print("missing cells: " + ", ".join(missing), file=sys.stderr)
        return 4
    return 0


# -------------------------------------------------------------------- main


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    updates = {}
    if args.corpus is not None:
        updates["corpus_root"] = args.corpus
    if getattr(args, "seed", None) is not None:
        updates["master_seed"] = args.seed
    if getattr(args, "shots", None) is not None:
        updates["shots"] = args.shots
    if getattr(args, "categories", None):
        cats = [c.strip() for c in args.categories.split(",") if c.strip()]
        for c in cats:
            if c not in ALL_CATEGORIES:
                raise SystemExit(
                    f"unknown category {c!r}; choose from {', '.join(ALL_CATEGORIES)}"
                )
        updates["categories"] = cats
    if getattr(args, "endpoint", None):
        updates["endpoint"] = parse_endpoint_arg(args.endpoint)
    if getattr(args, "output", None):
        updates["output_dir"] = args.output
    return replace(cfg, **updates)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("SPECEVAL_LOG", "WARNING"),
        format="%(levelname)s %(name)s: %(message)s",
    )
    ap = argparse.ArgumentParser(prog="speceval")
    sub = ap.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="validate a corpus")
    p_val.add_argument("--corpus", default=None)
    p_val.add_argument("--write-manifest", action="store_true")

    for name in ("perturb", "gen-tasks", "run"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--corpus", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--shots", type=int, choices=(0, 1, 2), default=None)
        p.add_argument("--categories", default=None)
        p.add_argument("--endpoint", default=None)
        p.add_argument("--output", default=None)

    p_score = sub.add_parser("score")
    p_score.add_argument("--run-dir", required=True)

    args = ap.parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args.corpus or "", args.write_manifest)
    if args.command == "score":
        return cmd_score(args.run_dir)
    cfg = _apply_overrides(RunConfig.load(args.config), args)
    if args.command == "perturb":
        return cmd_perturb(cfg)
    if args.command == "gen-tasks":
        return cmd_gentasks(cfg)
    if args.command == "run":
        return cmd_run(cfg)
    return 1


if __name__ == "__main__":
    sys.exit(main())
