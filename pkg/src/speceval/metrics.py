"""Task metrics (accuracy, generation precision/recall/#Pass) and
counterfactual metrics (Jaccard distance over handled-program sets,
average variance of generation metrics), plus report aggregation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import EmptySlice, SpecEvalError
from .lang import ast, parse_spec_expr, resolve_scopes
from .runtime import TestCase, check_equivalence, clause_correct
from .taskgen import GenerationTask

log = logging.getLogger(__name__)

CATEGORY_ORIGINAL = "Original"
CATEGORIES = (
    "Original",
    "DefUseBreak",
    "IfElseFlip",
    "IndependentSwap",
    "NameRandom",
    "NameShuffle",
)
PERTURBED_CATEGORIES = CATEGORIES[1:]
TASK_TYPES = ("judgement", "selection", "infilling", "generation")


@dataclass
class GradedResult:
    task_id: str
    program: str
    category: str
    task_type: str
    success: bool
    model: str = "model"
    precision: Optional[float] = None
    recall: Optional[float] = None
    all_pass: Optional[bool] = None
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "program": self.program,
            "category": self.category,
            "task_type": self.task_type,
            "success": self.success,
            "model": self.model,
            "precision": self.precision,
            "recall": self.recall,
            "all_pass": self.all_pass,
            "detail": self.detail,
        }

    @staticmethod
    def from_json(obj: dict) -> "GradedResult":
        return GradedResult(
            obj["task_id"], obj["program"], obj["category"], obj["task_type"],
            obj["success"], obj.get("model", "model"), obj.get("precision"),
            obj.get("recall"), obj.get("all_pass"), obj.get("detail", {}),
        )


# ------------------------------------------------------------ base metrics


def accuracy(results: Iterable[GradedResult], predicate=None) -> float:
    """Mean success indicator over the (filtered) results."""
    rows = [r for r in results if predicate is None or predicate(r)]
    if not rows:
        raise EmptySlice("no results match the filter")
    return sum(1 for r in rows if r.success) / len(rows)


def jaccard(handled_original: set, handled_perturbed: set) -> float:
    """1 - |A∩B| / |A∪B|; two empty sets are perfectly consistent (0)."""
    union = handled_original | handled_perturbed
    if not union:
        return 0.0
    return 1.0 - len(handled_original & handled_perturbed) / len(union)


def avg_variance(pairs: Iterable[tuple[float, float]]) -> float:
    """Mean |m' - m| over pairs where either side is nonzero."""
    eligible = [(a, b) for a, b in pairs if a > 0 or b > 0]
    if not eligible:
        return 0.0
    return sum(abs(b - a) for a, b in eligible) / len(eligible)


# ------------------------------------------------------- generation scoring


def _resolve_generated(task: GenerationTask, clauses: list[dict]):
    """Map extracted clauses onto the task unit's anchors."""
    unit = task.unit
    method_names = [m.name for m in unit.methods]
    loops_by_m = {
        m.name: [
            st.loop_id
            for st in ast.walk_stmts(m.body)
            if isinstance(st, (ast.While, ast.For))
        ]
        for m in unit.methods
    }
    resolved = []
    dropped = 0
    for c in clauses:
        mname = c.get("method")
        if mname not in loops_by_m:
            if len(method_names) == 1:
                mname = method_names[0]
            else:
                dropped += 1
                continue
        if c["kind"] == ast.LOOP_INVARIANT:
            ordinal = c.get("loop_ordinal")
            loops = loops_by_m[mname]
            if ordinal is None or not 1 <= ordinal <= len(loops):
                dropped += 1
                continue
            anchor: ast.Anchor = loops[ordinal - 1]
        else:
            anchor = mname
        resolved.append((c["kind"], anchor, c["text"]))
    return resolved, dropped


def generation_scores(
    task: GenerationTask, answer, tests: list[TestCase]
) -> tuple[float, float, bool]:
    """(precision, recall, all_pass) of one generation answer.

    Precision is the fraction of parsable generated clauses that pass
    runtime checking; recall the fraction of ground-truth clauses matched
    by an equivalent generated clause at the same anchor; all_pass holds
    when every emitted clause parsed and passed.
    """
    if getattr(answer, "kind", None) != "generation":
        log.info("unparseable generation answer; scored (0, 0, False)")
        return 0.0, 0.0, False
    unit = task.unit
    table = resolve_scopes(unit)
    resolved, dropped = _resolve_generated(task, answer.value["clauses"])
    dropped += answer.value.get("unstructured", 0)
    parsed: list[ast.SpecClause] = []
    for kind, anchor, text in resolved:
        try:
            expr = parse_spec_expr(text, unit, table, kind, anchor)
        except (SpecEvalError, RecursionError):
            dropped += 1
            continue
        parsed.append(ast.SpecClause(kind, anchor, expr, 0))
    if not parsed:
        log.info("no parsable generated clause; precision 0 by convention")
        return 0.0, 0.0, False
    correct_flags = [clause_correct(unit, c, tests).correct for c in parsed]
    precision = sum(correct_flags) / len(parsed)
    matched = 0
    for gt in task.ground_truth:
        hit = False
        for cand, ok in zip(parsed, correct_flags):
            if cand.kind != gt.kind or cand.anchor != gt.anchor:
                continue
            if check_equivalence(gt, cand, unit, tests):
                hit = True
                break
        if hit:
            matched += 1
    recall = matched / len(task.ground_truth) if task.ground_truth else 0.0
    all_pass = all(correct_flags) and dropped == 0
    return precision, recall, all_pass


# --------------------------------------------------------------- reporting


def _cell(rows: list[GradedResult]) -> dict:
    cell: dict = {"n": len(rows)}
    if not rows:
        return cell
    ttype = rows[0].task_type
    if ttype in ("judgement", "selection"):
        cell["accuracy"] = sum(r.success for r in rows) / len(rows)
    elif ttype == "infilling":
        cell["accuracy"] = sum(r.success for r in rows) / len(rows)
        cell["pass"] = sum(1 for r in rows if r.success)
    else:
        cell["precision"] = sum(r.precision or 0.0 for r in rows) / len(rows)
        cell["recall"] = sum(r.recall or 0.0 for r in rows) / len(rows)
        cell["pass"] = sum(1 for r in rows if r.all_pass)
    return cell


def aggregate_report(graded: list[GradedResult]) -> dict:
    """Full report: per (model, category, type) cells plus per-kind
    counterfactual distances and averages. Cells with no results are
    marked absent and collected as warnings, not zeroed."""
    if not graded:
        raise EmptySlice("no graded results")
    report: dict = {"models": {}, "warnings": []}
    models = sorted({r.model for r in graded})
    for model in models:
        mine = [r for r in graded if r.model == model]
        mreport: dict = {"categories": {}, "counterfactual": {}}
        by_cat_type: dict = {}
        for r in mine:
            by_cat_type.setdefault((r.category, r.task_type), []).append(r)
        seen_categories = sorted({r.category for r in mine}, key=_cat_order)
        for cat in seen_categories:
            catcell = {}
            for ttype in TASK_TYPES:
                rows = by_cat_type.get((cat, ttype))
                if rows is None:
                    report["warnings"].append(
                        f"{model}: missing cell ({cat}, {ttype})"
                    )
                    continue
                catcell[ttype] = _cell(rows)
            mreport["categories"][cat] = catcell
        kind_avgs = []
        for kind in PERTURBED_CATEGORIES:
            if kind not in seen_categories:
                continue
            cf = _counterfactual(mine, kind)
            mreport["counterfactual"][kind] = cf
            kind_avgs.append(cf["avg"])
        mreport["counterfactual_avg"] = (
            sum(kind_avgs) / len(kind_avgs) if kind_avgs else None
        )
        report["models"][model] = mreport
    return report


def _cat_order(cat: str) -> int:
    return CATEGORIES.index(cat) if cat in CATEGORIES else len(CATEGORIES)


def _counterfactual(rows: list[GradedResult], kind: str) -> dict:
    """Jaccard distances and average variances of `kind` versus Original,
    over programs evaluated in both categories."""
    out: dict = {}
    js = []
    for ttype, label in (
        ("judgement", "j_jud"), ("selection", "j_sel"), ("infilling", "j_inf")
    ):
        orig = {r.program: r.success for r in rows
                if r.category == CATEGORY_ORIGINAL and r.task_type == ttype}
        pert = {r.program: r.success for r in rows
                if r.category == kind and r.task_type == ttype}
        domain = set(orig) & set(pert)
        handled_o = {p for p in domain if orig[p]}
        handled_p = {p for p in domain if pert[p]}
        value = jaccard(handled_o, handled_p)
        out[label] = value
        out[label + "_n"] = len(domain)
        js.append(value)
    orig_gen = {r.program: r for r in rows
                if r.category == CATEGORY_ORIGINAL and r.task_type == "generation"}
    pert_gen = {r.program: r for r in rows
                if r.category == kind and r.task_type == "generation"}
    domain = set(orig_gen) & set(pert_gen)
    prec_pairs = [
        (orig_gen[p].precision or 0.0, pert_gen[p].precision or 0.0) for p in domain
    ]
    rec_pairs = [
        (orig_gen[p].recall or 0.0, pert_gen[p].recall or 0.0) for p in domain
    ]
    out["v_prec"] = avg_variance(prec_pairs)
    out["v_rec"] = avg_variance(rec_pairs)
    out["v_n"] = len(domain)
    out["avg"] = (js[0] + js[1] + js[2] + out["v_prec"] + out["v_rec"]) / 5
    return out


def render_markdown(report: dict) -> str:
    """Tables shaped like the per-task performance table and the
    perturbation-impact table."""
    lines = ["# Evaluation report", "", "## Performance per task and category", ""]
    lines.append(
        "| Category | Model | Jud Acc. | Sel Acc. | Inf Acc. | Inf #Pass "
        "| Gen Prec. | Gen Rec. | Gen #Pass |"
    )
    lines.append("|---|---|---|---|---|---|---|---|---|")
    for model, mrep in report["models"].items():
        for cat, cells in mrep["categories"].items():

            def fmt(t, key, scale=100.0, count=False):
                cell = cells.get(t)
                if cell is None or key not in cell:
                    return "-"
                return str(cell[key]) if count else f"{cell[key] * scale:.2f}"

            lines.append(
                f"| {cat} | {model} "
                f"| {fmt('judgement', 'accuracy')} "
                f"| {fmt('selection', 'accuracy')} "
                f"| {fmt('infilling', 'accuracy')} "
                f"| {fmt('infilling', 'pass', count=True)} "
                f"| {fmt('generation', 'precision')} "
                f"| {fmt('generation', 'recall')} "
                f"| {fmt('generation', 'pass', count=True)} |"
            )
    lines += ["", "## Perturbation impact", ""]
    lines.append("| Model | Metric | " + " | ".join(PERTURBED_CATEGORIES) + " | Avg. |")
    lines.append("|---|---|" + "---|" * (len(PERTURBED_CATEGORIES) + 1))
    for model, mrep in report["models"].items():
        cf = mrep["counterfactual"]
        for metric in ("j_jud", "j_sel", "j_inf", "v_prec", "v_rec"):
            row = [f"{cf[k][metric]:.3f}" if k in cf else "-" for k in PERTURBED_CATEGORIES]
            metric_avg = [cf[k][metric] for k in PERTURBED_CATEGORIES if k in cf]
            avg = sum(metric_avg) / len(metric_avg) if metric_avg else None
            lines.append(
                f"| {model} | {metric} | " + " | ".join(row)
                + (f" | {avg:.3f} |" if avg is not None else " | - |")
            )
        kind_row = [f"{cf[k]['avg']:.3f}" if k in cf else "-" for k in PERTURBED_CATEGORIES]
        overall = mrep.get("counterfactual_avg")
        lines.append(
            f"| {model} | Avg. | " + " | ".join(kind_row)
            + (f" | {overall:.3f} |" if overall is not None else " | - |")
        )
    return "\n".join(lines) + "\n"
