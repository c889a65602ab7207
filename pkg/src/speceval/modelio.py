"""Prompt construction, model endpoints (HTTP chat plus deterministic
mocks), and total response parsers.

Parsers never raise: any reply that yields no usable answer becomes
Unparseable, which grades as failure.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from importlib import resources
from random import Random

import requests

from .errors import AuthError, SpecEvalError, TimeoutError, TransportError
from .lang import ast, parse_unit

SYSTEM_MESSAGE = (
    "You are an expert in formal program specifications for a small Java-like "
    "language. Specifications are JML-style annotations in //@ comments: "
    "requires (precondition), ensures (postcondition, where \\result is the "
    "return value and \\old(e) is the value of e at method entry), and "
    "loop_invariant. Quantifiers are bounded, e.g. "
    "(\\forall int i; 0 <= i && i < n; ...). Follow the requested output "
    "format exactly."
)

API_KEY_ENV = "SPECEVAL_API_KEY"


# ---------------------------------------------------------------- endpoints


@dataclass
class HttpChat:
    base_url: str
    model_name: str
    api_key_env: str = API_KEY_ENV
    temperature: float = 0.0
    top_k: int = 1
    timeout: float = 60.0
    max_retries: int = 3


@dataclass
class Oracle:
    """Replays the answer key; the ceiling model."""

    keys: dict[str, dict] = field(default_factory=dict)


@dataclass
class FixedAnswer:
    template: str


@dataclass
class RandomAnswer:
    seed: int


ModelEndpoint = HttpChat | Oracle | FixedAnswer | RandomAnswer


# ------------------------------------------------------------------ prompts


@dataclass
class PromptBundle:
    system: str
    shots: list[tuple[str, str]]
    task_text: str
    k: int
    task_id: str = ""
    task_type: str = ""

    def messages(self) -> list[dict]:
        msgs = [{"role": "system", "content": self.system}]
        for req, reply in self.shots:
            msgs.append({"role": "user", "content": req})
            msgs.append({"role": "assistant", "content": reply})
        msgs.append({"role": "user", "content": self.task_text})
        return msgs


def _load_shots() -> dict[str, list[tuple[str, str]]]:
    data = resources.files("speceval").joinpath("data/shots.json").read_text("utf-8")
    raw = json.loads(data)
    return {k: [(a, b) for a, b in v] for k, v in raw.items()}


_SHOTS_CACHE: dict | None = None


def tutorial_shots(task_type: str, k: int) -> list[tuple[str, str]]:
    global _SHOTS_CACHE
    if _SHOTS_CACHE is None:
        _SHOTS_CACHE = _load_shots()
    return _SHOTS_CACHE.get(task_type, [])[:k]


_TEMPLATES = {
    "judgement": (
        "Program:\n```\n{program}```\n\n"
        "Candidate specification for {anchor_desc}:\n"
        "    {candidate}\n\n"
        "Is this specification correct for the program? "
        "Answer with exactly one word: true or false."
    ),
    "selection": (
        "Program:\n```\n{program}```\n\n"
        "Four candidate specifications for {anchor_desc}:\n"
        "{options}\n"
        "Choose the most appropriate (correct and strongest) specification. "
        "Answer with a single letter: A, B, C, or D."
    ),
    "infilling": (
        "Program with specifications; exactly one specification contains the "
        "placeholder <MASK>:\n```\n{program}```\n\n"
        "Fill in <MASK> so the specification is correct for the program. "
        "Reply with only the replacement expression."
    ),
    "generation": (
        "Program without specifications:\n```\n{program}```\n\n"
        "Write JML-style specifications for it: one //@ requires line and one "
        "//@ ensures line above every method header, and //@ loop_invariant "
        "lines above every loop. Reply with the complete annotated program in "
        "a fenced code block."
    ),
}


def build_prompt(task, k: int) -> PromptBundle:
    """Deterministic prompt text for one task; k in {0, 1, 2}."""
    if k not in (0, 1, 2):
        raise ValueError("shot count must be 0, 1, or 2")
    payload = task.payload
    ttype = task.type
    if ttype == "judgement":
        text = _TEMPLATES[ttype].format(
            program=payload["program"],
            anchor_desc=payload["anchor_desc"],
            candidate=payload["candidate"],
        )
    elif ttype == "selection":
        options = "".join(
            f"{label}. {text}\n" for label, text in payload["options"].items()
        )
        text = _TEMPLATES[ttype].format(
            program=payload["program"],
            anchor_desc=payload["anchor_desc"],
            options=options,
        )
    elif ttype == "infilling":
        text = _TEMPLATES[ttype].format(program=payload["program"])
    elif ttype == "generation":
        text = _TEMPLATES[ttype].format(program=payload["program"])
    else:
        raise ValueError(f"unknown task type {ttype!r}")
    return PromptBundle(
        system=SYSTEM_MESSAGE,
        shots=tutorial_shots(ttype, k),
        task_text=text,
        k=k,
        task_id=task.task_id,
        task_type=ttype,
    )


# -------------------------------------------------------------------- query


def query(endpoint: ModelEndpoint, prompt: PromptBundle, log=None) -> str:
    """Dispatch a prompt and return raw reply text.

    Transport failures retry with backoff up to max_retries, then raise
    TransportError/AuthError/TimeoutError; callers grade such tasks as
    Unparseable rather than aborting the run.
    """
    started = time.time()
    if isinstance(endpoint, Oracle):
        reply = _oracle_reply(endpoint, prompt)
    elif isinstance(endpoint, FixedAnswer):
        reply = endpoint.template
    elif isinstance(endpoint, RandomAnswer):
        reply = _random_reply(endpoint, prompt)
    elif isinstance(endpoint, HttpChat):
        reply = _http_chat(endpoint, prompt)
    else:
        raise ValueError(f"unknown endpoint {endpoint!r}")
    if log is not None:
        log(
            {
                "task_id": prompt.task_id,
                "ts_request": started,
                "ts_response": time.time(),
                "messages": prompt.messages(),
                "response": reply,
            }
        )
    return reply


def _oracle_reply(endpoint: Oracle, prompt: PromptBundle) -> str:
    key = endpoint.keys[prompt.task_id]
    if prompt.task_type == "judgement":
        return "true" if key["truth"] else "false"
    if prompt.task_type == "selection":
        return key["label"]
    if prompt.task_type == "infilling":
        return key["answer"]
    if prompt.task_type == "generation":
        return "```\n" + key["annotated"] + "```"
    raise ValueError(prompt.task_type)


def _random_reply(endpoint: RandomAnswer, prompt: PromptBundle) -> str:
    rng = Random(f"{endpoint.seed}:{prompt.task_id}")
    if prompt.task_type == "judgement":
        return rng.choice(["true", "false"])
    if prompt.task_type == "selection":
        return rng.choice(["A", "B", "C", "D"])
    if prompt.task_type == "infilling":
        return rng.choice(["0", "1", "n", "i", "x + 1"])
    return "```\n//@ ensures true;\n```"


def _http_chat(endpoint: HttpChat, prompt: PromptBundle) -> str:
    api_key = os.environ.get(endpoint.api_key_env, "")
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    body = {
        "model": endpoint.model_name,
        "messages": prompt.messages(),
        "temperature": endpoint.temperature,
        "top_k": endpoint.top_k,
    }
    url = endpoint.base_url.rstrip("/") + "/chat/completions"
    last: Exception | None = None
    for attempt in range(endpoint.max_retries):
        try:
            resp = requests.post(url, json=body, headers=headers, timeout=endpoint.timeout)
        except requests.Timeout as exc:
            last = TimeoutError(str(exc))
        except requests.RequestException as exc:
            last = TransportError(str(exc))
        else:
            if resp.status_code in (401, 403):
                raise AuthError(f"HTTP {resp.status_code} from {url}")
            if resp.status_code >= 500:
                last = TransportError(f"HTTP {resp.status_code}")
            elif resp.status_code != 200:
                raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            else:
                try:
                    return resp.json()["choices"][0]["message"]["content"]
                except (KeyError, IndexError, ValueError) as exc:
                    raise TransportError(f"malformed response: {exc}")
        time.sleep(0.2 * (2**attempt))
    raise last if last is not None else TransportError("no attempts made")


# ------------------------------------------------------------------ parsers


@dataclass
class ParsedAnswer:
    kind: str  # judgement | selection | infilling | generation | unparseable
    value: object = None
    raw: str = ""


_TRUE_WORDS = {"true", "correct", "yes"}
_FALSE_WORDS = {"false", "incorrect", "no"}

_SPEC_OPERATORS = (
    "<==>", "==>", "\\result", "\\forall", "\\exists",
    "==", "!=", "<=", ">=", "&&", "||", "<", ">",
)

_FENCE_RE = re.compile(r"```[a-zA-Z]*\n(.*?)```", re.S)


def parse_judgement(raw: str) -> ParsedAnswer:
    for word in re.findall(r"[A-Za-z]+", raw):
        low = word.lower()
        if low in _TRUE_WORDS:
            return ParsedAnswer("judgement", True, raw)
        if low in _FALSE_WORDS:
            return ParsedAnswer("judgement", False, raw)
    return ParsedAnswer("unparseable", None, raw)


def parse_selection(raw: str) -> ParsedAnswer:
    m = re.search(r"\b([ABCD])\b", raw)
    if m:
        return ParsedAnswer("selection", m.group(1), raw)
    return ParsedAnswer("unparseable", None, raw)


def parse_infilling(raw: str) -> ParsedAnswer:
    m = _FENCE_RE.search(raw)
    if m:
        text = m.group(1).strip()
        if text:
            return ParsedAnswer("infilling", text, raw)
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        if any(op in line for op in _SPEC_OPERATORS) or re.fullmatch(r"[\w.()\[\] +\-*/%]+", line):
            return ParsedAnswer("infilling", line, raw)
    return ParsedAnswer("unparseable", None, raw)


def parse_generation(raw: str) -> ParsedAnswer:
    """Extract spec clauses with anchor information.

    Preferred path: a fenced block (or the whole reply) that parses as an
    annotated unit, giving exact anchors. Fallback: scan //@ lines,
    anchoring by the nearest preceding method-header-like line; clauses
    without a resolvable anchor are dropped and counted at grading.
    """
    blocks = _FENCE_RE.findall(raw)
    for block in blocks + [raw]:
        try:
            unit = parse_unit(block)
        except SpecEvalError:
            continue
        except RecursionError:
            continue
        clauses = []
        loops_by_method = _loops_by_method(unit)
        for c in unit.specs:
            entry = {"kind": c.kind, "text": _clause_body_text(c)}
            if isinstance(c.anchor, str):
                entry["method"] = c.anchor
            else:
                mname, ordinal = _loop_position(loops_by_method, c.anchor)
                entry["method"] = mname
                entry["loop_ordinal"] = ordinal
            clauses.append(entry)
        return ParsedAnswer(
            "generation", {"clauses": clauses, "unstructured": 0}, raw
        )

    clauses = []
    unstructured = 0
    current_method = None
    loop_group = 0
    prev_was_invariant = False
    header_re = re.compile(r"\b(?:int(?:\[\])?|boolean|String|void)\s+(\w+)\s*\(")
    for line in raw.splitlines():
        stripped = line.strip()
        m = header_re.search(stripped)
        if m and "//@" not in stripped:
            current_method = m.group(1)
            loop_group = 0
            prev_was_invariant = False
            continue
        if "//@" not in stripped:
            prev_was_invariant = False
            continue
        body = stripped.split("//@", 1)[1].strip()
        kind = next((k for k in ast.SPEC_KINDS if body.startswith(k)), None)
        if kind is None:
            unstructured += 1
            continue
        text = body[len(kind):].strip().rstrip(";").strip()
        if not text:
            unstructured += 1
            continue
        entry = {"kind": kind, "text": text, "method": current_method}
        if kind == ast.LOOP_INVARIANT:
            if not prev_was_invariant:
                loop_group += 1
            entry["loop_ordinal"] = loop_group
            prev_was_invariant = True
        else:
            prev_was_invariant = False
        clauses.append(entry)
    if not clauses:
        return ParsedAnswer("unparseable", None, raw)
    return ParsedAnswer(
        "generation", {"clauses": clauses, "unstructured": unstructured}, raw
    )


def _loops_by_method(unit) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {}
    for m in unit.methods:
        ids = [
            st.loop_id
            for st in ast.walk_stmts(m.body)
            if isinstance(st, (ast.While, ast.For))
        ]
        out[m.name] = ids
    return out


def _loop_position(loops_by_method: dict[str, list[int]], loop_id: int):
    for mname, ids in loops_by_method.items():
        if loop_id in ids:
            return mname, ids.index(loop_id) + 1
    return None, None


def _clause_body_text(c) -> str:
    from .lang import expr_to_text

    return expr_to_text(c.expr)


PARSERS = {
    "judgement": parse_judgement,
    "selection": parse_selection,
    "infilling": parse_infilling,
    "generation": parse_generation,
}
