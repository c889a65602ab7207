"""Prompt building, endpoint dispatch (with a local stub server), and
the total response parsers."""

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speceval import errors
from speceval.modelio import (
    FixedAnswer,
    HttpChat,
    Oracle,
    PromptBundle,
    RandomAnswer,
    build_prompt,
    parse_generation,
    parse_infilling,
    parse_judgement,
    parse_selection,
    query,
)
from speceval.taskgen import TaskInstance


def _task(ttype="judgement", payload=None):
    payload = payload or {
        "program": "class T {\n}\n",
        "anchor_desc": "method `f`",
        "candidate": "//@ ensures true;",
        "options": {"A": "//@ ensures true;", "B": "//@ ensures false;",
                    "C": "//@ requires true;", "D": "//@ ensures \\result == 1;"},
    }
    return TaskInstance(
        task_id=f"p:Original:{ttype}", type=ttype, category="Original",
        program="p", seed=1, payload=payload, answer_key={},
    )


# ------------------------------------------------------------------ prompts


def test_two_shot_bundle():
    bundle = build_prompt(_task(), 2)
    assert bundle.k == 2
    assert len(bundle.shots) == 2
    msgs = bundle.messages()
    assert msgs[0]["role"] == "system"
    assert len(msgs) == 1 + 4 + 1


def test_zero_shot_bundle():
    bundle = build_prompt(_task(), 0)
    assert bundle.shots == []
    assert len(bundle.messages()) == 2


def test_prompt_deterministic():
    a = build_prompt(_task(), 2)
    b = build_prompt(_task(), 2)
    assert a == b


def test_shot_count_validated():
    with pytest.raises(ValueError):
        build_prompt(_task(), 3)


# ---------------------------------------------------------------- endpoints


def test_oracle_replies_answer_key():
    keys = {"p:Original:judgement": {"truth": False}}
    assert query(Oracle(keys), build_prompt(_task(), 0)) == "false"


def test_fixed_answer():
    assert query(FixedAnswer("true"), build_prompt(_task(), 0)) == "true"


def test_random_answer_deterministic_per_task():
    ep = RandomAnswer(3)
    p = build_prompt(_task(), 0)
    assert query(ep, p) == query(ep, p)
    assert query(ep, p) in ("true", "false")


class _StubHandler(BaseHTTPRequestHandler):
    calls = []
    status_plan = []
    reply_text = "canned reply"

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        _StubHandler.calls.append(body)
        status = _StubHandler.status_plan.pop(0) if _StubHandler.status_plan else 200
        if status != 200:
            self.send_response(status)
            self.end_headers()
            return
        payload = json.dumps(
            {"choices": [{"message": {"content": _StubHandler.reply_text}}]}
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.calls = []
    _StubHandler.status_plan = []
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()


def test_http_chat_roundtrip_and_logging(stub_server):
    ep = HttpChat(base_url=stub_server, model_name="stub", max_retries=2)
    records = []
    reply = query(ep, build_prompt(_task(), 2), log=records.append)
    assert reply == "canned reply"
    sent = _StubHandler.calls[-1]
    assert sent["temperature"] == 0.0
    assert sent["top_k"] == 1
    assert sent["model"] == "stub"
    assert [m["role"] for m in sent["messages"]][:2] == ["system", "user"]
    assert len(records) == 1
    assert records[0]["response"] == "canned reply"
    assert records[0]["ts_response"] >= records[0]["ts_request"]


def test_http_chat_retries_on_5xx(stub_server):
    _StubHandler.status_plan = [500]
    ep = HttpChat(base_url=stub_server, model_name="stub", max_retries=3)
    assert query(ep, build_prompt(_task(), 0)) == "canned reply"


def test_http_chat_auth_error(stub_server):
    _StubHandler.status_plan = [401]
    ep = HttpChat(base_url=stub_server, model_name="stub")
    with pytest.raises(errors.AuthError):
        query(ep, build_prompt(_task(), 0))


def test_http_chat_transport_error_after_retries():
    ep = HttpChat(base_url="http://127.0.0.1:1", model_name="none",
                  max_retries=2, timeout=0.3)
    with pytest.raises(errors.TransportError):
        query(ep, build_prompt(_task(), 0))


# ------------------------------------------------------------------ parsers


def test_parse_judgement_keywords():
    assert parse_judgement("The specification is correct.").value is True
    assert parse_judgement("FALSE").value is False
    assert parse_judgement("  yes, it holds").value is True
    assert parse_judgement("Incorrect I think").value is False
    assert parse_judgement("maybe?").kind == "unparseable"


def test_parse_selection_first_label():
    assert parse_selection("B").value == "B"
    assert parse_selection("I choose (C) because...").value == "C"
    assert parse_selection("The answer: D.").value == "D"
    assert parse_selection("none of them").kind == "unparseable"


def test_parse_selection_unparseable_grades_failed():
    from speceval.taskgen import grade_selection

    parsed = parse_selection("my own new specification: ensures x > 0")
    assert parsed.kind == "unparseable"
    assert not grade_selection({"label": "A"}, parsed)


def test_parse_infilling_fenced_and_line():
    assert parse_infilling("```\ni + 1\n```").value == "i + 1"
    assert parse_infilling("the answer is\n0 <= k && k < n\ndone").value == "0 <= k && k < n"
    assert parse_infilling("n").value == "n"
    assert parse_infilling("").kind == "unparseable"


def test_parse_generation_structured(palindrome):
    from speceval.lang import print_unit

    raw = "Here you go:\n```\n" + print_unit(palindrome.program) + "```\n"
    parsed = parse_generation(raw)
    assert parsed.kind == "generation"
    clauses = parsed.value["clauses"]
    assert len(clauses) == 5
    kinds = sorted(c["kind"] for c in clauses)
    assert kinds == ["ensures", "loop_invariant", "loop_invariant",
                     "loop_invariant", "requires"]
    assert all(c["method"] == "isPalindrome" for c in clauses)
    invs = [c for c in clauses if c["kind"] == "loop_invariant"]
    assert all(c["loop_ordinal"] == 1 for c in invs)


def test_parse_generation_fallback_lines():
    raw = (
        "static int f(int x) {\n"
        "//@ requires x > 0;\n"
        "//@ ensures \\result == x;\n"
        "some prose\n"
        "//@ loop_invariant 0 <= i;\n"
    )
    parsed = parse_generation(raw)
    clauses = parsed.value["clauses"]
    assert [c["kind"] for c in clauses] == ["requires", "ensures", "loop_invariant"]
    assert all(c["method"] == "f" for c in clauses)
    assert clauses[2]["loop_ordinal"] == 1


def test_parse_generation_unparseable():
    assert parse_generation("I cannot help with that").kind == "unparseable"


@given(st.text(max_size=300))
@settings(max_examples=120, deadline=None)
def test_parsers_total_on_arbitrary_text(raw):
    for parser in (parse_judgement, parse_selection, parse_infilling, parse_generation):
        out = parser(raw)
        assert out.kind in ("judgement", "selection", "infilling",
                            "generation", "unparseable")
