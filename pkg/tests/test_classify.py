import json

import pytest

from ccimpact.classify import (
    ChatClient,
    ConsistencyVerdict,
    PromptTemplate,
    RecordCategory,
    EXPOSED_CATEGORIES,
    _extract_json_object,
    categorize,
    classify_heuristic,
    classify_llm,
    load_cup2,
    load_verdict_keys,
    record_key,
    recompute_cup2_label,
    write_verdict,
)
from ccimpact.errors import EndpointUnavailable, MalformedResponse, ParseError, RateLimited
from ccimpact.records import MethodRecord


def make_record(old_code="int f() { return 1; }",
                new_code="int f() { return 1; }",
                old_comment="/** doc */",
                new_comment="/** doc */") -> MethodRecord:
    return MethodRecord(
        old_commit="a" * 40, new_commit="b" * 40,
        old_code=old_code, new_code=new_code,
        old_comment=old_comment, new_comment=new_comment,
        is_bug_introducing=True, old_time=0, new_time=86400,
        repo_name="fixture", window_days_back=1.0, signature_key="C.f()",
    )


# --- heuristic -------------------------------------------------------------

def test_heuristic_body_changed_comment_same():
    v = classify_heuristic(make_record(new_code="int f() { return 2; }"))
    assert (v.consistent_with_new_code, v.consistent_with_old_code) == (False, True)


def test_heuristic_comment_changed():
    v = classify_heuristic(make_record(new_comment="/** other */",
                                       new_code="int f() { return 2; }"))
    assert (v.consistent_with_new_code, v.consistent_with_old_code) == (True, False)


def test_heuristic_nothing_changed():
    v = classify_heuristic(make_record())
    assert (v.consistent_with_new_code, v.consistent_with_old_code) == (True, True)
    assert categorize(make_record(), v) is RecordCategory.NORMAL


def test_heuristic_is_pure():
    r = make_record(new_code="int f() { return 3; }")
    assert classify_heuristic(r) == classify_heuristic(r)


# --- categorize ------------------------------------------------------------

def test_categorize_mapping():
    unchanged = make_record(new_code="int f() { return 2; }")
    changed = make_record(new_code="int f() { return 2; }",
                          new_comment="/** new words */")
    assert categorize(unchanged, ConsistencyVerdict(True, True)) is RecordCategory.NORMAL
    assert categorize(unchanged, ConsistencyVerdict(True, False)) is RecordCategory.NORMAL
    assert categorize(unchanged, ConsistencyVerdict(False, True)) is RecordCategory.OUTDATED
    assert categorize(unchanged, ConsistencyVerdict(False, False)) is RecordCategory.EARLIER_OUTDATED
    assert categorize(changed, ConsistencyVerdict(False, False)) is RecordCategory.UNCATEGORIZED_INCONSISTENT


def test_categorize_strict_outdated():
    changed = make_record(new_code="int f() { return 2; }",
                          new_comment="/** new words */")
    lenient = categorize(changed, ConsistencyVerdict(False, True))
    strict = categorize(changed, ConsistencyVerdict(False, True), strict_outdated=True)
    assert lenient is RecordCategory.OUTDATED
    assert strict is RecordCategory.UNCATEGORIZED_INCONSISTENT


def test_exposed_categories():
    assert RecordCategory.OUTDATED in EXPOSED_CATEGORIES
    assert RecordCategory.EARLIER_OUTDATED in EXPOSED_CATEGORIES
    assert RecordCategory.NORMAL not in EXPOSED_CATEGORIES
    assert RecordCategory.UNCATEGORIZED_INCONSISTENT not in EXPOSED_CATEGORIES


def test_llm_verdict_requires_rationale():
    with pytest.raises(ValueError):
        ConsistencyVerdict(True, True, rationale="", source="llm")


# --- prompt templates ------------------------------------------------------

def test_zero_shot_payload_contains_record():
    r = make_record(old_comment="/** alpha */", new_comment="/** beta */")
    messages = PromptTemplate().render(r)
    assert messages[0]["role"] == "system"
    assert len(messages) == 2
    assert "/** alpha */" in messages[-1]["content"]
    assert "/** beta */" in messages[-1]["content"]


def test_few_shot_adds_exemplars_only():
    r = make_record()
    zero = PromptTemplate("zero_shot").render(r)
    few = PromptTemplate("few_shot", few_shot_k=2).render(r)
    assert few[0] == zero[0]            # same system message
    assert few[-1] == zero[-1]          # same final user payload
    assert len(few) == len(zero) + 4    # k exemplar user/assistant pairs
    for msg in few[1:-1:2]:
        assert msg["role"] == "user"
    for msg in few[2:-1:2]:
        assert msg["role"] == "assistant"
        json.loads(msg["content"])      # exemplar answers are valid JSON


def test_unknown_template_mode_rejected():
    with pytest.raises(ValueError):
        PromptTemplate("chain_of_thought").render(make_record())


# --- chat client (fake transport) ------------------------------------------

class FakeResponse:
    def __init__(self, status_code=200, content="", text=""):
        self.status_code = status_code
        self.text = text or content
        self._content = content

    def json(self):
        return {"choices": [{"message": {"content": self._content}}]}


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers})
        return self.responses.pop(0)


VALID = json.dumps({"consistent_with_new_code": False,
                    "consistent_with_old_code": True,
                    "rationale": "comment still matches the old body"})


def _client(responses, **kw):
    session = FakeSession(responses)
    client = ChatClient("http://endpoint.invalid/v1/chat", "test-model",
                        backoff_base=0.0, session=session, **kw)
    return client, session


def test_llm_passthrough_verdict():
    client, session = _client([FakeResponse(content=VALID)])
    v = classify_llm(make_record(), PromptTemplate(), client)
    assert v.consistent_with_new_code is False
    assert v.consistent_with_old_code is True
    assert v.rationale and v.source == "llm"
    body = session.calls[0]["json"]
    assert body["model"] == "test-model"
    assert body["temperature"] == 0.0 and body["top_p"] == 1.0
    assert body["messages"][0]["role"] == "system"


def test_llm_reprompts_once_on_prose():
    client, session = _client([
        FakeResponse(content="Sure! The comment looks stale to me."),
        FakeResponse(content=VALID),
    ])
    v = classify_llm(make_record(), PromptTemplate(), client)
    assert v.consistent_with_new_code is False
    assert len(session.calls) == 2
    # the retry carries the failed reply plus a corrective user turn
    retry = session.calls[1]["json"]["messages"]
    assert retry[-2]["role"] == "assistant"
    assert retry[-1]["role"] == "user" and "JSON" in retry[-1]["content"]


def test_llm_persistent_prose_is_malformed():
    client, session = _client([FakeResponse(content="nope"),
                               FakeResponse(content="still nope")])
    with pytest.raises(MalformedResponse):
        classify_llm(make_record(), PromptTemplate(), client)
    assert len(session.calls) == 2


def test_rate_limit_exhausts_retries():
    client, session = _client([FakeResponse(status_code=429)] * 3, max_retries=2)
    with pytest.raises(RateLimited):
        client.complete([{"role": "user", "content": "x"}])
    assert len(session.calls) == 3


def test_server_error_then_success_retries():
    client, _ = _client([FakeResponse(status_code=503),
                         FakeResponse(content=VALID)], max_retries=2)
    assert client.complete([{"role": "user", "content": "x"}]) == VALID


def test_client_error_is_fatal():
    client, session = _client([FakeResponse(status_code=404, text="gone")])
    with pytest.raises(EndpointUnavailable):
        client.complete([{"role": "user", "content": "x"}])
    assert len(session.calls) == 1


def test_credential_read_from_environment_only(monkeypatch):
    monkeypatch.setenv("CCIMPACT_API_KEY", "sekrit")
    client, session = _client([FakeResponse(content=VALID)])
    client.complete([{"role": "user", "content": "x"}])
    assert session.calls[0]["headers"]["Authorization"] == "Bearer sekrit"

    monkeypatch.delenv("CCIMPACT_API_KEY")
    client2, session2 = _client([FakeResponse(content=VALID)])
    client2.complete([{"role": "user", "content": "x"}])
    assert "Authorization" not in session2.calls[0]["headers"]


# --- JSON extraction --------------------------------------------------------

def test_extract_json_embedded_in_prose():
    obj = _extract_json_object(f"Here is my answer:\n{VALID}\nThanks!")
    assert obj["consistent_with_old_code"] is True


def test_extract_json_missing_keys():
    with pytest.raises(MalformedResponse):
        _extract_json_object('{"consistent_with_new_code": true}')


def test_extract_json_non_boolean():
    with pytest.raises(MalformedResponse):
        _extract_json_object('{"consistent_with_new_code": "yes", '
                             '"consistent_with_old_code": true, "rationale": "r"}')


# --- labeled evaluation instances -------------------------------------------

def _cup2_line(**overrides):
    base = {"old_code": "int f(){}", "new_code": "int g(){}",
            "old_comment": "/** a */", "new_comment": "/** b */", "label": True}
    base.update(overrides)
    return json.dumps(base)


def test_load_cup2_three_lines(tmp_path):
    path = tmp_path / "data.jsonl"
    path.write_text("\n".join(_cup2_line() for _ in range(3)) + "\n")
    instances = load_cup2(path)
    assert len(instances) == 3
    assert instances[0].label is True


def test_load_cup2_missing_field_reports_line(tmp_path):
    path = tmp_path / "data.jsonl"
    bad = json.loads(_cup2_line())
    del bad["new_comment"]
    path.write_text(_cup2_line() + "\n" + json.dumps(bad) + "\n")
    with pytest.raises(ParseError) as exc:
        load_cup2(path)
    assert exc.value.line_no == 2


def test_load_cup2_invalid_json_reports_line(tmp_path):
    path = tmp_path / "data.jsonl"
    path.write_text(_cup2_line() + "\n{oops\n")
    with pytest.raises(ParseError) as exc:
        load_cup2(path)
    assert exc.value.line_no == 2


def test_label_recomputation_ignores_punctuation(tmp_path):
    path = tmp_path / "data.jsonl"
    path.write_text(_cup2_line(old_comment="/** Sorts items. */",
                               new_comment="/** Sorts items */",
                               label=True) + "\n")
    (inst,) = load_cup2(path)
    assert recompute_cup2_label(inst) is False

    other = tmp_path / "other.jsonl"
    other.write_text(_cup2_line() + "\n")
    assert recompute_cup2_label(load_cup2(other)[0]) is True


# --- verdict persistence -----------------------------------------------------

def test_verdict_roundtrip_and_resume(tmp_path):
    r1 = make_record()
    r2 = make_record(new_comment="/** different */")
    r2.signature_key = "C.g()"
    path = tmp_path / "verdicts.jsonl"
    with open(path, "w") as fh:
        write_verdict(fh, r1, ConsistencyVerdict(False, True), RecordCategory.OUTDATED)
        write_verdict(fh, r2, None, None, error="RateLimited: endpoint")
    keys = load_verdict_keys(path)
    assert keys == {record_key(r1), record_key(r2)}
    lines = [json.loads(l) for l in path.read_text().splitlines()]
    assert lines[0]["category"] == "outdated"
    assert "error" in lines[1] and "category" not in lines[1]


def test_load_verdict_keys_missing_file(tmp_path):
    assert load_verdict_keys(tmp_path / "absent.jsonl") == set()
