"""Comment-consistency classification and record categorization.

A classifier decides whether a record's new comment is consistent with
the new code and with the old code. Two classifiers ship: a change-based
heuristic (no network) and a chat-endpoint client with structured JSON
responses. Verdicts map onto four record categories; Outdated and
EarlierOutdated together form the exposed group for the odds-ratio stage.
"""

from __future__ import annotations

import enum
import json
import os
import re
import time
from dataclasses import dataclass

import requests

from .errors import EndpointUnavailable, MalformedResponse, ParseError, RateLimited
from .javalex import normalize_body, normalize_comment
from .records import MethodRecord


class RecordCategory(enum.Enum):
    OUTDATED = "outdated"
    EARLIER_OUTDATED = "earlier_outdated"
    NORMAL = "normal"
    UNCATEGORIZED_INCONSISTENT = "uncategorized_inconsistent"


EXPOSED_CATEGORIES = frozenset({
    RecordCategory.OUTDATED,
    RecordCategory.EARLIER_OUTDATED,
})


@dataclass
class ConsistencyVerdict:
    consistent_with_new_code: bool
    consistent_with_old_code: bool
    rationale: str = ""
    source: str = "heuristic"  # heuristic | llm | mock

    def __post_init__(self):
        if self.source == "llm" and not self.rationale:
            raise ValueError("llm verdicts must carry a rationale")


def classify_heuristic(record: MethodRecord) -> ConsistencyVerdict:
    """Change-based rule: a body edit without a comment edit leaves the
    comment describing the old code; a comment edit is taken as keeping up
    with the code."""
    comment_same = normalize_comment(record.old_comment) == normalize_comment(
        record.new_comment
    )
    body_same = normalize_body(record.old_code) == normalize_body(record.new_code)
    if comment_same and not body_same:
        return ConsistencyVerdict(False, True, source="heuristic")
    if not comment_same:
        return ConsistencyVerdict(True, False, source="heuristic")
    return ConsistencyVerdict(True, True, source="heuristic")


def categorize(record: MethodRecord, verdict: ConsistencyVerdict,
               strict_outdated: bool = False) -> RecordCategory:
    """Map a verdict onto the record categories.

    strict_outdated additionally requires an unchanged comment for the
    Outdated bucket (both readings of the category definition exist; the
    lenient one is the default)."""
    comment_unchanged = normalize_comment(record.old_comment) == normalize_comment(
        record.new_comment
    )
    if verdict.consistent_with_new_code:
        return RecordCategory.NORMAL
    if verdict.consistent_with_old_code:
        if strict_outdated and not comment_unchanged:
            return RecordCategory.UNCATEGORIZED_INCONSISTENT
        return RecordCategory.OUTDATED
    if comment_unchanged:
        return RecordCategory.EARLIER_OUTDATED
    return RecordCategory.UNCATEGORIZED_INCONSISTENT


# --- chat-endpoint classifier -------------------------------------------

VERDICT_SCHEMA_KEYS = ("consistent_with_new_code", "consistent_with_old_code",
                       "rationale")

ZERO_SHOT_SYSTEM = (
    "You review Java method changes. Given the old method, the new method, "
    "the old comment and the new comment, decide whether the new comment is "
    "consistent with the new code, and whether it is consistent with the old "
    "code. Explain the rationale behind your answer. Respond with exactly one "
    "JSON object: {\"consistent_with_new_code\": bool, "
    "\"consistent_with_old_code\": bool, \"rationale\": string}."
)

FEW_SHOT_EXEMPLARS = [
    {
        "old_code": "int max(int a, int b) { return a > b ? a : b; }",
        "new_code": "int max(int a, int b) { return a >= b ? a : b; }",
        "old_comment": "/** Returns the larger of two values. */",
        "new_comment": "/** Returns the larger of two values. */",
        "verdict": {"consistent_with_new_code": True,
                    "consistent_with_old_code": True,
                    "rationale": "Tie-breaking changed but the comment still "
                                 "describes both versions."},
    },
    {
        "old_code": "List<User> active() { return users; }",
        "new_code": "List<User> active() { return users.stream()"
                    ".filter(User::enabled).toList(); }",
        "old_comment": "/** Returns all users. */",
        "new_comment": "/** Returns all users. */",
        "verdict": {"consistent_with_new_code": False,
                    "consistent_with_old_code": True,
                    "rationale": "The new method filters to enabled users; "
                                 "the unchanged comment describes the old "
                                 "behavior only."},
    },
    {
        "old_code": "void save(Path p) { write(p, data); }",
        "new_code": "void save(Path p) { write(p, data); fsync(p); }",
        "old_comment": "/** Persists data without flushing. */",
        "new_comment": "/** Persists data and flushes to disk. */",
        "verdict": {"consistent_with_new_code": True,
                    "consistent_with_old_code": False,
                    "rationale": "The comment was updated with the flush "
                                 "behavior and matches the new code."},
    },
    {
        "old_code": "int retries() { return 3; }",
        "new_code": "int retries() { return limit; }",
        "old_comment": "/** Always five retries. */",
        "new_comment": "/** Always five retries. */",
        "verdict": {"consistent_with_new_code": False,
                    "consistent_with_old_code": False,
                    "rationale": "The comment matches neither the constant 3 "
                                 "nor the configurable limit; it was stale "
                                 "before this change."},
    },
]


@dataclass(frozen=True)
class PromptTemplate:
    mode: str = "zero_shot"  # zero_shot | few_shot
    few_shot_k: int = 4

    def render(self, record: MethodRecord) -> list[dict]:
        messages = [{"role": "system", "content": ZERO_SHOT_SYSTEM}]
        if self.mode == "few_shot":
            for ex in FEW_SHOT_EXEMPLARS[: self.few_shot_k]:
                messages.append({"role": "user", "content": _payload(
                    ex["old_code"], ex["new_code"],
                    ex["old_comment"], ex["new_comment"])})
                messages.append({"role": "assistant",
                                 "content": json.dumps(ex["verdict"])})
        elif self.mode != "zero_shot":
            raise ValueError(f"unknown prompt mode {self.mode!r}")
        messages.append({"role": "user", "content": _payload(
            record.old_code, record.new_code,
            record.old_comment, record.new_comment)})
        return messages


def _payload(old_code, new_code, old_comment, new_comment):
    return (
        f"Old code:\n{old_code}\n\nNew code:\n{new_code}\n\n"
        f"Old comment:\n{old_comment}\n\nNew comment:\n{new_comment}"
    )


class ChatClient:
    """HTTP chat-completion client. Credential comes from an environment
    variable, never from config files."""

    def __init__(self, base_url: str, model: str,
                 credential_env: str = "CCIMPACT_API_KEY",
                 temperature: float = 0.0, top_p: float = 1.0,
                 max_retries: int = 3, backoff_base: float = 1.0,
                 timeout: float = 60.0, session=None):
        self.base_url = base_url
        self.model = model
        self.credential_env = credential_env
        self.temperature = temperature
        self.top_p = top_p
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.timeout = timeout
        self.session = session or requests.Session()

    def complete(self, messages: list[dict]) -> str:
        headers = {"Content-Type": "application/json"}
        credential = os.environ.get(self.credential_env)
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
        body = {
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
            "top_p": self.top_p,
        }
        last_exc = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = self.session.post(self.base_url, json=body,
                                         headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                time.sleep(self.backoff_base * (2 ** attempt))
                continue
            if resp.status_code == 429:
                if attempt == self.max_retries:
                    raise RateLimited(self.base_url)
                time.sleep(self.backoff_base * (2 ** attempt))
                continue
            if resp.status_code >= 500:
                last_exc = EndpointUnavailable(f"HTTP {resp.status_code}")
                time.sleep(self.backoff_base * (2 ** attempt))
                continue
            if resp.status_code >= 400:
                raise EndpointUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        raise EndpointUnavailable(str(last_exc))


def _extract_json_object(text: str) -> dict:
    """The response text must contain exactly one JSON object matching the
    verdict schema."""
    candidates = []
    for match in re.finditer(r"\{", text):
        try:
            obj, _ = json.JSONDecoder().raw_decode(text[match.start():])
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            candidates.append(obj)
            break
    if len(candidates) != 1:
        raise MalformedResponse("no JSON object in response")
    obj = candidates[0]
    if not all(k in obj for k in VERDICT_SCHEMA_KEYS):
        raise MalformedResponse(f"missing keys, got {sorted(obj)}")
    if not isinstance(obj["consistent_with_new_code"], bool) or not isinstance(
        obj["consistent_with_old_code"], bool
    ):
        raise MalformedResponse("consistency fields must be booleans")
    return obj


REPROMPT = (
    "Your previous reply was not a valid JSON object. Respond again with "
    "exactly one JSON object: {\"consistent_with_new_code\": bool, "
    "\"consistent_with_old_code\": bool, \"rationale\": string}."
)


def classify_llm(record: MethodRecord, template: PromptTemplate,
                 client: ChatClient) -> ConsistencyVerdict:
    """One chat request per record; one re-prompt on malformed JSON.
    Transport failures and persistent malformed output raise, marking the
    record unclassified upstream."""
    messages = template.render(record)
    text = client.complete(messages)
    try:
        obj = _extract_json_object(text)
    except MalformedResponse:
        messages = messages + [
            {"role": "assistant", "content": text},
            {"role": "user", "content": REPROMPT},
        ]
        obj = _extract_json_object(client.complete(messages))
    return ConsistencyVerdict(
        consistent_with_new_code=obj["consistent_with_new_code"],
        consistent_with_old_code=obj["consistent_with_old_code"],
        rationale=str(obj["rationale"]),
        source="llm",
    )


# --- CUP2-format evaluation instances -------------------------------------

@dataclass
class LabeledInstance:
    old_code: str
    new_code: str
    old_comment: str
    new_comment: str
    label: bool  # positive = inconsistent (old comment obsoleted)


CUP2_FIELDS = ("old_code", "new_code", "old_comment", "new_comment", "label")


def load_cup2(path) -> list[LabeledInstance]:
    """JSON Lines, one instance per line with keys old_code, new_code,
    old_comment, new_comment, label."""
    instances = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc}") from exc
            missing = [k for k in CUP2_FIELDS if k not in obj]
            if missing:
                raise ParseError(line_no, f"missing fields {missing}")
            instances.append(LabeledInstance(
                old_code=obj["old_code"],
                new_code=obj["new_code"],
                old_comment=obj["old_comment"],
                new_comment=obj["new_comment"],
                label=bool(obj["label"]),
            ))
    return instances


def recompute_cup2_label(instance: LabeledInstance) -> bool:
    """Positive iff the comments differ after punctuation removal."""
    return normalize_comment(instance.old_comment) != normalize_comment(
        instance.new_comment
    )


# --- verdict persistence ---------------------------------------------------

def record_key(record: MethodRecord) -> str:
    return f"{record.old_commit}:{record.new_commit}:{record.signature_key}"


def write_verdict(fh, record: MethodRecord, verdict: ConsistencyVerdict | None,
                  category: RecordCategory | None, error: str = "") -> None:
    obj = {
        "key": record_key(record),
        "old_commit": record.old_commit,
        "new_commit": record.new_commit,
        "signature_key": record.signature_key,
        "is_bug_introducing": record.is_bug_introducing,
        "window_days_back": record.window_days_back,
        "repo_name": record.repo_name,
    }
    if verdict is not None:
        obj.update({
            "consistent_with_new_code": verdict.consistent_with_new_code,
            "consistent_with_old_code": verdict.consistent_with_old_code,
            "rationale": verdict.rationale,
            "source": verdict.source,
            "category": category.value,
        })
    else:
        obj["error"] = error
    fh.write(json.dumps(obj, sort_keys=True) + "\n")


def load_verdict_keys(path) -> set[str]:
    """Keys already classified, for resume-after-interrupt."""
    keys = set()
    try:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    keys.add(json.loads(line)["key"])
    except FileNotFoundError:
        pass
    return keys
