"""Target selection and method-change record construction.

A target commit (bug-introducing sample or non-bug-introducing baseline)
is paired with every prior commit inside a time window; each changed
method between the pair becomes one record.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, asdict
from statistics import NormalDist

from .errors import InvalidParameter
from .gitcore import CommitMeta, GitRepo
from .javalex import pair_and_diff

SECONDS_PER_DAY = 86400.0

DEFAULT_DOC_TEST_DIR_NAMES = frozenset({"test", "tests", "it", "docs", "doc"})
DEFAULT_DOC_EXTENSIONS = (".md", ".txt", ".adoc", ".rst", ".html")


@dataclass(frozen=True)
class SamplePlan:
    population: int
    sample_size: int
    confidence: float = 0.90
    margin: float = 0.10
    seed: int = 0


@dataclass
class MethodRecord:
    old_commit: str
    new_commit: str
    old_code: str
    new_code: str
    old_comment: str
    new_comment: str
    is_bug_introducing: bool
    old_time: int
    new_time: int
    repo_name: str
    window_days_back: float
    signature_key: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "MethodRecord":
        return cls(**json.loads(line))


def sample_size(population: int, confidence: float = 0.90,
                margin: float = 0.10) -> int:
    """Cochran's formula at p=0.5 with finite-population correction,
    rounded up and capped at the population size."""
    if population < 1:
        raise InvalidParameter(f"population must be >= 1, got {population}")
    if not 0 < confidence < 1:
        raise InvalidParameter(f"confidence must be in (0,1), got {confidence}")
    if not 0 < margin < 1:
        raise InvalidParameter(f"margin must be in (0,1), got {margin}")
    z = NormalDist().inv_cdf(1 - (1 - confidence) / 2)
    n0 = z * z * 0.25 / (margin * margin)
    n = math.ceil(n0 / (1 + (n0 - 1) / population))
    return min(population, n)


def is_doc_or_test_path(path: str,
                        dir_names: frozenset[str] = DEFAULT_DOC_TEST_DIR_NAMES,
                        extensions: tuple[str, ...] = DEFAULT_DOC_EXTENSIONS) -> bool:
    lowered = path.lower()
    if any(lowered.endswith(ext) for ext in extensions):
        return True
    parts = lowered.split("/")
    return any(part in dir_names for part in parts[:-1])


@dataclass(frozen=True)
class Target:
    commit: CommitMeta
    is_bug_introducing: bool


def select_targets(
    repo: GitRepo,
    introducers: set[str],
    plan: SamplePlan,
) -> tuple[list[Target], list[Target], bool]:
    """Seeded uniform samples of bug-introducing and baseline commits.

    Non-bug candidates touching only documentation or test paths are
    discarded. Returns (bug_targets, nonbug_targets, shortfall) where
    shortfall flags fewer baseline survivors than requested."""
    if not introducers:
        raise InvalidParameter("introducer set is empty")
    commits = repo.list_commits()
    by_id = {c.id: c for c in commits}
    rng = random.Random(plan.seed)

    bug_pool = sorted(i for i in introducers if i in by_id)
    n = min(plan.sample_size, len(bug_pool))
    bug_ids = sorted(rng.sample(bug_pool, n))
    bug_targets = [Target(by_id[i], True) for i in bug_ids]

    nonbug_pool = []
    for c in commits:
        if c.id in introducers:
            continue
        parent = c.parent_ids[0] if c.parent_ids else None
        diffs = repo.diff(parent, c.id)
        if not diffs:
            continue
        if all(is_doc_or_test_path(d.path) for d in diffs):
            continue
        nonbug_pool.append(c.id)
    shortfall = len(nonbug_pool) < n
    m = min(n, len(nonbug_pool))
    nonbug_ids = sorted(rng.sample(sorted(nonbug_pool), m))
    nonbug_targets = [Target(by_id[i], False) for i in nonbug_ids]
    return bug_targets, nonbug_targets, shortfall


def build_records(
    repo: GitRepo,
    targets: list[Target],
    window: tuple[float, float] = (0.0, 7.0),
    normalize_bodies: bool = True,
) -> tuple[list[MethodRecord], list[tuple[str, str]]]:
    """Pair each target with every prior commit whose age lies in the
    half-open window (lo_days, hi_days] and emit one MethodRecord per
    changed method. Records with an empty new comment are dropped. Returns
    (records, per-target errors)."""
    lo_days, hi_days = window
    if not lo_days < hi_days:
        raise InvalidParameter(f"window must satisfy lo < hi, got {window}")
    commits = repo.list_commits()
    records: list[MethodRecord] = []
    errors: list[tuple[str, str]] = []
    for target in targets:
        try:
            records.extend(
                _records_for_target(repo, target, commits, lo_days, hi_days,
                                    normalize_bodies)
            )
        except Exception as exc:  # noqa: BLE001 - batch must not abort
            errors.append((target.commit.id, f"{type(exc).__name__}: {exc}"))
    return records, errors


def _records_for_target(repo, target, commits, lo_days, hi_days,
                        normalize_bodies):
    t = target.commit
    out = []
    for prior in commits:
        age_days = (t.author_time - prior.author_time) / SECONDS_PER_DAY
        if not lo_days < age_days <= hi_days:
            continue
        if prior.id == t.id or not repo.is_ancestor(prior.id, t.id):
            continue
        for d in repo.diff(prior.id, t.id, path_filter=("*.java",)):
            if d.old_blob is None or d.new_blob is None:
                continue
            for change in pair_and_diff(d.old_blob, d.new_blob,
                                        normalize_bodies=normalize_bodies):
                if not change.new.leading_comment.strip():
                    continue
                out.append(MethodRecord(
                    old_commit=prior.id,
                    new_commit=t.id,
                    old_code=change.old.body_text,
                    new_code=change.new.body_text,
                    old_comment=change.old.leading_comment,
                    new_comment=change.new.leading_comment,
                    is_bug_introducing=target.is_bug_introducing,
                    old_time=prior.author_time,
                    new_time=t.author_time,
                    repo_name=t.repo_name,
                    window_days_back=age_days,
                    signature_key=change.key,
                ))
    return out


def write_records(records: list[MethodRecord], fh) -> None:
    for r in records:
        fh.write(r.to_json() + "\n")


def read_records(fh) -> list[MethodRecord]:
    return [MethodRecord.from_json(line) for line in fh if line.strip()]
