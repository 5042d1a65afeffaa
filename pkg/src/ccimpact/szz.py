"""Bug-introducing commit identification (blame-based, B-SZZ style).

For each bug-fixing commit, the lines deleted or replaced by the fix
(first parent vs fix) are blamed at the parent revision; the originating
commits are the candidate introducers. Filters drop blank lines, pure
comment lines, and non-Java paths.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass, field

from .errors import NoParent
from .gitcore import CommitMeta, GitRepo
from .javalex import comment_line_kinds


@dataclass(frozen=True)
class SzzFilters:
    skip_blank: bool = True
    skip_comment_lines: bool = True
    source_only: bool = True  # restrict to *.java paths


@dataclass
class IntroducerSet:
    fix_commit: str
    introducers: set[str] = field(default_factory=set)
    # introducer hash -> blamed (path, line_no) pairs
    evidence: dict[str, list[tuple[str, int]]] = field(default_factory=dict)


def removed_lines(old_text: str, new_text: str) -> list[int]:
    """1-based line numbers in old_text that the change deletes or
    replaces."""
    old_lines = old_text.splitlines()
    new_lines = new_text.splitlines()
    matcher = difflib.SequenceMatcher(a=old_lines, b=new_lines, autojunk=False)
    removed: list[int] = []
    for op, i1, i2, _j1, _j2 in matcher.get_opcodes():
        if op in ("delete", "replace"):
            removed.extend(range(i1 + 1, i2 + 1))
    return removed


def find_introducers(
    repo: GitRepo,
    fix: CommitMeta,
    filters: SzzFilters = SzzFilters(),
) -> IntroducerSet:
    """Blame the lines removed by a fix at its first parent and collect
    their origin commits."""
    if not fix.parent_ids:
        raise NoParent(fix.id)
    parent = fix.parent_ids[0]
    path_filter = ("*.java",) if filters.source_only else None
    result = IntroducerSet(fix_commit=fix.id)
    for d in repo.diff(parent, fix.id, path_filter=path_filter):
        if d.old_blob is None:
            continue  # added file: nothing to blame
        old_path = d.old_path if d.change_kind == "renamed" else d.path
        lines = removed_lines(d.old_blob, d.new_blob or "")
        if not lines:
            continue
        kinds = comment_line_kinds(d.old_blob) if filters.skip_comment_lines else {}
        blame = None
        for line_no in lines:
            kind = kinds.get(line_no)
            if filters.skip_blank and kind == "blank":
                continue
            if filters.skip_comment_lines and kind == "comment":
                continue
            if filters.skip_blank and kind is None:
                # no classification available: still skip whitespace-only lines
                content = d.old_blob.splitlines()[line_no - 1]
                if not content.strip():
                    continue
            if blame is None:
                blame = repo.blame(parent, old_path)
            origin = blame[line_no - 1].origin_commit
            if origin == fix.id:
                continue
            result.introducers.add(origin)
            result.evidence.setdefault(origin, []).append((old_path, line_no))
    return result


@dataclass
class BatchResult:
    introducers: set[str] = field(default_factory=set)
    per_fix: list[IntroducerSet] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)  # (fix id, error)


def find_all_bug_introducing(
    repo: GitRepo,
    fixes: list[CommitMeta],
    filters: SzzFilters = SzzFilters(),
) -> BatchResult:
    """Union of find_introducers over all fixes; per-fix errors are
    collected in the result instead of aborting the batch."""
    result = BatchResult()
    for fix in fixes:
        try:
            one = find_introducers(repo, fix, filters)
        except Exception as exc:  # noqa: BLE001 - batch must not abort
            result.failures.append((fix.id, f"{type(exc).__name__}: {exc}"))
            continue
        result.per_fix.append(one)
        result.introducers |= one.introducers
    return result


def write_report(result: BatchResult, fh) -> None:
    """JSON Lines introducers report: one object per fix."""
    for one in result.per_fix:
        record = {
            "fix": one.fix_commit,
            "introducers": sorted(one.introducers),
            "evidence": [
                {"introducer": intro, "lines": [[p, n] for p, n in pairs]}
                for intro, pairs in sorted(one.evidence.items())
            ],
        }
        fh.write(json.dumps(record, sort_keys=True) + "\n")
