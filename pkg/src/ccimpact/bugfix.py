"""Bug-fixing commit identification from commit messages.

Keyword heuristics over the lowercased message (subject and body). The
default keyword set is an explicit approximation of the heuristic family
used by commit-classification miners; it is configurable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .gitcore import CommitMeta, GitRepo

DEFAULT_KEYWORDS = frozenset({
    "fix", "fixed", "fixes", "bug", "defect", "error", "crash", "fault",
    "patch", "resolve", "resolves", "solved",
})


@dataclass(frozen=True)
class KeywordRuleset:
    keywords: frozenset[str] = DEFAULT_KEYWORDS
    require_word_boundary: bool = True
    exclusions: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.keywords:
            raise ValueError("keyword set must be non-empty")
        overlap = self.keywords & self.exclusions
        if overlap:
            raise ValueError(f"keywords and exclusions overlap: {sorted(overlap)}")


def is_bugfix(message: str, rules: KeywordRuleset | None = None) -> bool:
    """True iff a keyword occurs in the lowercased message (at a word
    boundary when required) and no exclusion term occurs."""
    rules = rules or KeywordRuleset()
    text = message.lower()
    if not text.strip():
        return False

    def occurs(term: str) -> bool:
        if rules.require_word_boundary:
            return re.search(rf"\b{re.escape(term)}\b", text) is not None
        return term in text

    if any(occurs(term) for term in rules.exclusions):
        return False
    return any(occurs(term) for term in rules.keywords)


def find_bugfix_commits(
    repo: GitRepo,
    rules: KeywordRuleset | None = None,
    exclude_merges: bool = False,
) -> list[CommitMeta]:
    """Subset of list_commits whose messages match the ruleset; order
    preserved (ascending by time)."""
    rules = rules or KeywordRuleset()
    out = []
    for commit in repo.list_commits():
        if exclude_merges and len(commit.parent_ids) > 1:
            continue
        if is_bugfix(commit.message, rules):
            out.append(commit)
    return out
