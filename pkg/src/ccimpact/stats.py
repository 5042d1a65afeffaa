"""Contingency tables and odds-ratio analysis over categorized records.

Exposure = Outdated or EarlierOutdated category; event = the record's new
commit is bug-introducing. Pooling across repositories sums cells.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from statistics import NormalDist

from .classify import EXPOSED_CATEGORIES, RecordCategory
from .errors import ZeroCell


@dataclass(frozen=True)
class ContingencyTable:
    a: int  # exposed, event
    b: int  # non-exposed, event
    c: int  # exposed, no event
    d: int  # non-exposed, no event

    def __post_init__(self):
        if min(self.a, self.b, self.c, self.d) < 0:
            raise ValueError("cell counts must be non-negative")

    def __add__(self, other: "ContingencyTable") -> "ContingencyTable":
        return ContingencyTable(self.a + other.a, self.b + other.b,
                                self.c + other.c, self.d + other.d)

    @property
    def total(self) -> int:
        return self.a + self.b + self.c + self.d


def tabulate(
    categorized: list[tuple[RecordCategory, bool]],
    include_uncategorized_as_exposed: bool = False,
) -> ContingencyTable:
    """Count (category, bug flag) pairs into the 2x2 table. Uncategorized
    records are excluded unless configured as exposed."""
    a = b = c = d = 0
    for category, is_bug in categorized:
        exposed = category in EXPOSED_CATEGORIES
        if category is RecordCategory.UNCATEGORIZED_INCONSISTENT:
            if not include_uncategorized_as_exposed:
                continue
            exposed = True
        if exposed and is_bug:
            a += 1
        elif not exposed and is_bug:
            b += 1
        elif exposed:
            c += 1
        else:
            d += 1
    return ContingencyTable(a, b, c, d)


def odds_ratio(t: ContingencyTable, zero_correction: bool = False) -> float:
    """(a*d)/(b*c); with zero_correction and any zero cell, 0.5 is added to
    every cell first (Haldane-Anscombe)."""
    a, b, c, d = t.a, t.b, t.c, t.d
    if zero_correction and 0 in (a, b, c, d):
        a, b, c, d = a + 0.5, b + 0.5, c + 0.5, d + 0.5
    if b * c == 0:
        raise ZeroCell("b*c is zero; enable zero_correction")
    return (a * d) / (b * c)


def confidence_interval(
    t: ContingencyTable, level: float = 0.95, zero_correction: bool = False
) -> tuple[float, float]:
    """Wald interval on the log odds ratio."""
    a, b, c, d = t.a, t.b, t.c, t.d
    if zero_correction and 0 in (a, b, c, d):
        a, b, c, d = a + 0.5, b + 0.5, c + 0.5, d + 0.5
    if 0 in (a, b, c, d):
        raise ZeroCell("all cells must be positive; enable zero_correction")
    z = NormalDist().inv_cdf(0.5 + level / 2)
    log_or = math.log((a * d) / (b * c))
    se = math.sqrt(1 / a + 1 / b + 1 / c + 1 / d)
    return math.exp(log_or - z * se), math.exp(log_or + z * se)


def weekly_comparison(
    records_by_window: dict[str, list[tuple[RecordCategory, bool]]],
    zero_correction: bool = False,
) -> dict[str, float]:
    """One odds ratio per window, each from its own contingency table."""
    return {
        window: odds_ratio(tabulate(recs), zero_correction=zero_correction)
        for window, recs in records_by_window.items()
    }


# --- reports ---------------------------------------------------------------

@dataclass
class AnalysisRow:
    repo: str
    window: str
    table: ContingencyTable
    odds_ratio: float
    ci_low: float | None
    ci_high: float | None


def analysis_rows(
    categorized_by_repo_window: dict[tuple[str, str], list[tuple[RecordCategory, bool]]],
    ci_level: float = 0.95,
    zero_correction: bool = True,
) -> list[AnalysisRow]:
    """Per-(repo, window) rows plus a pooled total row per window, pooled by
    summing cells."""
    rows: list[AnalysisRow] = []
    pooled: dict[str, ContingencyTable] = {}
    for (repo, window), recs in sorted(categorized_by_repo_window.items()):
        t = tabulate(recs)
        rows.append(_make_row(repo, window, t, ci_level, zero_correction))
        pooled[window] = pooled.get(window, ContingencyTable(0, 0, 0, 0)) + t
    for window, t in sorted(pooled.items()):
        rows.append(_make_row("total", window, t, ci_level, zero_correction))
    return rows


def _make_row(repo, window, t, ci_level, zero_correction):
    if t.total == 0:
        return AnalysisRow(repo, window, t, float("nan"), None, None)
    try:
        ratio = odds_ratio(t, zero_correction=zero_correction)
    except ZeroCell:
        ratio = float("nan")
    try:
        low, high = confidence_interval(t, ci_level, zero_correction=zero_correction)
    except ZeroCell:
        low = high = None
    return AnalysisRow(repo, window, t, ratio, low, high)


def write_csv_report(rows: list[AnalysisRow], fh) -> None:
    writer = csv.writer(fh)
    writer.writerow(["repo", "window", "a", "b", "c", "d",
                     "odds_ratio", "ci_low", "ci_high"])
    for r in rows:
        writer.writerow([
            r.repo, r.window, r.table.a, r.table.b, r.table.c, r.table.d,
            f"{r.odds_ratio:.9f}",
            "" if r.ci_low is None else f"{r.ci_low:.9f}",
            "" if r.ci_high is None else f"{r.ci_high:.9f}",
        ])


def summary_json(rows: list[AnalysisRow]) -> dict:
    return {
        "rows": [
            {
                "repo": r.repo,
                "window": r.window,
                "a": r.table.a, "b": r.table.b, "c": r.table.c, "d": r.table.d,
                "odds_ratio": round(r.odds_ratio, 9) if not math.isnan(r.odds_ratio) else None,
                "ci_low": None if r.ci_low is None else round(r.ci_low, 9),
                "ci_high": None if r.ci_high is None else round(r.ci_high, 9),
            }
            for r in rows
        ]
    }


def write_summary_json(rows: list[AnalysisRow], fh) -> None:
    json.dump(summary_json(rows), fh, indent=2, sort_keys=True)
    fh.write("\n")
