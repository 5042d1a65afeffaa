import csv
import io
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccimpact.classify import RecordCategory
from ccimpact.errors import ZeroCell
from ccimpact.stats import (
    AnalysisRow,
    ContingencyTable,
    analysis_rows,
    confidence_interval,
    odds_ratio,
    summary_json,
    tabulate,
    weekly_comparison,
    write_csv_report,
)

OUT = RecordCategory.OUTDATED
EARLIER = RecordCategory.EARLIER_OUTDATED
NORMAL = RecordCategory.NORMAL
UNCAT = RecordCategory.UNCATEGORIZED_INCONSISTENT


# --- tabulate ---------------------------------------------------------------

def test_tabulate_empty():
    assert tabulate([]) == ContingencyTable(0, 0, 0, 0)


def test_tabulate_single_pair():
    assert tabulate([(OUT, True), (NORMAL, False)]) == ContingencyTable(1, 0, 0, 1)


def test_tabulate_six_hand_labeled():
    recs = [(OUT, True), (EARLIER, True), (NORMAL, True),
            (OUT, False), (NORMAL, False), (NORMAL, False)]
    assert tabulate(recs) == ContingencyTable(2, 1, 1, 2)


def test_tabulate_uncategorized_excluded_by_default():
    recs = [(UNCAT, True), (UNCAT, False), (NORMAL, True)]
    assert tabulate(recs) == ContingencyTable(0, 1, 0, 0)
    assert tabulate(recs, include_uncategorized_as_exposed=True) == \
        ContingencyTable(1, 1, 1, 0)


def test_negative_cells_rejected():
    with pytest.raises(ValueError):
        ContingencyTable(-1, 0, 0, 0)


# --- odds ratio --------------------------------------------------------------

def test_or_symmetric_table_is_one():
    assert odds_ratio(ContingencyTable(1, 1, 1, 1)) == 1.0


def test_or_published_total():
    t = ContingencyTable(5067, 34183, 3313, 33962)
    assert abs(odds_ratio(t) - 1.519541449) < 1e-6


def test_or_zero_correction():
    t = ContingencyTable(0, 10, 10, 10)
    assert abs(odds_ratio(t, zero_correction=True) - 0.5 * 10.5 / (10.5 * 10.5)) < 1e-12
    assert abs(odds_ratio(t, zero_correction=True) - 0.047619) < 1e-6


def test_or_zero_cell_raises_without_correction():
    with pytest.raises(ZeroCell):
        odds_ratio(ContingencyTable(1, 0, 1, 1))


@given(st.integers(1, 500), st.integers(1, 500), st.integers(1, 500),
       st.integers(1, 500))
@settings(max_examples=100, deadline=None)
def test_or_reciprocity_and_sign(a, b, c, d):
    t = ContingencyTable(a, b, c, d)
    flipped = ContingencyTable(c, d, a, b)
    assert abs(odds_ratio(t) * odds_ratio(flipped) - 1.0) < 1e-9
    assert (odds_ratio(t) > 1) == (a * d > b * c)


@given(st.integers(1, 200), st.integers(1, 200), st.integers(1, 200),
       st.integers(1, 200), st.integers(2, 5))
@settings(max_examples=100, deadline=None)
def test_or_scale_invariant(a, b, c, d, k):
    t = ContingencyTable(a, b, c, d)
    scaled = ContingencyTable(k * a, k * b, k * c, k * d)
    assert abs(odds_ratio(t) - odds_ratio(scaled)) < 1e-9 * odds_ratio(t)


# --- confidence interval ------------------------------------------------------

def test_ci_symmetric_table():
    low, high = confidence_interval(ContingencyTable(10, 10, 10, 10), 0.95)
    assert abs(low - 0.2894) < 2e-3
    assert abs(high - 3.4557) < 2e-3
    assert abs(low * high - 1.0) < 1e-9  # symmetric about 1 in log space


def test_ci_collapses_at_zero_level():
    t = ContingencyTable(5, 7, 11, 13)
    low, high = confidence_interval(t, 1e-12)
    ratio = odds_ratio(t)
    assert abs(low - ratio) < 1e-6 and abs(high - ratio) < 1e-6


def test_ci_brackets_published_or():
    low, high = confidence_interval(ContingencyTable(5067, 34183, 3313, 33962), 0.95)
    assert low < 1.519541449 < high


def test_ci_zero_cell():
    with pytest.raises(ZeroCell):
        confidence_interval(ContingencyTable(0, 1, 1, 1))
    low, high = confidence_interval(ContingencyTable(0, 1, 1, 1),
                                    zero_correction=True)
    assert 0 < low < high


# --- weekly comparison ---------------------------------------------------------

def test_weekly_comparison_published_row():
    recent = [(OUT, True)] * 640 + [(NORMAL, True)] * 4208 + \
             [(OUT, False)] * 405 + [(NORMAL, False)] * 4028
    out = weekly_comparison({"0-7": recent})
    assert abs(out["0-7"] - 1.5126508) < 1e-6


def test_weekly_comparison_identical_windows_equal():
    recs = [(OUT, True), (NORMAL, True), (OUT, False), (NORMAL, False)]
    out = weekly_comparison({"0-7": list(recs), "7-14": list(recs)})
    assert out["0-7"] == out["7-14"]


def test_weekly_comparison_sign_pattern():
    recent = [(OUT, True)] * 4 + [(NORMAL, True)] * 1 + \
             [(OUT, False)] * 1 + [(NORMAL, False)] * 4      # OR = 16
    earlier = [(OUT, True)] * 1 + [(NORMAL, True)] * 4 + \
              [(OUT, False)] * 4 + [(NORMAL, False)] * 1     # OR = 1/16
    out = weekly_comparison({"0-7": recent, "7-14": earlier})
    assert out["7-14"] < 1 < out["0-7"]


# --- reports -------------------------------------------------------------------

def _by_repo_window():
    return {
        ("alpha", "0-7"): [(OUT, True), (NORMAL, True), (OUT, False),
                           (NORMAL, False)],
        ("beta", "0-7"): [(OUT, True)] * 2 + [(NORMAL, True)] +
                         [(OUT, False)] + [(NORMAL, False)] * 2,
    }


def test_analysis_rows_pooling_is_cellwise_sum():
    rows = analysis_rows(_by_repo_window())
    by_repo = {r.repo: r for r in rows}
    total = by_repo["total"].table
    assert total == by_repo["alpha"].table + by_repo["beta"].table
    assert total == ContingencyTable(3, 2, 2, 3)
    assert abs(by_repo["total"].odds_ratio - 9 / 4) < 1e-9


def test_csv_report_shape():
    rows = analysis_rows(_by_repo_window())
    buf = io.StringIO()
    write_csv_report(rows, buf)
    buf.seek(0)
    parsed = list(csv.reader(buf))
    assert parsed[0] == ["repo", "window", "a", "b", "c", "d",
                         "odds_ratio", "ci_low", "ci_high"]
    assert [row[0] for row in parsed[1:]] == ["alpha", "beta", "total"]
    for row in parsed[1:]:
        float(row[6])  # nine-decimal OR parses as a number
        assert len(row[6].split(".")[1]) == 9


def test_summary_json_round_trips():
    rows = analysis_rows(_by_repo_window())
    data = json.loads(json.dumps(summary_json(rows)))
    assert len(data["rows"]) == 3
    total = next(r for r in data["rows"] if r["repo"] == "total")
    assert total["a"] == 3 and total["odds_ratio"] == 2.25


def test_nan_or_serialized_as_null():
    rows = [AnalysisRow("r", "0-7", ContingencyTable(1, 0, 0, 1),
                        float("nan"), None, None)]
    data = summary_json(rows)
    assert data["rows"][0]["odds_ratio"] is None
    assert data["rows"][0]["ci_low"] is None
