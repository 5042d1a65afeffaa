"""Classifier scoring: confusion matrices, precision/recall/F1.

Positive class = "inconsistent". Zero denominators yield 0 so batch
scoring stays total.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import EmptyInput, LengthMismatch


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def score(predictions: Iterable[bool], labels: Iterable[bool]) -> ConfusionMatrix:
    predictions = list(predictions)
    labels = list(labels)
    if len(predictions) != len(labels):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(labels)} labels")
    if not predictions:
        raise EmptyInput("nothing to score")
    tp = fp = tn = fn = 0
    for pred, label in zip(predictions, labels):
        if pred and label:
            tp += 1
        elif pred:
            fp += 1
        elif label:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, tn, fn)


def metrics(m: ConfusionMatrix) -> tuple[float, float, float]:
    """(precision, recall, f1); 0 on zero denominators."""
    precision = m.tp / (m.tp + m.fp) if m.tp + m.fp else 0.0
    recall = m.tp / (m.tp + m.fn) if m.tp + m.fn else 0.0
    f1 = f1_score(precision, recall)
    return precision, recall, f1


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def f1_consistent(precision: float, recall: float, f1: float,
                  tol: float = 5e-4) -> bool:
    """Whether a reported (P, R, F1) triple satisfies F1's definition.
    Useful for flagging transcription errors in published tables."""
    return abs(f1_score(precision, recall) - f1) <= tol
