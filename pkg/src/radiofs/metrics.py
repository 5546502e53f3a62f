"""Confusion counts and accuracy / sensitivity / specificity.

Malignant is the positive class.  A ratio whose denominator is empty is
reported as ``None`` rather than NaN or 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .dataset import BENIGN, MALIGNANT


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other):
        return ConfusionMatrix(self.tp + other.tp, self.tn + other.tn,
                               self.fp + other.fp, self.fn + other.fn)

    def transpose(self):
        """Swap the roles of prediction and truth."""
        return ConfusionMatrix(self.tp, self.tn, self.fn, self.fp)

    def to_dict(self):
        return {"tp": self.tp, "tn": self.tn, "fp": self.fp, "fn": self.fn}

    @classmethod
    def from_dict(cls, d):
        return cls(d["tp"], d["tn"], d["fp"], d["fn"])


@dataclass(frozen=True)
class Metrics:
    accuracy: Optional[float]
    sensitivity: Optional[float]
    specificity: Optional[float]

    def as_tuple(self):
        return (self.accuracy, self.sensitivity, self.specificity)

    def to_dict(self):
        return {"accuracy": self.accuracy, "sensitivity": self.sensitivity,
                "specificity": self.specificity}

    @classmethod
    def from_dict(cls, d):
        return cls(d["accuracy"], d["sensitivity"], d["specificity"])


def confusion(predictions, truth) -> ConfusionMatrix:
    predictions = list(predictions)
    truth = list(truth)
    if len(predictions) != len(truth):
        raise ValueError(f"{len(predictions)} predictions for {len(truth)} labels")
    tp = tn = fp = fn = 0
    for pred, true in zip(predictions, truth):
        if pred not in (MALIGNANT, BENIGN) or true not in (MALIGNANT, BENIGN):
            raise ValueError(f"unknown label in pair ({pred!r}, {true!r})")
        if true == MALIGNANT:
            if pred == MALIGNANT:
                tp += 1
            else:
                fn += 1
        elif pred == MALIGNANT:
            fp += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, tn, fp, fn)


def _ratio(num, den):
    return num / den if den > 0 else None


def evaluate(cm: ConfusionMatrix) -> Metrics:
    """Accuracy, sensitivity tp/(tp+fn) and specificity tn/(tn+fp)."""
    return Metrics(_ratio(cm.tp + cm.tn, cm.total),
                   _ratio(cm.tp, cm.tp + cm.fn),
                   _ratio(cm.tn, cm.tn + cm.fp))


def format_metric(value, digits=5):
    return "undefined" if value is None else f"{value:.{digits}f}"
