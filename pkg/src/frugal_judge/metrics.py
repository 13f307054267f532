"""Confusion-matrix and frugality metrics shared by trees and regressions."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class UndefinedMetricWarning(UserWarning):
    """Sensitivity or specificity requested on a split lacking one class."""


class Split(enum.Enum):
    TRAINING = "training"
    TESTING = "testing"


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with *outstanding* as the positive class."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def prevalence(self) -> float:
        return (self.tp + self.fn) / self.n

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n

    @property
    def sensitivity(self) -> float:
        p = self.tp + self.fn
        if p == 0:
            warnings.warn("sensitivity undefined: no outstanding cases", UndefinedMetricWarning, stacklevel=2)
            return math.nan
        return self.tp / p

    @property
    def specificity(self) -> float:
        q = self.tn + self.fp
        if q == 0:
            warnings.warn("specificity undefined: no not-outstanding cases", UndefinedMetricWarning, stacklevel=2)
            return math.nan
        return self.tn / q

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def confusion(predictions: Sequence[int], labels: Sequence[int]) -> ConfusionMatrix:
    p = np.asarray(predictions).astype(bool).ravel()
    y = np.asarray(labels).astype(bool).ravel()
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: {p.size} predictions vs {y.size} labels")
    if p.size == 0:
        raise ValueError("confusion matrix of zero records")
    return ConfusionMatrix(
        tp=int(np.sum(p & y)),
        fp=int(np.sum(p & ~y)),
        tn=int(np.sum(~p & ~y)),
        fn=int(np.sum(~p & y)),
    )


def frugality(cues_used: Iterable, available_cues: int) -> tuple[float, float]:
    """Absolute frugality (mean cues consulted) and relative frugality (share ignored).

    ``cues_used`` may hold integers or objects with a ``cues_used`` attribute.
    """
    used = [getattr(t, "cues_used", t) for t in cues_used]
    if not used:
        raise ValueError("frugality of zero decisions")
    if available_cues < 1:
        raise ValueError("available_cues must be positive")
    frug_abs = float(np.mean(np.asarray(used, dtype=float)))
    return frug_abs, 1.0 - frug_abs / available_cues


def format_percent(x: float) -> str:
    # Round half up so 0.875 renders as 88%, as in published tables.
    return f"{math.floor(x * 100 + 0.5):d}%"


@dataclass(frozen=True)
class PerformanceRecord:
    rule_label: str
    split: Split
    frug_abs: float
    frug_rel: float
    matrix: ConfusionMatrix

    @property
    def acc(self) -> float:
        return self.matrix.accuracy

    @property
    def sens(self) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UndefinedMetricWarning)
            return self.matrix.sensitivity

    @property
    def spec(self) -> float:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UndefinedMetricWarning)
            return self.matrix.specificity

    def to_dict(self) -> dict:
        def num(x: float):
            return None if math.isnan(x) else x

        return {
            "rule": self.rule_label,
            "split": self.split.value,
            "frug_abs": self.frug_abs,
            "frug_rel": self.frug_rel,
            "acc": self.acc,
            "sens": num(self.sens),
            "spec": num(self.spec),
            "confusion": self.matrix.to_dict(),
        }


def performance_record(
    label: str,
    predicted: Sequence[int],
    labels: Sequence[int],
    split: Split,
    *,
    cues_used: Sequence[int] | None = None,
    n_predictors: int | None = None,
    available_cues: int = 13,
) -> PerformanceRecord:
    """Build a record from predictions.

    Trees pass per-decision ``cues_used``; regressions pass ``n_predictors``,
    which counts as the cues consulted for every decision.
    """
    m = confusion(predicted, labels)
    if cues_used is not None:
        fa, fr = frugality(cues_used, available_cues)
    elif n_predictors is not None:
        fa, fr = float(n_predictors), 1.0 - n_predictors / available_cues
    else:
        raise ValueError("either cues_used or n_predictors is required")
    rec = PerformanceRecord(label, split, fa, fr, m)
    # Emit the undefined-metric warnings once, at construction.
    m.sensitivity
    m.specificity
    return rec
