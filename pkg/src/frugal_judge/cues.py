"""Single-cue threshold rules, cue validities and cue ranking."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .schema import CueSpec, Dataset, JudgmentClass, ScaleKind


class Direction(enum.Enum):
    GE = ">="
    LE = "<="
    EQ = "=="


# Tie-break rank: GreaterOrEqual before LessOrEqual.
_DIRECTION_ORDER = {Direction.GE: 0, Direction.LE: 1, Direction.EQ: 2}


class Goal(enum.Enum):
    ACCURACY = "accuracy"
    BALANCED_ACCURACY = "balanced"


@dataclass(frozen=True)
class CueRule:
    """``cue <direction> threshold`` predicts ``positive_class_when_true`` when it holds."""

    cue_id: str
    direction: Direction
    threshold: int
    positive_class_when_true: JudgmentClass = JudgmentClass.OUTSTANDING

    def fires(self, scores):
        """Vectorized condition test; accepts a scalar or an array of scores."""
        s = np.asarray(scores)
        if self.direction is Direction.GE:
            out = s >= self.threshold
        elif self.direction is Direction.LE:
            out = s <= self.threshold
        else:
            out = s == self.threshold
        return bool(out) if out.ndim == 0 else out

    def predict(self, scores) -> np.ndarray:
        fired = np.asarray(self.fires(scores))
        pos = int(self.positive_class_when_true)
        return np.where(fired, pos, 1 - pos).astype(np.int64)

    def flipped(self, scale: ScaleKind) -> "CueRule":
        """The same classifier written with the opposite positive class.

        Not every rule has an in-range complement (``>= low`` has none); those
        raise ``ValueError``.
        """
        d, t = self.direction, self.threshold
        if d is Direction.GE:
            nd, nt = Direction.LE, t - 1
        elif d is Direction.LE:
            nd, nt = Direction.GE, t + 1
        else:
            if scale is not ScaleKind.BINARY:
                raise ValueError("Equal rules are only defined for binary cues")
            nd, nt = Direction.EQ, 1 - t
        if not scale.contains(nt):
            raise ValueError(f"no in-range complement for {self}")
        return CueRule(self.cue_id, nd, nt, self.positive_class_when_true.other())

    def validate(self, cue: CueSpec) -> None:
        if cue.id != self.cue_id:
            raise ValueError(f"rule for {self.cue_id!r} applied to cue {cue.id!r}")
        if not cue.scale.contains(self.threshold):
            raise ValueError(f"threshold {self.threshold} outside the {cue.id!r} scale")
        if self.direction is Direction.EQ and cue.scale is not ScaleKind.BINARY:
            raise ValueError("Equal rules are only defined for binary cues")


@dataclass(frozen=True)
class Counts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.n if self.n else float("nan")

    @property
    def sensitivity(self) -> float:
        p = self.tp + self.fn
        return self.tp / p if p else float("nan")

    @property
    def specificity(self) -> float:
        q = self.tn + self.fp
        return self.tn / q if q else float("nan")


def counts_of(predicted: np.ndarray, labels: np.ndarray) -> Counts:
    predicted = np.asarray(predicted, dtype=bool)
    labels = np.asarray(labels, dtype=bool)
    return Counts(
        tp=int(np.sum(predicted & labels)),
        fp=int(np.sum(predicted & ~labels)),
        tn=int(np.sum(~predicted & ~labels)),
        fn=int(np.sum(~predicted & labels)),
    )


def goal_value(c: Counts, goal: Goal) -> Fraction:
    """Exact goal value so that ties are detected without float noise.

    Balanced accuracy falls back to the rate of the class that is present when
    the other class is empty.
    """
    if c.n == 0:
        return Fraction(0)
    if goal is Goal.ACCURACY:
        return Fraction(c.tp + c.tn, c.n)
    p, q = c.tp + c.fn, c.tn + c.fp
    if p == 0:
        return Fraction(c.tn, q)
    if q == 0:
        return Fraction(c.tp, p)
    return (Fraction(c.tp, p) + Fraction(c.tn, q)) / 2


@dataclass(frozen=True)
class CueStats:
    cue_id: str
    rule: CueRule
    validity: float  # value of the ranking goal
    accuracy: float
    sens: float
    spec: float
    uninformative: bool = False


def candidate_thresholds(cue: CueSpec) -> list[tuple[Direction, int]]:
    """All integer cut points for a cue, ordered by threshold then ``>=`` before ``<=``."""
    if cue.scale is ScaleKind.BINARY:
        return [(Direction.EQ, 0), (Direction.EQ, 1)]
    out: list[tuple[Direction, int]] = []
    for t in cue.scale.points():
        out.append((Direction.GE, t))
        out.append((Direction.LE, t))
    return out


def rule_candidates(cue: CueSpec) -> list[CueRule]:
    """Cut-point rules predicting *outstanding*, then the constant rules.

    Constant rules (``>= low``) keep the majority class reachable: "always not
    outstanding" for every cue, plus "always outstanding" for binary cues,
    whose equality rules cannot express it.
    """
    rules = [CueRule(cue.id, d, t) for d, t in candidate_thresholds(cue)]
    if cue.scale is ScaleKind.BINARY:
        rules.append(CueRule(cue.id, Direction.GE, cue.scale.low, JudgmentClass.OUTSTANDING))
    rules.append(CueRule(cue.id, Direction.GE, cue.scale.low, JudgmentClass.NOT_OUTSTANDING))
    return rules


def _tie_key(goal_val: Fraction, sens: float, rule: CueRule, constant: bool) -> tuple:
    s = -1.0 if np.isnan(sens) else sens
    # Constant fallbacks lose ties against genuine cut points.
    return (-goal_val, -s, constant, rule.threshold, _DIRECTION_ORDER[rule.direction])


def best_rule_for_cue(
    dataset: Dataset, cue: CueSpec | str, goal: Goal = Goal.ACCURACY
) -> CueStats:
    """Best single-cue threshold rule for ``cue`` on ``dataset``.

    Candidates come from :func:`rule_candidates`, so a majority-class rule is
    always reachable. Ties are broken by higher sensitivity, then lower
    threshold, then ``>=`` before ``<=``.
    """
    if len(dataset) == 0:
        raise ValueError("cannot fit a cue rule on an empty dataset")
    if isinstance(cue, str):
        cue = dataset.cue(cue)
    x = dataset.X[:, dataset.cue_index(cue.id)]
    y = dataset.y.astype(bool)

    n_cut = len(candidate_thresholds(cue))
    best = None
    for k, rule in enumerate(rule_candidates(cue)):
        c = counts_of(rule.predict(x), y)
        g = goal_value(c, goal)
        key = _tie_key(g, c.sensitivity, rule, k >= n_cut)
        if best is None or key < best[0]:
            best = (key, rule, c, g)
    _, rule, c, g = best

    if goal is Goal.BALANCED_ACCURACY:
        baseline = Fraction(1, 2)
    else:
        baseline = Fraction(max(int(y.sum()), int((~y).sum())), len(y))
    return CueStats(
        cue_id=cue.id,
        rule=rule,
        validity=float(g),
        accuracy=c.accuracy,
        sens=c.sensitivity,
        spec=c.specificity,
        uninformative=g <= baseline,
    )


def rank_cues(dataset: Dataset, goal: Goal = Goal.ACCURACY) -> list[CueStats]:
    """Cue statistics sorted by descending validity; ties keep schema order."""
    if not dataset.schema:
        raise ValueError("dataset has no cues")
    stats = [best_rule_for_cue(dataset, c, goal) for c in dataset.schema]
    return sorted(stats, key=lambda s: -s.validity)


@dataclass(frozen=True)
class RocPoint:
    x: float  # 1 - specificity
    y: float  # sensitivity
    label: str
    validity: float


def roc_points(stats: Sequence[CueStats]) -> list[RocPoint]:
    return [RocPoint(1.0 - s.spec, s.sens, s.cue_id, s.validity) for s in stats]


def roc_json(points: Sequence[RocPoint]) -> list[dict]:
    return [
        {"label": p.label, "false_positive_rate": p.x, "sensitivity": p.y, "validity": p.validity}
        for p in points
    ]
