"""Train/test designs, the tree-versus-regression comparison and per-referee agreement."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cues import CueStats, Goal, rank_cues
from .fft import FFTree, build_fan, classify_dataset, predict_arrays
from .logistic import DesignMatrix, LogisticModel, fit_logistic, reduced_model, significant_predictors
from .metrics import PerformanceRecord, Split, performance_record
from .schema import Dataset, RefereeRole

RNG_ALGORITHM = "PCG64"


def threads() -> int:
    """Worker cap from ``FRUGAL_JUDGE_THREADS`` (default 2, minimum 1)."""
    raw = os.environ.get("FRUGAL_JUDGE_THREADS", "").strip()
    try:
        return max(1, int(raw)) if raw else 2
    except ValueError:
        return 1


@dataclass(frozen=True)
class SplitPlan:
    design: str  # "role" or "stratified"
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "design": self.design,
            "seed": self.seed,
            "rng": RNG_ALGORITHM if self.design == "stratified" else None,
            "n_train": len(self.train_indices),
            "n_test": len(self.test_indices),
        }


def _role_indices(dataset: Dataset) -> dict[RefereeRole, list[int]]:
    out = {RefereeRole.FIRST: [], RefereeRole.SECOND: []}
    for i, r in enumerate(dataset.records):
        out[r.referee_role].append(i)
    for role, idx in out.items():
        if not idx:
            raise ValueError(f"no records for referee role {int(role)}")
    return out


def role_split(dataset: Dataset) -> SplitPlan:
    """First referees train, second referees test."""
    by_role = _role_indices(dataset)
    return SplitPlan("role", tuple(by_role[RefereeRole.FIRST]), tuple(by_role[RefereeRole.SECOND]))


def stratified_split(dataset: Dataset, seed: int) -> SplitPlan:
    """Half of each role's records to training (odd counts round up), seeded shuffle."""
    rng = np.random.Generator(np.random.PCG64(seed))
    train, test = [], []
    for role, idx in _role_indices(dataset).items():
        perm = rng.permutation(np.asarray(idx))
        k = (len(idx) + 1) // 2
        train.extend(int(i) for i in perm[:k])
        test.extend(int(i) for i in perm[k:])
    return SplitPlan("stratified", tuple(sorted(train)), tuple(sorted(test)), seed)


def make_split(dataset: Dataset, design: str, seed: int | None = None) -> SplitPlan:
    if design == "role":
        return role_split(dataset)
    if design == "stratified":
        if seed is None:
            raise ValueError("stratified split needs a seed")
        return stratified_split(dataset, seed)
    raise ValueError(f"unknown split design {design!r}")


@dataclass
class Comparison:
    """Fitted rules and their performance on both halves of a split."""

    plan: SplitPlan
    cue_stats: list[CueStats]
    trees: list[FFTree]
    full_model: LogisticModel
    reduced: dict[str, LogisticModel]
    records: list[PerformanceRecord]
    fans: dict[int, list[FFTree]] = field(default_factory=dict, repr=False)

    def row_labels(self) -> list[str]:
        seen = []
        for r in self.records:
            if r.rule_label not in seen:
                seen.append(r.rule_label)
        return seen

    def record(self, label: str, split: Split) -> PerformanceRecord:
        for r in self.records:
            if r.rule_label == label and r.split is split:
                return r
        raise KeyError((label, split))

    def tree_label(self, depth: int) -> str:
        return f"{depth} cue" + ("s" if depth > 1 else "")


def _log_odds_cues(model: LogisticModel) -> list[str]:
    sig = significant_predictors(model)
    if sig:
        return sig
    # Nothing significant: fall back to the two smallest p-values, or the two
    # largest estimates when inference was suppressed.
    pvals = model.diagnostics.p_values
    names = list(model.predictors)
    if all(not math.isnan(pvals.get(c, math.nan)) for c in names):
        names.sort(key=lambda c: pvals[c])
    else:
        names.sort(key=lambda c: -model.coef(c))
    return names[:2]


def compare(
    dataset: Dataset,
    plan: SplitPlan,
    depth_max: int = 6,
    goal: Goal = Goal.ACCURACY,
    thresholds: str = "joint",
) -> Comparison:
    """Fit trees of depth 1..depth_max and three regressions on training data; score both splits.

    Rows follow the published layout: trees by depth, the log-odds regression
    (predictors with p < .05 in the full model), the cue-validity regression
    (cues of the two-cue tree) and the all-cues regression.
    """
    train = dataset.subset(plan.train_indices)
    test = dataset.subset(plan.test_indices)
    if len(train) == 0 or len(test) == 0:
        raise ValueError("both halves of the split must be non-empty")
    n_cues = len(dataset.schema)
    design_train = DesignMatrix.from_dataset(train)
    fans: dict[int, list[FFTree]] = {}

    with ThreadPoolExecutor(max_workers=threads()) as ex:
        fut_trees = ex.submit(build_fan, train, depth_max, goal, thresholds, fans)
        fut_full = ex.submit(fit_logistic, design_train)
        trees = fut_trees.result()
        full = fut_full.result()
    cue_stats = rank_cues(train, goal)

    log_odds = _log_odds_cues(full)
    validity_cues = [s.cue_id for s in cue_stats[: min(2, n_cues)]]
    reduced = {
        f"{len(log_odds)} cue{'s' if len(log_odds) > 1 else ''} (log-odds)": reduced_model(design_train, log_odds),
        f"{len(validity_cues)} cue{'s' if len(validity_cues) > 1 else ''} (cue validity)":
            reduced_model(design_train, validity_cues),
    }

    records: list[PerformanceRecord] = []
    for split, part in ((Split.TRAINING, train), (Split.TESTING, test)):
        for tree in trees:
            _, rec = classify_dataset(tree, part, split, label=f"{tree.depth} cue" + ("s" if tree.depth > 1 else ""))
            records.append(rec)
        for label, model in list(reduced.items()) + [("All cues", full)]:
            records.append(
                performance_record(
                    label, model.predict(part), part.y, split,
                    n_predictors=len(model.predictors), available_cues=n_cues,
                )
            )
    # Row-major order: each rule's training record followed by its testing record.
    n_rows = len(records) // 2
    ordered = [r for i in range(n_rows) for r in (records[i], records[i + n_rows])]
    return Comparison(plan, cue_stats, trees, full, reduced, ordered, fans)


@dataclass(frozen=True)
class RefereeAgreement:
    referee_id: str
    split: Split
    n_judgments: int
    correct_tree: int
    correct_regression: int

    @property
    def proportion_correct_tree(self) -> float:
        return self.correct_tree / self.n_judgments

    @property
    def proportion_correct_regression(self) -> float:
        return self.correct_regression / self.n_judgments

    @classmethod
    def from_dict(cls, d: dict) -> "RefereeAgreement":
        return cls(d["referee_id"], Split(d["split"]), d["n_judgments"], d["correct_tree"], d["correct_regression"])

    def to_dict(self) -> dict:
        return {
            "referee_id": self.referee_id,
            "split": self.split.value,
            "n_judgments": self.n_judgments,
            "correct_tree": self.correct_tree,
            "correct_regression": self.correct_regression,
            "proportion_correct_tree": self.proportion_correct_tree,
            "proportion_correct_regression": self.proportion_correct_regression,
        }


def per_referee_agreement(
    dataset: Dataset, tree: FFTree, regression: LogisticModel, plan: SplitPlan
) -> list[RefereeAgreement]:
    """Share of each referee's judgments reproduced by the tree and by the regression.

    Training referees come first, then testing; within a split referees are
    ordered by descending number of judgments, ties by id.
    """
    out = []
    for split, idx in ((Split.TRAINING, plan.train_indices), (Split.TESTING, plan.test_indices)):
        part = dataset.subset(idx)
        if len(part) == 0:
            continue
        tree_ok = predict_arrays(tree, part)[0] == part.y
        reg_ok = regression.predict(part) == part.y
        tally: dict[str, list[int]] = {}
        for rec, t, r in zip(part.records, tree_ok, reg_ok):
            c = tally.setdefault(rec.referee_id, [0, 0, 0])
            c[0] += 1
            c[1] += int(t)
            c[2] += int(r)
        rows = [RefereeAgreement(rid, split, n, t, r) for rid, (n, t, r) in tally.items()]
        rows.sort(key=lambda a: (-a.n_judgments, a.referee_id))
        out.extend(rows)
    return out


def agreement_summary(agreements: Sequence[RefereeAgreement], threshold: float = 0.8) -> dict:
    """Per split: referees whose judgments each model reproduces at >= threshold."""
    summary = {}
    for split in Split:
        rows = [a for a in agreements if a.split is split]
        if not rows:
            continue
        summary[split.value] = {
            "referees": len(rows),
            "tree_at_or_above": sum(a.proportion_correct_tree >= threshold for a in rows),
            "regression_at_or_above": sum(a.proportion_correct_regression >= threshold for a in rows),
            "tree_better": sum(a.correct_tree > a.correct_regression for a in rows),
            "regression_better": sum(a.correct_regression > a.correct_tree for a in rows),
        }
    return summary
