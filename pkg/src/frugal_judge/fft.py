"""Fast-and-frugal trees: fan construction, lexicographic classification, prose.

A tree is an ordered tuple of :class:`~frugal_judge.cues.CueRule`. At every
non-final level the rule's ``positive_class_when_true`` is the exit class: if
the rule holds the record leaves the tree with that class, otherwise it moves
to the next level. The final level always exits, to
``positive_class_when_true`` when the rule holds and to the other class when
it does not.

Fan construction takes the ``depth`` most valid cues in validity order and
enumerates all ``2 ** (depth - 1)`` exit structures. For each structure the
level thresholds are chosen by an exact branch-and-bound search over every
integer cut point (records are held as Python-int bitmasks), so the returned
tree is the best one reachable with that cue order and structure. The
``"marginal"`` threshold mode instead reuses each cue's full-data rule at every
level, which is cheaper and mirrors classic fan builders.
"""

from __future__ import annotations

import itertools
import json
import re
import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .cues import (
    rule_candidates,
    CueRule,
    CueStats,
    Direction,
    Goal,
    best_rule_for_cue,
    candidate_thresholds,
    counts_of,
    goal_value,
    rank_cues,
)
from .metrics import PerformanceRecord, Split, performance_record
from .schema import CueSpec, Dataset, JudgmentClass, RatingForm

MAX_DEPTH = 6
THRESHOLD_MODES = ("joint", "marginal")

NOT_OUT = JudgmentClass.NOT_OUTSTANDING
OUT = JudgmentClass.OUTSTANDING


@dataclass(frozen=True)
class FFTree:
    levels: tuple[CueRule, ...]
    goal: Goal = Goal.ACCURACY
    training_goal_value: float = float("nan")

    def __post_init__(self):
        if not self.levels:
            raise ValueError("a tree needs at least one level")
        ids = [r.cue_id for r in self.levels]
        if len(set(ids)) != len(ids):
            raise ValueError(f"cue used more than once: {ids}")

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def exits(self) -> tuple[JudgmentClass, ...]:
        """Exit classes of the non-final levels."""
        return tuple(r.positive_class_when_true for r in self.levels[:-1])

    @property
    def cue_ids(self) -> tuple[str, ...]:
        return tuple(r.cue_id for r in self.levels)

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "goal": self.goal.value,
            "training_goal_value": self.training_goal_value,
            "levels": [
                {
                    "cue_id": r.cue_id,
                    "direction": r.direction.value,
                    "threshold": r.threshold,
                    "class_when_true": r.positive_class_when_true.label,
                    "final": i == self.depth - 1,
                }
                for i, r in enumerate(self.levels)
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "FFTree":
        levels = tuple(
            CueRule(
                lv["cue_id"],
                Direction(lv["direction"]),
                int(lv["threshold"]),
                OUT if lv["class_when_true"] == OUT.label else NOT_OUT,
            )
            for lv in d["levels"]
        )
        return cls(levels, Goal(d.get("goal", "accuracy")), float(d.get("training_goal_value", "nan")))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass(frozen=True)
class ClassificationTrace:
    predicted: JudgmentClass
    cues_used: int


def exit_structures(depth: int) -> list[tuple[JudgmentClass, ...]]:
    """All exit structures of a given depth, in enumeration order."""
    return list(itertools.product((NOT_OUT, OUT), repeat=depth - 1))


# ---------------------------------------------------------------------------
# classification


def _scores_of(record: RatingForm | Mapping[str, int]) -> Mapping[str, int]:
    return record.scores if isinstance(record, RatingForm) else record


def classify_record(tree: FFTree, record: RatingForm | Mapping[str, int]) -> ClassificationTrace:
    scores = _scores_of(record)
    for i, rule in enumerate(tree.levels):
        fired = rule.fires(scores[rule.cue_id])
        if fired:
            return ClassificationTrace(rule.positive_class_when_true, i + 1)
        if i == tree.depth - 1:
            return ClassificationTrace(rule.positive_class_when_true.other(), i + 1)
    raise AssertionError("unreachable")


def predict_arrays(tree: FFTree, dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized classification: (predicted 0/1, cues used) per record."""
    n = len(dataset)
    pred = np.zeros(n, dtype=np.int64)
    used = np.zeros(n, dtype=np.int64)
    open_ = np.ones(n, dtype=bool)
    for i, rule in enumerate(tree.levels):
        x = dataset.X[:, dataset.cue_index(rule.cue_id)]
        fired = np.asarray(rule.fires(x), dtype=bool)
        pos = int(rule.positive_class_when_true)
        if i == tree.depth - 1:
            pred[open_] = np.where(fired[open_], pos, 1 - pos)
            used[open_] = i + 1
        else:
            leave = open_ & fired
            pred[leave] = pos
            used[leave] = i + 1
            open_ &= ~fired
    return pred, used


def classify_dataset(
    tree: FFTree, dataset: Dataset, split: Split = Split.TRAINING, label: str | None = None
) -> tuple[list[ClassificationTrace], PerformanceRecord]:
    if len(dataset) == 0:
        raise ValueError("cannot classify an empty dataset")
    pred, used = predict_arrays(tree, dataset)
    traces = [ClassificationTrace(JudgmentClass(int(p)), int(u)) for p, u in zip(pred, used)]
    rec = performance_record(
        label or f"{tree.depth} cue" + ("s" if tree.depth > 1 else ""),
        pred,
        dataset.y,
        split,
        cues_used=used,
        available_cues=len(dataset.schema),
    )
    return traces, rec


# ---------------------------------------------------------------------------
# fan construction


def _bitmask(flags: np.ndarray) -> int:
    """Pack a boolean vector into a Python int, bit i = element i."""
    flags = np.asarray(flags, dtype=bool)
    if flags.size == 0:
        return 0
    packed = np.packbits(flags, bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


class _Scorer:
    """Integer-weighted count of correct classifications over a bitmask.

    Accuracy weights both classes 1; balanced accuracy weights positives by the
    number of negatives and vice versa, which is proportional to the goal.
    """

    def __init__(self, y: np.ndarray, goal: Goal):
        y = np.asarray(y, dtype=bool)
        self.pos = _bitmask(y)
        self.neg = _bitmask(~y)
        n_pos, n_neg = int(y.sum()), int((~y).sum())
        if goal is Goal.BALANCED_ACCURACY and n_pos and n_neg:
            self.wp, self.wn = n_neg, n_pos
        else:
            self.wp, self.wn = 1, 1

    def of_class(self, mask: int, cls: JudgmentClass) -> int:
        if cls is OUT:
            return self.wp * (mask & self.pos).bit_count()
        return self.wn * (mask & self.neg).bit_count()

    def total(self, mask: int) -> int:
        return self.wp * (mask & self.pos).bit_count() + self.wn * (mask & self.neg).bit_count()


def _level_candidates(cue: CueSpec, exit_class: JudgmentClass) -> list[CueRule]:
    return [CueRule(cue.id, d, t, exit_class) for d, t in candidate_thresholds(cue)]


def _final_candidates(cue: CueSpec) -> list[CueRule]:
    return rule_candidates(cue)


def oriented_rule(dataset: Dataset, cue: CueSpec, exit_class: JudgmentClass, goal: Goal) -> CueRule:
    """Full-data rule for ``cue`` whose firing means ``exit_class``.

    Chosen by goal value of the single-cue classifier, ties in candidate order.
    """
    x = dataset.X[:, dataset.cue_index(cue.id)]
    y = dataset.y
    best, best_g = None, None
    for rule in _level_candidates(cue, exit_class):
        g = goal_value(counts_of(rule.predict(x), y), goal)
        if best_g is None or g > best_g:
            best, best_g = rule, g
    return best


def _final_sens(scorer: _Scorer, reach: int, fired: int, rule: CueRule) -> float:
    pos_reach = (reach & scorer.pos).bit_count()
    if not pos_reach:
        return -1.0
    predicted_pos = fired if rule.positive_class_when_true is OUT else reach & ~fired
    return (predicted_pos & scorer.pos).bit_count() / pos_reach


def _best_final(scorer: _Scorer, reach: int, cands: Sequence[tuple[CueRule, int]]):
    best_key, best = None, None
    for k, (rule, mask) in enumerate(cands):
        fired = reach & mask
        cls = rule.positive_class_when_true
        s = scorer.of_class(fired, cls) + scorer.of_class(reach & ~fired, cls.other())
        key = (-s, -_final_sens(scorer, reach, fired, rule), k)
        if best_key is None or key < best_key:
            best_key, best = key, (s, k)
    return best


def _search_structure(
    scorer: _Scorer,
    all_mask: int,
    level_cands: Sequence[Sequence[tuple[CueRule, int]]],
    final_cands: Sequence[tuple[CueRule, int]],
) -> tuple[int, tuple[int, ...]]:
    """Exact search over thresholds for a fixed exit structure.

    Depth-first in candidate order, keeping the first strictly better tree.
    A branch is cut when even a perfect classification of the records still
    open could not beat the incumbent; sibling cut points that remove the
    same records are skipped since their subtrees are identical.
    """
    n_levels = len(level_cands)
    best_score = -1
    best_choice: tuple[int, ...] = ()

    def dfs(i: int, reach: int, score: int, choice: tuple[int, ...]):
        nonlocal best_score, best_choice
        if i == n_levels:
            s, k = _best_final(scorer, reach, final_cands)
            if score + s > best_score:
                best_score, best_choice = score + s, choice + (k,)
            return
        if best_score >= 0 and score + scorer.total(reach) <= best_score:
            return
        seen = set()
        for k, (rule, mask) in enumerate(level_cands[i]):
            fired = reach & mask
            if fired in seen:
                continue
            seen.add(fired)
            gain = scorer.of_class(fired, rule.positive_class_when_true)
            dfs(i + 1, reach & ~fired, score + gain, choice + (k,))

    dfs(0, all_mask, 0, ())
    return best_score, best_choice


def _reach_masks(levels: Sequence[CueRule], masks: Sequence[int], all_mask: int) -> list[int]:
    reach, out = all_mask, []
    for rule, m in zip(levels, masks):
        out.append(reach)
        reach &= ~m
    return out


def fan_for_depth(
    dataset: Dataset,
    depth: int,
    goal: Goal = Goal.ACCURACY,
    ranked: Sequence[CueStats] | None = None,
    thresholds: str = "joint",
) -> list[FFTree]:
    """Best tree for every exit structure of ``depth``, in enumeration order."""
    if thresholds not in THRESHOLD_MODES:
        raise ValueError(f"thresholds must be one of {THRESHOLD_MODES}")
    if len(dataset) == 0:
        raise ValueError("cannot grow a tree on an empty dataset")
    ranked = list(ranked) if ranked is not None else rank_cues(dataset, goal)
    if depth < 1 or depth > len(ranked):
        raise ValueError(f"depth {depth} not in 1..{len(ranked)}")
    cues = [dataset.cue(s.cue_id) for s in ranked[:depth]]
    cols = {c.id: dataset.X[:, dataset.cue_index(c.id)] for c in cues}
    scorer = _Scorer(dataset.y, goal)
    all_mask = (1 << len(dataset)) - 1

    def with_masks(rules):
        return [(r, _bitmask(r.fires(cols[r.cue_id]))) for r in rules]

    final_cands = with_masks(_final_candidates(cues[-1]))
    trees = []
    for structure in exit_structures(depth):
        if thresholds == "marginal":
            levels = [oriented_rule(dataset, c, e, goal) for c, e in zip(cues[:-1], structure)]
            levels.append(best_rule_for_cue(dataset, cues[-1], goal).rule)
        else:
            level_cands = [with_masks(_level_candidates(c, e)) for c, e in zip(cues[:-1], structure)]
            _, choice = _search_structure(scorer, all_mask, level_cands, final_cands)
            levels = [level_cands[i][k][0] for i, k in enumerate(choice[:-1])]
            levels.append(final_cands[choice[-1]][0])
            # Levels no training record reaches fall back to the full-data rule.
            reach = _reach_masks(levels, [_bitmask(r.fires(cols[r.cue_id])) for r in levels], all_mask)
            for i, r in enumerate(reach):
                if r == 0:
                    if i == depth - 1:
                        levels[i] = best_rule_for_cue(dataset, cues[i], goal).rule
                    else:
                        levels[i] = oriented_rule(dataset, cues[i], structure[i], goal)
        tree = FFTree(tuple(levels), goal)
        pred, _ = predict_arrays(tree, dataset)
        g = goal_value(counts_of(pred, dataset.y), goal)
        trees.append(FFTree(tree.levels, goal, float(g)))
    return trees


def select_from_fan(trees: Sequence[FFTree], dataset: Dataset) -> FFTree:
    """Highest goal; ties prefer fewer outstanding exits, then enumeration order."""

    def key(item):
        idx, tree = item
        pred, _ = predict_arrays(tree, dataset)
        g = goal_value(counts_of(pred, dataset.y), tree.goal)
        return (-g, sum(1 for e in tree.exits if e is OUT), idx)

    return min(enumerate(trees), key=key)[1]


def build_fan(
    dataset: Dataset,
    depth_max: int = MAX_DEPTH,
    goal: Goal = Goal.ACCURACY,
    thresholds: str = "joint",
    keep_fans: dict[int, list[FFTree]] | None = None,
) -> list[FFTree]:
    """One selected tree per depth ``1..depth_max``.

    ``keep_fans``, when given, receives every fan member keyed by depth.
    """
    ranked = rank_cues(dataset, goal)
    if depth_max < 1:
        raise ValueError("depth_max must be at least 1")
    if depth_max > len(ranked):
        raise ValueError(f"depth_max {depth_max} exceeds the {len(ranked)} available cues")
    if depth_max > MAX_DEPTH:
        warnings.warn(
            f"depth_max {depth_max} is above the conventional limit of {MAX_DEPTH}; "
            "the structure search grows as 2**(depth-1)",
            stacklevel=2,
        )
    out = []
    for d in range(1, depth_max + 1):
        fan = fan_for_depth(dataset, d, goal, ranked, thresholds)
        if keep_fans is not None:
            keep_fans[d] = fan
        out.append(select_from_fan(fan, dataset))
    return out


# ---------------------------------------------------------------------------
# prose


def _condition(rule: CueRule, cue: CueSpec) -> str:
    if rule.direction is Direction.EQ:
        return f"= {'yes' if rule.threshold == 1 else 'no'}"
    if rule.direction is Direction.GE:
        if rule.threshold == cue.scale.low:
            return f"≥ {rule.threshold}"
        return f"> {rule.threshold - 1}"
    return f"≤ {rule.threshold}"


def describe_tree(tree: FFTree, schema: Sequence[CueSpec]) -> str:
    """If-then-else prose, one sentence per level; the final level spans two lines."""
    names = {c.id: c.name for c in schema}
    lines = []
    for i, rule in enumerate(tree.levels):
        cue = next(c for c in schema if c.id == rule.cue_id)
        head = f'If {names[rule.cue_id]} {_condition(rule, cue)}, decide "{rule.positive_class_when_true.label}";'
        if i < tree.depth - 1:
            lines.append(f"{head} otherwise, assess {names[tree.levels[i + 1].cue_id]}.")
        else:
            lines.append(head)
            lines.append(f'otherwise, decide "{rule.positive_class_when_true.other().label}".')
    return "\n".join(lines)


_LEVEL_RE = re.compile(
    r'^If (?P<name>.+) (?P<op>>|≥|≤|=) (?P<value>\d+|yes|no), decide "(?P<cls>outstanding|not outstanding)";'
    r'(?: otherwise, assess (?P<next>.+)\.)?$'
)
_ELSE_RE = re.compile(r'^otherwise, decide "(?P<cls>outstanding|not outstanding)"\.$')


def parse_description(text: str, schema: Sequence[CueSpec]) -> FFTree:
    """Inverse of :func:`describe_tree`."""
    by_name = {c.name: c for c in schema}
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ValueError("a tree description needs at least two lines")
    rules = []
    for i, line in enumerate(lines[:-1]):
        m = _LEVEL_RE.match(line.strip())
        if not m:
            raise ValueError(f"cannot parse line {i + 1}: {line!r}")
        cue = by_name.get(m["name"])
        if cue is None:
            raise ValueError(f"unknown cue {m['name']!r}")
        op, value = m["op"], m["value"]
        if op == "=":
            rule_dir, thr = Direction.EQ, 1 if value == "yes" else 0
        elif op == ">":
            rule_dir, thr = Direction.GE, int(value) + 1
        elif op == "≥":
            rule_dir, thr = Direction.GE, int(value)
        else:
            rule_dir, thr = Direction.LE, int(value)
        cls = OUT if m["cls"] == OUT.label else NOT_OUT
        is_last = i == len(lines) - 2
        if is_last == (m["next"] is not None):
            raise ValueError(f"line {i + 1}: misplaced 'otherwise' clause")
        rules.append(CueRule(cue.id, rule_dir, thr, cls))
        if not is_last:
            following = _LEVEL_RE.match(lines[i + 1].strip())
            if following is None or following["name"] != m["next"]:
                raise ValueError(f"line {i + 1}: 'assess {m['next']}' does not match the next level")
    m = _ELSE_RE.match(lines[-1].strip())
    if not m or (OUT if m["cls"] == OUT.label else NOT_OUT) is rules[-1].positive_class_when_true:
        raise ValueError(f"bad closing line: {lines[-1]!r}")
    return FFTree(tuple(rules))
