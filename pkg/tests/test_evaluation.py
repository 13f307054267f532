import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frugal_judge.cues import CueRule, Direction
from frugal_judge.evaluation import (
    RefereeAgreement,
    SplitPlan,
    agreement_summary,
    compare,
    make_split,
    per_referee_agreement,
    role_split,
    stratified_split,
    threads,
)
from frugal_judge.fft import FFTree
from frugal_judge.metrics import Split
from frugal_judge.schema import JudgmentClass

from conftest import make_dataset

ROW_LABELS = ["1 cue", "2 cues", "3 cues", "4 cues", "5 cues", "6 cues"]


def role_dataset(n_first, n_second, seed=0, k=3):
    rng = np.random.default_rng(seed)
    n = n_first + n_second
    X = rng.integers(1, 6, (n, k))
    y = (X.sum(axis=1) + rng.normal(0, 1, n) > 3 * k).astype(int)
    y[0], y[1] = 0, 1
    roles = [1] * n_first + [2] * n_second
    return make_dataset(X, y, roles=roles)


def assert_partition(plan: SplitPlan, n: int):
    tr, te = set(plan.train_indices), set(plan.test_indices)
    assert not tr & te
    assert tr | te == set(range(n))


def test_role_split_canonical(canonical):
    plan = role_split(canonical)
    assert (len(plan.train_indices), len(plan.test_indices)) == (237, 237)
    assert all(canonical.records[i].referee_role == 1 for i in plan.train_indices)
    assert_partition(plan, 474)


def test_role_split_single_second_record():
    ds = role_dataset(5, 1)
    assert len(role_split(ds).test_indices) == 1


def test_role_split_missing_role():
    with pytest.raises(ValueError):
        role_split(role_dataset(4, 0))


def test_stratified_anchor():
    ds = role_dataset(237, 237)
    plan = stratified_split(ds, seed=3)
    assert (len(plan.train_indices), len(plan.test_indices)) == (238, 236)
    assert plan == stratified_split(ds, seed=3)
    assert plan != stratified_split(ds, seed=4)
    assert_partition(plan, 474)


def test_stratified_even_case():
    ds = role_dataset(10, 10)
    plan = stratified_split(ds, seed=0)
    roles = ds.roles
    assert len(plan.train_indices) == len(plan.test_indices) == 10
    assert sum(roles[i] == 1 for i in plan.train_indices) == 5


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_stratified_partition_property(a, b, seed):
    ds = role_dataset(a, b, k=1)
    plan = stratified_split(ds, seed)
    assert_partition(plan, a + b)
    assert len(plan.train_indices) == (a + 1) // 2 + (b + 1) // 2


def test_make_split_needs_seed_for_stratified():
    with pytest.raises(ValueError):
        make_split(role_dataset(3, 3), "stratified")


@pytest.fixture(scope="module")
def comparison(canonical):
    return compare(canonical, role_split(canonical))


def test_nine_row_layout(comparison):
    labels = comparison.row_labels()
    assert len(labels) == 9
    assert labels[:6] == ROW_LABELS
    assert labels[6].endswith("(log-odds)")
    assert labels[7] == "2 cues (cue validity)"
    assert labels[8] == "All cues"
    assert [r.split for r in comparison.records[:2]] == [Split.TRAINING, Split.TESTING]


def test_full_regression_row(comparison):
    for split in Split:
        r = comparison.record("All cues", split)
        assert (r.frug_abs, r.frug_rel) == (13, 0.0)
    assert comparison.record("2 cues (cue validity)", Split.TRAINING).frug_abs == 2


def test_metric_identity_on_every_record(comparison):
    for r in comparison.records:
        m = r.matrix
        prev = (m.tp + m.fn) / m.n
        assert abs(r.acc - (prev * r.sens + (1 - prev) * r.spec)) <= 1e-12


def test_fan_selection_retained(comparison):
    for tree in comparison.trees:
        assert all(tree.training_goal_value >= t.training_goal_value for t in comparison.fans[tree.depth])


def test_cue_validity_model_uses_top_cues(comparison):
    m = comparison.reduced["2 cues (cue validity)"]
    assert list(m.predictors) == [s.cue_id for s in comparison.cue_stats[:2]]


def test_fixture_regression_at_least_as_accurate_as_tree(comparison):
    reg = comparison.record("All cues", Split.TESTING)
    tree = comparison.record("2 cues", Split.TESTING)
    assert reg.acc >= tree.acc >= 0.80


def test_perfect_data_gives_perfect_accuracy():
    rng = np.random.default_rng(1)
    n = 80
    X = rng.integers(1, 6, (n, 6))
    X[:, 0] = np.where(np.arange(n) % 4 < 2, 5, 1)
    y = (X[:, 0] == 5).astype(int)
    ds = make_dataset(X, y)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        comp = compare(ds, role_split(ds))
    assert all(r.acc == 1.0 for r in comp.records)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("FRUGAL_JUDGE_THREADS", "1")
    assert threads() == 1
    monkeypatch.setenv("FRUGAL_JUDGE_THREADS", "junk")
    assert threads() == 1
    monkeypatch.delenv("FRUGAL_JUDGE_THREADS")
    assert threads() == 2


def test_compare_single_thread_identical(canonical, comparison, monkeypatch):
    monkeypatch.setenv("FRUGAL_JUDGE_THREADS", "1")
    again = compare(canonical, role_split(canonical))
    assert [r.to_dict() for r in again.records] == [r.to_dict() for r in comparison.records]


class _Const:
    """Regression stand-in predicting a fixed vector."""

    def __init__(self, pred):
        self.pred = np.asarray(pred)

    def predict(self, part):
        return self.pred[: len(part)]


def test_per_referee_examples():
    X = [[5]] * 4 + [[1]] * 4
    y = [1, 1, 0, 0, 0, 0, 0, 0]
    refs = ["A", "A", "A", "A", "B", "B", "B", "B"]
    ds = make_dataset(X, y, roles=[1] * 8, referees=refs)
    tree = FFTree((CueRule("c0", Direction.GE, 5, JudgmentClass.OUTSTANDING),))
    plan = SplitPlan("role", tuple(range(8)), ())
    rows = per_referee_agreement(ds, tree, _Const([1] * 8), plan)
    by = {a.referee_id: a for a in rows}
    assert by["A"].proportion_correct_tree == 0.5  # two of four matched
    assert by["B"].proportion_correct_tree == 1.0
    assert by["B"].proportion_correct_regression == 0.0


def test_per_referee_ordering(canonical, comparison):
    rows = per_referee_agreement(canonical, comparison.trees[1], comparison.full_model, comparison.plan)
    for split in Split:
        part = [a for a in rows if a.split is split]
        assert sum(a.n_judgments for a in part) == 237
        keys = [(-a.n_judgments, a.referee_id) for a in part]
        assert keys == sorted(keys)
    # splits come training first
    assert rows[0].split is Split.TRAINING


def test_regression_agreement_pattern(canonical, comparison):
    rows = per_referee_agreement(canonical, comparison.trees[1], comparison.full_model, comparison.plan)
    summary = agreement_summary(rows)
    for split, s in summary.items():
        assert s["regression_at_or_above"] >= 0.8 * s["referees"], split


def test_agreement_dict_round_trip():
    a = RefereeAgreement("R01", Split.TESTING, 4, 3, 2)
    assert RefereeAgreement.from_dict(a.to_dict()) == a
    assert math.isclose(a.to_dict()["proportion_correct_tree"], 0.75)
