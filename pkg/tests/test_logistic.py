import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit

from frugal_judge.logistic import (
    INTERCEPT,
    CollinearityWarning,
    DesignMatrix,
    SeparationWarning,
    SingularDesignError,
    _irls,
    classify,
    fit_logistic,
    goodness_of_fit,
    gradient,
    log_likelihood,
    null_log_likelihood,
    optimal_cutoff,
    reduced_model,
    significant_predictors,
    vif,
    wald_p_value,
)
from frugal_judge.schema import JudgmentClass

from conftest import FIXTURES


def simulate(seed, n, beta):
    rng = np.random.default_rng(seed)
    P = rng.normal(size=(n, len(beta) - 1))
    y = (rng.random(n) < expit(beta[0] + P @ beta[1:])).astype(float)
    return DesignMatrix.from_arrays(P, y)


def test_intercept_only_closed_form():
    y = np.array([1.0] * 6 + [0.0] * 4)
    d = DesignMatrix(np.ones((10, 1)), y, (INTERCEPT,))
    m = fit_logistic(d)
    assert m.coef(INTERCEPT) == pytest.approx(math.log(0.6 / 0.4), abs=1e-10)
    assert np.allclose(m.fitted, 0.6)
    assert m.diagnostics.pseudo_r2["mcfadden"] == pytest.approx(0.0, abs=1e-12)
    assert m.diagnostics.log_likelihood == pytest.approx(null_log_likelihood(y), abs=1e-12)


def test_score_equation_and_gradient():
    d = simulate(1, 400, np.array([0.3, 1.0, -0.5, 0.2]))
    m = fit_logistic(d)
    assert abs(np.sum(m.fitted - d.y)) < 1e-8
    assert np.max(np.abs(gradient(m.coefficients, d.X, d.y))) < 1e-8
    assert m.diagnostics.converged


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    d = simulate(seed, 50, rng.normal(size=4))
    beta = rng.normal(size=4)
    h = 1e-5
    fd = np.array([
        (log_likelihood(beta + h * e, d.X, d.y) - log_likelihood(beta - h * e, d.X, d.y)) / (2 * h)
        for e in np.eye(4)
    ])
    assert np.max(np.abs(fd - gradient(beta, d.X, d.y))) < 1e-6


def test_standard_errors_match_numeric_hessian():
    d = simulate(7, 80, np.array([-0.2, 0.8, 0.4]))
    m = fit_logistic(d)
    b, h, k = m.coefficients, 1e-4, len(m.coefficients)
    ll = lambda v: log_likelihood(v, d.X, d.y)  # noqa: E731
    H = np.empty((k, k))
    E = np.eye(k) * h
    for i in range(k):
        for j in range(k):
            H[i, j] = (ll(b + E[i] + E[j]) - ll(b + E[i] - E[j]) - ll(b - E[i] + E[j]) + ll(b - E[i] - E[j])) / (4 * h * h)
    se_fd = np.sqrt(np.diag(np.linalg.inv(-H)))
    se = np.array([m.diagnostics.se[c] for c in m.columns])
    assert np.max(np.abs(se - se_fd)) < 1e-4


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_log_likelihood_never_decreases(seed):
    d = simulate(seed, 60, np.array([0.5, 2.0, -1.5]))
    hist = []
    _irls(d.X, d.y, hist)
    assert all(b >= a for a, b in zip(hist, hist[1:]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_nested_models(seed):
    d = simulate(seed, 60, np.array([0.0, 1.0, 0.5, -0.5]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        small = reduced_model(d, ["x1"])
        mid = reduced_model(d, ["x1", "x2"])
        big = fit_logistic(d)
    assert mid.diagnostics.log_likelihood >= small.diagnostics.log_likelihood - 1e-9
    assert big.diagnostics.log_likelihood >= mid.diagnostics.log_likelihood - 1e-9
    # the fitted model classifies at least as well as predicting the majority class
    acc = np.mean(big.predict(d) == d.y)
    assert acc >= max(d.y.mean(), 1 - d.y.mean()) - 1e-12


def test_recovers_known_coefficients():
    beta = np.array([0.5, 1.0, -1.0, 0.5])
    hits = total = 0
    for seed in range(3):
        m = fit_logistic(simulate(seed, 2000, beta))
        for c, b in zip(m.columns, beta):
            lo, hi = m.diagnostics.ci95[c]
            hits += lo <= b <= hi
            total += 1
    assert hits >= 10


def test_wald_examples():
    assert wald_p_value(0.0, 1.0) == 1.0
    assert wald_p_value(1.96, 1.0) == pytest.approx(0.05, abs=1e-4)


def test_separation_flagged():
    x = np.array([1, 2, 3, 4, 5, 6], dtype=float)
    y = np.array([0, 0, 0, 1, 1, 1], dtype=float)
    with pytest.warns(SeparationWarning):
        m = fit_logistic(DesignMatrix.from_arrays(x, y))
    assert m.diagnostics.separated
    assert all(math.isnan(v) for v in m.diagnostics.se.values())
    assert significant_predictors(m) == []
    assert (m.predict(DesignMatrix.from_arrays(x, y)) == y).all()


def test_singular_design_names_columns():
    rng = np.random.default_rng(0)
    a = rng.normal(size=30)
    P = np.column_stack([a, rng.normal(size=30), 2 * a])
    y = (rng.random(30) < 0.5).astype(float)
    with pytest.raises(SingularDesignError) as e:
        fit_logistic(DesignMatrix.from_arrays(P, y, ["a", "b", "a2"]))
    assert e.value.columns == ["a2"]


def test_single_class_rejected():
    with pytest.raises(ValueError):
        fit_logistic(DesignMatrix.from_arrays(np.arange(5.0), np.ones(5)))


def test_vif_orthogonal():
    P = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]] * 3, dtype=float)
    assert vif(P) == pytest.approx({"x1": 1.0, "x2": 1.0}, abs=1e-12)


def test_vif_duplicate_is_infinite():
    rng = np.random.default_rng(3)
    a = rng.normal(size=20)
    with pytest.warns(CollinearityWarning):
        out = vif(np.column_stack([a, rng.normal(size=20), a]))
    assert math.isinf(out["x1"]) and math.isinf(out["x3"])
    assert math.isfinite(out["x2"])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6))
def test_vif_matches_inverse_correlation(seed, k):
    rng = np.random.default_rng(seed)
    P = rng.normal(size=(50, k)) @ rng.normal(size=(k, k)) + rng.normal(size=(50, k))
    expected = np.diag(np.linalg.inv(np.corrcoef(P, rowvar=False)))
    got = vif(P)
    assert np.max(np.abs(np.array(list(got.values())) - expected)) < 1e-8


def test_goodness_of_fit_published_anchors():
    ll0 = null_log_likelihood(np.array([1] * 120 + [0] * 117))
    assert -2 * ll0 == pytest.approx(328.5, abs=0.05)
    for chi2, k, aic, mcf, vz in ((232.56, 14, 123.95, 0.71, 0.85),
                                  (192.42, 3, 142.09, 0.59, 0.77),
                                  (172.57, 3, 161.94, 0.53, 0.73)):
        g = goodness_of_fit(ll0 + chi2 / 2, ll0, 237, k)
        assert g["aic"] == pytest.approx(aic, abs=0.01)
        assert round(g["mcfadden"], 2) == mcf
        assert round(g["veall_zimmermann"], 2) == vz


def test_pseudo_r2_hand_computation():
    d = simulate(11, 40, np.array([0.2, 1.2, -0.7]))
    m = fit_logistic(d)
    ll, ll0, n = m.diagnostics.log_likelihood, m.diagnostics.null_log_likelihood, 40
    eta = d.X @ m.coefficients
    v = float(np.mean((eta - eta.mean()) ** 2))
    r_an = 2 * (ll - ll0) / (2 * (ll - ll0) + n)
    r_an_max = -2 * ll0 / (n - 2 * ll0)
    pr = m.diagnostics.pseudo_r2
    assert pr["mcfadden"] == pytest.approx(1 - ll / ll0, abs=1e-12)
    assert pr["mckelvey_zavoina"] == pytest.approx(v / (v + math.pi ** 2 / 3), abs=1e-12)
    assert pr["veall_zimmermann"] == pytest.approx(r_an / r_an_max, abs=1e-12)
    assert m.diagnostics.aic == 2 * 3 - 2 * ll


def test_mcfadden_approaches_one():
    g = goodness_of_fit(-1e-9, -50.0, 100, 2)
    assert g["mcfadden"] == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6))
def test_pseudo_r2_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    d = simulate(seed, 30, rng.normal(size=3))
    if len(np.unique(d.y)) < 2:
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        m = fit_logistic(d)
    assert all(0 <= v <= 1 for v in m.diagnostics.pseudo_r2.values())


def test_cutoff_examples():
    assert optimal_cutoff([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 0.8
    c = optimal_cutoff([0.4] * 5, [1, 1, 1, 0, 0])
    assert c == 0.4  # everything outstanding, the majority
    c = optimal_cutoff([0.4] * 5, [0, 0, 0, 1, 1])
    assert c > 0.4  # everything not outstanding


def interval_errors(p, y, t):
    return int(np.sum((p >= t) != y.astype(bool)))


def brute_force_cutoff_errors(p, y):
    """Best error count over one threshold per each of the 2n+1 intervals."""
    s = np.sort(p)
    probes = [s[0] - 1, s[-1] + 1, *s, *((s[:-1] + s[1:]) / 2)]
    return min(interval_errors(p, y, t) for t in probes), probes


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 1)), min_size=15, max_size=15))
def test_cutoff_matches_interval_search(pairs):
    p = np.array([a / 20 for a, _ in pairs])
    y = np.array([b for _, b in pairs])
    best, probes = brute_force_cutoff_errors(p, y)
    c = optimal_cutoff(p, y)
    assert interval_errors(p, y, c) == best
    # lowest cutoff among the optimal ones
    lowest = min(t for t in probes if interval_errors(p, y, t) == best)
    assert ((p >= c) == (p >= lowest)).all()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0.01, 0.99), st.integers(0, 1)), min_size=2, max_size=20))
def test_cutoff_invariant_under_monotone_transform(pairs):
    p = np.array([a for a, _ in pairs])
    y = np.array([b for _, b in pairs])
    q = p ** 3 + 2 * p  # strictly increasing
    assert ((p >= optimal_cutoff(p, y)) == (q >= optimal_cutoff(q, y))).all()


def test_classify_boundary():
    d = simulate(2, 100, np.array([0.0, 1.0]))
    m = fit_logistic(d, cutoff=0.5)
    rec = {"x1": 0}
    # intercept-driven probability at x1 = 0 becomes the cutoff itself
    m.cutoff = float(expit(m.coef(INTERCEPT)))
    assert classify(m, rec) is JudgmentClass.OUTSTANDING
    m.cutoff = 0.5
    m.coefficients = np.array([-800.0, 0.0])
    assert classify(m, rec) is JudgmentClass.NOT_OUTSTANDING


def test_reduced_with_all_cues_is_full_fit(canonical):
    d = DesignMatrix.from_dataset(canonical.subset(range(0, 474, 2)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        full = fit_logistic(d)
        same = reduced_model(d, list(d.predictors))
    assert np.array_equal(full.coefficients, same.coefficients)
    assert full.cutoff == same.cutoff


def test_golden_model(canonical):
    golden = json.loads((FIXTURES / "synth_uniform_regression.json").read_text())
    train = canonical.subset([i for i, r in enumerate(canonical.records) if r.referee_role == 1])
    m = fit_logistic(DesignMatrix.from_dataset(train))
    for c, b in golden["coefficients"].items():
        assert m.coef(c) == pytest.approx(b, rel=1e-8, abs=1e-8)
    assert m.cutoff == pytest.approx(golden["cutoff"], abs=1e-12)
    beta = np.array([golden["coefficients"][c] for c in m.columns])
    for r in canonical.records[:40]:
        x = np.array([1.0] + [r.scores[c] for c in m.predictors])
        expected = JudgmentClass(int(expit(x @ beta) >= golden["cutoff"]))
        assert classify(m, r) is expected
