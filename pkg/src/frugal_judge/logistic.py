"""Maximum-likelihood binary logistic regression with Wald inference.

Fitting uses iteratively reweighted least squares (Newton-Raphson on the
Bernoulli log-likelihood) with step halving so the log-likelihood never
decreases. Diagnostics cover standard errors, 95% Wald intervals, p-values,
variance-inflation factors, AIC, the likelihood-ratio chi-square against the
intercept-only model and three pseudo-R² measures. The classification cutoff
minimizes the training misclassification count.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import stats
from scipy.special import expit

from .schema import Dataset, JudgmentClass, RatingForm

INTERCEPT = "constant"
Z95 = 1.96
TOL = 1e-10
POLISH_STEP = 1e-6
MAX_ITER = 100
SEPARATION_NORM = 1e4


class SingularDesignError(np.linalg.LinAlgError):
    """The design matrix has linearly dependent columns."""

    def __init__(self, columns: Sequence[str]):
        self.columns = list(columns)
        super().__init__(f"singular information matrix; dependent columns: {', '.join(self.columns)}")


class SeparationWarning(UserWarning):
    """Fitted coefficients diverge; inference is suppressed."""


class CollinearityWarning(UserWarning):
    """A predictor is a perfect linear function of the others."""


@dataclass(frozen=True)
class DesignMatrix:
    """Intercept column first, then one raw-score column per predictor."""

    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X must be (n, k) and match y")
        if self.X.shape[1] != len(self.columns):
            raise ValueError("column names do not match X")

    @classmethod
    def from_dataset(cls, dataset: Dataset, cues: Sequence[str] | None = None) -> "DesignMatrix":
        cues = tuple(cues) if cues is not None else dataset.cue_ids
        idx = [dataset.cue_index(c) for c in cues]
        X = np.column_stack([np.ones(len(dataset)), dataset.X[:, idx].astype(float)])
        return cls(X, dataset.y.astype(float), (INTERCEPT,) + cues)

    @classmethod
    def from_arrays(cls, predictors: np.ndarray, y: np.ndarray, names: Sequence[str] | None = None):
        predictors = np.asarray(predictors, dtype=float)
        if predictors.ndim == 1:
            predictors = predictors[:, None]
        names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(predictors.shape[1]))
        X = np.column_stack([np.ones(predictors.shape[0]), predictors])
        return cls(X, np.asarray(y, dtype=float), (INTERCEPT,) + names)

    @property
    def predictors(self) -> tuple[str, ...]:
        return self.columns[1:]

    def subset(self, predictors: Sequence[str]) -> "DesignMatrix":
        missing = [p for p in predictors if p not in self.predictors]
        if missing:
            raise KeyError(f"unknown predictors: {missing}")
        idx = [0] + [self.columns.index(p) for p in predictors]
        return DesignMatrix(self.X[:, idx], self.y, tuple(self.columns[i] for i in idx))


@dataclass
class FitDiagnostics:
    log_likelihood: float
    null_log_likelihood: float
    aic: float
    lr_chi_square: float
    df: int
    lr_p_value: float
    se: dict[str, float] = field(default_factory=dict)
    ci95: dict[str, tuple[float, float]] = field(default_factory=dict)
    p_values: dict[str, float] = field(default_factory=dict)
    vif: dict[str, float] = field(default_factory=dict)
    pseudo_r2: dict[str, float] = field(default_factory=dict)
    iterations: int = 0
    converged: bool = True
    separated: bool = False


@dataclass
class LogisticModel:
    columns: tuple[str, ...]
    coefficients: np.ndarray
    cutoff: float
    diagnostics: FitDiagnostics
    fitted: np.ndarray = field(repr=False, default=None)

    @property
    def predictors(self) -> tuple[str, ...]:
        return self.columns[1:]

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.columns.index(name)])

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coefficients

    def predict_proba(self, data: Dataset | DesignMatrix | np.ndarray) -> np.ndarray:
        if isinstance(data, Dataset):
            data = DesignMatrix.from_dataset(data, self.predictors)
        X = data.X if isinstance(data, DesignMatrix) else np.asarray(data, dtype=float)
        return expit(self.linear_predictor(X))

    def predict(self, data) -> np.ndarray:
        return (self.predict_proba(data) >= self.cutoff).astype(np.int64)

    def to_dict(self) -> dict:
        d = self.diagnostics

        def num(x):
            x = float(x)
            return None if math.isnan(x) else ("inf" if math.isinf(x) else x)

        return {
            "columns": list(self.columns),
            "coefficients": {c: float(b) for c, b in zip(self.columns, self.coefficients)},
            "cutoff": self.cutoff,
            "diagnostics": {
                "log_likelihood": d.log_likelihood,
                "null_log_likelihood": d.null_log_likelihood,
                "aic": d.aic,
                "lr_chi_square": d.lr_chi_square,
                "df": d.df,
                "lr_p_value": d.lr_p_value,
                "se": {k: num(v) for k, v in d.se.items()},
                "ci95": {k: [num(lo), num(hi)] for k, (lo, hi) in d.ci95.items()},
                "p_values": {k: num(v) for k, v in d.p_values.items()},
                "vif": {k: num(v) for k, v in d.vif.items()},
                "pseudo_r2": dict(d.pseudo_r2),
                "iterations": d.iterations,
                "converged": d.converged,
                "separated": d.separated,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# likelihood


def log_likelihood(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    eta = X @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def gradient(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    return X.T @ (y - expit(X @ beta))


def information(beta: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Observed (= expected, for the canonical link) information matrix."""
    p = expit(X @ beta)
    return (X * (p * (1.0 - p))[:, None]).T @ X


def null_log_likelihood(y: np.ndarray) -> float:
    n, k = len(y), float(np.sum(y))
    if k in (0.0, float(n)):
        return 0.0
    p = k / n
    return k * math.log(p) + (n - k) * math.log(1.0 - p)


def dependent_columns(X: np.ndarray, columns: Sequence[str]) -> list[str]:
    """Columns that add nothing to the span of the columns before them."""
    out, basis_rank = [], 0
    for j in range(X.shape[1]):
        r = np.linalg.matrix_rank(X[:, : j + 1])
        if r == basis_rank:
            out.append(columns[j])
        basis_rank = r
    return out


def _irls(X: np.ndarray, y: np.ndarray, history: list[float] | None = None):
    beta = np.zeros(X.shape[1])
    ll = log_likelihood(beta, X, y)
    if history is not None:
        history.append(ll)
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        g = gradient(beta, X, y)
        H = information(beta, X)
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, g, rcond=None)[0]
        t, new, new_ll = 1.0, beta + step, log_likelihood(beta + step, X, y)
        while new_ll < ll and t > 1e-10:
            t /= 2
            new = beta + t * step
            new_ll = log_likelihood(new, X, y)
        if new_ll < ll:
            break
        delta = new_ll - ll
        beta, ll = new, new_ll
        if history is not None:
            history.append(ll)
        if delta < TOL:
            converged = True
            break
        if np.max(np.abs(beta)) > SEPARATION_NORM:
            break
    if converged:
        beta, ll = _polish(beta, X, y)
    return beta, ll, it, converged


def _polish(beta: np.ndarray, X: np.ndarray, y: np.ndarray):
    # Near the optimum the log-likelihood is flat to machine precision, so the
    # line search can stall short of the root; finish on the score instead.
    g_norm = np.max(np.abs(gradient(beta, X, y)))
    for _ in range(5):
        try:
            step = np.linalg.solve(information(beta, X), gradient(beta, X, y))
        except np.linalg.LinAlgError:
            break
        if np.max(np.abs(step)) > POLISH_STEP:
            break  # not in the quadratic regime, e.g. a quasi-separated direction
        new = beta + step
        new_norm = np.max(np.abs(gradient(new, X, y)))
        if not new_norm < g_norm:
            break
        beta, g_norm = new, new_norm
    return beta, log_likelihood(beta, X, y)


# ---------------------------------------------------------------------------
# fitting and diagnostics


def fit_logistic(design: DesignMatrix, *, cutoff: float | None = None, with_vif: bool = True) -> LogisticModel:
    """Fit by IRLS and compute the full diagnostics.

    When ``cutoff`` is omitted it is chosen on the training data by
    :func:`optimal_cutoff`.
    """
    X, y = design.X, design.y
    if len(np.unique(y)) < 2:
        raise ValueError("logistic fit needs both outcome classes")
    dep = dependent_columns(X, design.columns)
    if dep:
        raise SingularDesignError(dep)

    beta, ll, iterations, converged = _irls(X, y)
    fitted = expit(X @ beta)
    separated = bool(np.max(np.abs(beta)) > SEPARATION_NORM or np.max(np.abs(y - fitted)) < 1e-6)
    if separated:
        warnings.warn(
            "outcome is (quasi-)separated by the predictors; coefficients diverge and "
            "inference is suppressed",
            SeparationWarning,
            stacklevel=2,
        )

    ll0 = null_log_likelihood(y)
    k = X.shape[1]
    chi2 = max(2.0 * (ll - ll0), 0.0)
    diag = FitDiagnostics(
        log_likelihood=ll,
        null_log_likelihood=ll0,
        aic=2.0 * k - 2.0 * ll,
        lr_chi_square=chi2,
        df=k - 1,
        lr_p_value=float(stats.chi2.sf(chi2, k - 1)) if k > 1 else 1.0,
        iterations=iterations,
        converged=converged,
        separated=separated,
    )
    model = LogisticModel(design.columns, beta, 0.5, diag, fitted)
    se, ci, p = inference(model, design)
    diag.se, diag.ci95, diag.p_values = se, ci, p
    if with_vif and len(design.predictors) >= 2:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CollinearityWarning)
            diag.vif = vif(design)
    diag.pseudo_r2 = pseudo_r2(model, design)
    model.cutoff = optimal_cutoff(fitted, y) if cutoff is None else cutoff
    return model


def inference(model: LogisticModel, design: DesignMatrix):
    """Wald standard errors, 95% intervals and two-sided p-values per coefficient."""
    cols = model.columns
    if model.diagnostics.separated:
        nan = float("nan")
        return ({c: nan for c in cols}, {c: (nan, nan) for c in cols}, {c: nan for c in cols})
    cov = np.linalg.inv(information(model.coefficients, design.X))
    se_arr = np.sqrt(np.diag(cov))
    se, ci, p = {}, {}, {}
    for c, b, s in zip(cols, model.coefficients, se_arr):
        se[c] = float(s)
        ci[c] = (float(b - Z95 * s), float(b + Z95 * s))
        p[c] = wald_p_value(float(b), float(s))
    return se, ci, p


def wald_p_value(estimate: float, se: float) -> float:
    return float(2.0 * stats.norm.sf(abs(estimate / se)))


def vif(design: DesignMatrix | np.ndarray, names: Sequence[str] | None = None) -> dict[str, float]:
    """Variance-inflation factor per predictor via auxiliary OLS regressions.

    Accepts a :class:`DesignMatrix` (its intercept column is skipped) or a raw
    ``(n, k)`` predictor array.
    """
    if isinstance(design, DesignMatrix):
        P, names = design.X[:, 1:], design.predictors
    else:
        P = np.asarray(design, dtype=float)
        names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(P.shape[1]))
    n, k = P.shape
    if k < 2:
        raise ValueError("VIF needs at least two predictors")
    out = {}
    for j in range(k):
        target = P[:, j]
        others = np.column_stack([np.ones(n), np.delete(P, j, axis=1)])
        coef, *_ = np.linalg.lstsq(others, target, rcond=None)
        resid = target - others @ coef
        sst = float(np.sum((target - target.mean()) ** 2))
        ssr = float(resid @ resid)
        if sst == 0.0 or ssr <= 1e-12 * sst:
            warnings.warn(f"perfect collinearity: {names[j]} is determined by the other predictors",
                          CollinearityWarning, stacklevel=2)
            out[names[j]] = math.inf
        else:
            out[names[j]] = sst / ssr  # 1 / (1 - R²)
    return out


def goodness_of_fit(ll: float, ll0: float, n: int, n_coefficients: int) -> dict[str, float]:
    """AIC, LR chi-square, McFadden and Veall-Zimmermann from likelihoods alone."""
    chi2 = 2.0 * (ll - ll0)
    r_an = chi2 / (chi2 + n)
    r_an_max = -2.0 * ll0 / (n - 2.0 * ll0)
    return {
        "aic": 2.0 * n_coefficients - 2.0 * ll,
        "lr_chi_square": chi2,
        "mcfadden": 1.0 - ll / ll0 if ll0 != 0 else 0.0,
        "veall_zimmermann": r_an / r_an_max if r_an_max > 0 else 0.0,
    }


def pseudo_r2(model: LogisticModel, design: DesignMatrix) -> dict[str, float]:
    d = model.diagnostics
    gof = goodness_of_fit(d.log_likelihood, d.null_log_likelihood, len(design.y), len(model.columns))
    eta = model.linear_predictor(design.X)
    var_eta = float(np.var(eta))
    mz = var_eta / (var_eta + math.pi ** 2 / 3.0)
    clip = lambda v: min(max(v, 0.0), 1.0)  # noqa: E731
    return {
        "mcfadden": clip(gof["mcfadden"]),
        "mckelvey_zavoina": clip(mz),
        "veall_zimmermann": clip(gof["veall_zimmermann"]),
    }


def optimal_cutoff(predicted_probs: Sequence[float], labels: Sequence[int]) -> float:
    """Cutoff minimizing misclassifications under ``prob >= cutoff`` -> outstanding.

    Candidates are the distinct predicted probabilities plus one value just
    above the largest, which classifies everything as not outstanding. Ties go
    to the lowest cutoff.
    """
    p = np.asarray(predicted_probs, dtype=float)
    y = np.asarray(labels).astype(bool)
    if p.size == 0 or p.shape != y.shape:
        raise ValueError("need equally long, non-empty probabilities and labels")
    cands = np.unique(p)
    cands = np.append(cands, np.nextafter(cands[-1], np.inf))
    order = np.argsort(p, kind="stable")
    ps, ys = p[order], y[order]
    # Records below candidate c are predicted negative: errors = positives below + negatives at/above.
    below = np.searchsorted(ps, cands, side="left")
    pos_cum = np.concatenate([[0], np.cumsum(ys)])
    neg_cum = np.concatenate([[0], np.cumsum(~ys)])
    errors = pos_cum[below] + (neg_cum[-1] - neg_cum[below])
    return float(cands[int(np.argmin(errors))])


def classify(model: LogisticModel, record: RatingForm | Mapping[str, int]) -> JudgmentClass:
    scores = record.scores if isinstance(record, RatingForm) else record
    x = np.array([1.0] + [float(scores[c]) for c in model.predictors])
    prob = float(expit(x @ model.coefficients))
    return JudgmentClass.OUTSTANDING if prob >= model.cutoff else JudgmentClass.NOT_OUTSTANDING


def reduced_model(design: DesignMatrix, selected_cues: Sequence[str], **kwargs) -> LogisticModel:
    if not selected_cues:
        raise ValueError("a reduced model needs at least one predictor")
    return fit_logistic(design.subset(list(selected_cues)), **kwargs)


def significant_predictors(model: LogisticModel, alpha: float = 0.05) -> list[str]:
    """Predictors with Wald p < alpha, in column order."""
    return [c for c in model.predictors if model.diagnostics.p_values.get(c, math.nan) < alpha]
