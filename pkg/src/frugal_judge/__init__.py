"""Fast-and-frugal trees versus logistic regression for expert funding judgments."""

from .cues import CueRule, CueStats, Direction, Goal, best_rule_for_cue, rank_cues
from .evaluation import (
    Comparison,
    RefereeAgreement,
    SplitPlan,
    compare,
    make_split,
    per_referee_agreement,
    role_split,
    stratified_split,
)
from .fft import FFTree, build_fan, classify_dataset, classify_record, describe_tree, parse_description
from .logistic import DesignMatrix, LogisticModel, SingularDesignError, fit_logistic, optimal_cutoff, vif
from .metrics import ConfusionMatrix, PerformanceRecord, Split, confusion, frugality
from .schema import (
    CANONICAL_CUES,
    CueSpec,
    Dataset,
    JudgmentClass,
    RatingForm,
    RefereeRole,
    ScaleKind,
    ValidationError,
    binarize_overall,
    read_csv,
    validate_dataset,
)
from .synthetic import CaseByCase, SynthConfig, Uniform, generate

__version__ = "0.1.0"

__all__ = [
    "CANONICAL_CUES", "CaseByCase", "Comparison", "ConfusionMatrix", "CueRule", "CueSpec", "CueStats",
    "Dataset", "DesignMatrix", "Direction", "FFTree", "Goal", "JudgmentClass", "LogisticModel",
    "PerformanceRecord", "RatingForm", "RefereeAgreement", "RefereeRole", "ScaleKind", "SingularDesignError",
    "Split", "SplitPlan", "SynthConfig", "Uniform", "ValidationError", "best_rule_for_cue", "binarize_overall",
    "build_fan", "classify_dataset", "classify_record", "compare", "confusion", "describe_tree", "fit_logistic",
    "frugality", "generate", "make_split", "optimal_cutoff", "parse_description", "per_referee_agreement",
    "rank_cues", "read_csv", "role_split", "stratified_split", "validate_dataset", "vif",
]
