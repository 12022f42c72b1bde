"""Co-evolutionary hybrid decision-making.

An incremental model learns from a human labeler in real time and
challenges decisions that look inconsistent (against the user's own past
or the model's track record) or unfair (against a sensitive group or a
similar individual), explaining its suggestions while leaving the user
the final word on everything not covered by supervisor rules.
"""

from .data import (
    AttributeSchema, Dataset, DatasetSpec, SplitSizes, Splits,
    clean, load_csv, make_splits,
)
from .checks import (
    Condition, GFCPlan, Rule, RuleSet, SimilarityIndex,
    disc, match_rule, plan_gfc, project, uc_count, validate_ruleset,
)
from .engine import LabelingTask, Outcome, Session, SessionConfig, replay_events
from .explain import gower_distance, logic_explanation, real_instances, synthetic_instances
from .metrics import MetricsReport
from .oracles import GowerKNN, MixedNaiveBayes
from .skepticism import AccuracyLedger, is_skeptical, skepticism_score
from .tree import EFDTClassifier, hoeffding_bound, retrain_from_scratch
from .users import SimulatedUser

__version__ = "0.1.0"

__all__ = [
    "AttributeSchema", "Dataset", "DatasetSpec", "SplitSizes", "Splits",
    "clean", "load_csv", "make_splits",
    "Condition", "GFCPlan", "Rule", "RuleSet", "SimilarityIndex",
    "disc", "match_rule", "plan_gfc", "project", "uc_count", "validate_ruleset",
    "LabelingTask", "Outcome", "Session", "SessionConfig", "replay_events",
    "gower_distance", "logic_explanation", "real_instances", "synthetic_instances",
    "MetricsReport", "GowerKNN", "MixedNaiveBayes",
    "AccuracyLedger", "is_skeptical", "skepticism_score",
    "EFDTClassifier", "hoeffding_bound", "retrain_from_scratch",
    "SimulatedUser",
    "__version__",
]
