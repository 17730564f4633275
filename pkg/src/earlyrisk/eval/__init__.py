"""Metrics, fairness measures, transition breakdown, importance ranking and reports."""
from .fairness import FairnessRecord, demographic_parity, equal_opportunity, equalized_odds, fairness_records
from .importance import importance_ranking, selected_features_table
from .metrics import ConfusionCounts, auc_score, classification_metrics
from .planted import planted_recovery
from .report import build_report, generalizability_report, summary_markdown, validate_report
from .transitions import TransitionBreakdown, transition_breakdown

__all__ = [
    "FairnessRecord", "demographic_parity", "equal_opportunity", "equalized_odds", "fairness_records",
    "importance_ranking", "selected_features_table",
    "ConfusionCounts", "auc_score", "classification_metrics", "planted_recovery",
    "build_report", "generalizability_report", "summary_markdown", "validate_report",
    "TransitionBreakdown", "transition_breakdown",
]
