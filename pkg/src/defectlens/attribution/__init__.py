"""Integrated Gradients, Kernel SHAP, an exact Shapley oracle and importance ranking."""

from .explain import cap_rows, explain_rows, sample_background
from .importance import ImportanceReport, RankingComparison, compare_rankings, global_importance
from .integrated_gradients import IgConfig, integrated_gradients
from .shap import ShapConfig, coalition_values, exact_shapley, kernel_shap
from .types import AttributionVector, Method

__all__ = [
    "AttributionVector", "Method", "IgConfig", "ShapConfig", "ImportanceReport",
    "RankingComparison", "integrated_gradients", "kernel_shap", "exact_shapley",
    "coalition_values", "global_importance", "compare_rankings", "explain_rows",
    "cap_rows", "sample_background",
]
