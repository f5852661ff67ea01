"""Defect-prediction models with Integrated Gradients and Kernel SHAP explanations."""

__version__ = "0.1.0"
