from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Method(str, enum.Enum):
    INTEGRATED_GRADIENTS = "integrated_gradients"
    KERNEL_SHAP = "kernel_shap"
    EXACT_SHAPLEY = "exact_shapley"


@dataclass(frozen=True, eq=False)
class AttributionVector:
    """Per-feature attribution of one prediction.

    ``reference_value`` is F(baseline) for Integrated Gradients and the mean
    background prediction for the Shapley methods, so
    ``completeness_gap == |sum(values) - (prediction - reference_value)|``.
    """

    values: np.ndarray
    instance: np.ndarray
    baseline: np.ndarray
    method: Method
    prediction: float
    reference_value: float
    completeness_gap: float

    @property
    def n_features(self) -> int:
        return self.values.shape[0]

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "values": self.values.tolist(),
            "prediction": self.prediction,
            "reference_value": self.reference_value,
            "completeness_gap": self.completeness_gap,
        }


def make_attribution(values, instance, baseline, method, prediction, reference_value):
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("attribution produced non-finite values")
    gap = abs(float(np.sum(values)) - (prediction - reference_value))
    return AttributionVector(
        values=values,
        instance=np.asarray(instance, dtype=np.float64),
        baseline=np.asarray(baseline, dtype=np.float64),
        method=Method(method),
        prediction=float(prediction),
        reference_value=float(reference_value),
        completeness_gap=gap,
    )
