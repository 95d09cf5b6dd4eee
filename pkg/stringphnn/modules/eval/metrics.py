"""误差指标"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from stringphnn.modules.core.types import PhysicalParams
from stringphnn.modules.model.report import parameter_report


def relative_mse(reference, predicted) -> float:
    """Σ(y - ŷ)² / Σy²，reference/predicted 为数组或 (q, p) 元组，全部元素参与求和"""
    ref = _flatten(reference)
    pred = _flatten(predicted)
    if ref.shape != pred.shape:
        raise ValueError(f"参考与预测形状不符: {ref.shape} vs {pred.shape}")
    denominator = float(np.sum(ref * ref))
    if denominator == 0.0:
        raise ValueError("参考信号能量为零，相对 MSE 无定义")
    diff = ref - pred
    return float(np.sum(diff * diff)) / denominator


def _flatten(value) -> np.ndarray:
    if isinstance(value, (tuple, list)):
        return np.concatenate([np.asarray(v, dtype=np.float64).ravel() for v in value])
    return np.asarray(value, dtype=np.float64).ravel()


@dataclass
class DisplacementErrorMap:
    """|q_ref - q_pred|，形状 (步数, N-1)"""
    errors: np.ndarray

    @property
    def max(self) -> float:
        return float(np.max(self.errors)) if self.errors.size else 0.0

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors)) if self.errors.size else 0.0

    def to_dict(self) -> dict:
        return {"shape": list(self.errors.shape), "max": self.max, "mean": self.mean}


def displacement_error_map(reference_q, predicted_q) -> DisplacementErrorMap:
    reference_q = np.asarray(reference_q, dtype=np.float64)
    predicted_q = np.asarray(predicted_q, dtype=np.float64)
    if reference_q.shape != predicted_q.shape:
        raise ValueError(f"位移形状不符: {reference_q.shape} vs {predicted_q.shape}")
    return DisplacementErrorMap(errors=np.abs(reference_q - predicted_q))


def parameter_errors(model, truth: PhysicalParams, quartic_amplitude: Optional[float] = None) -> dict[str, float]:
    """学习参数相对真值的相对绝对误差"""
    return parameter_report(model, truth, quartic_amplitude=quartic_amplitude).errors
