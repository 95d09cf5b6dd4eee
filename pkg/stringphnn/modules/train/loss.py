"""训练损失"""

import numpy as np

from stringphnn.modules.nn import functional as F


def train_loss(predicted, target, dt: float):
    """mean(|y' - y|) / dt，y 为 (q, p) 拼接后的全部元素

    predicted、target 均为 (q, p) 二元组；predicted 可为 Tensor。
    """
    pred_q, pred_p = predicted
    target_q, target_p = target
    if F.value(pred_q).shape != np.shape(target_q) or F.value(pred_p).shape != np.shape(target_p):
        raise ValueError(
            f"预测与目标形状不符: q {F.value(pred_q).shape} vs {np.shape(target_q)}, "
            f"p {F.value(pred_p).shape} vs {np.shape(target_p)}"
        )
    diff = F.concat([pred_q - target_q, pred_p - target_p], axis=-1)
    return F.mean(F.abs(diff)) / dt


def absolute_error_sum(predicted, target) -> tuple[float, int]:
    """|y' - y| 之和与元素个数，供分块验证累加"""
    diff = np.concatenate(
        [F.value(predicted[0]) - target[0], F.value(predicted[1]) - target[1]], axis=-1
    )
    return float(np.sum(np.abs(diff))), int(diff.size)
