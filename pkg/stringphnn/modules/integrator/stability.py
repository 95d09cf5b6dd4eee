"""稳定性检查"""

import numpy as np
from loguru import logger

from stringphnn.modules.core.errors import InstabilityError
from stringphnn.modules.core.types import SavConfig
from stringphnn.modules.physics.components import GroundTruthComponents
from stringphnn.modules.physics.string_ops import StringOperators


def max_eigenvalue(ops: StringOperators, tol: float = 1e-12, max_iter: int = 5000) -> float:
    """幂迭代估计 (1/(hμ))·K 的最大特征值，初始向量 (-1)^s"""
    n = ops.n - 1
    v = (-1.0) ** np.arange(1, n + 1)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(max_iter):
        w = ops.stiffness_apply(v) / (ops.h * ops.mu)
        rayleigh = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(rayleigh - estimate) <= tol * abs(rayleigh):
            return rayleigh
        estimate = rayleigh
    return estimate


def stability_check(c: GroundTruthComponents, cfg: SavConfig, safety: float = 0.9, strict: bool = False) -> float:
    """返回最大稳定步长 safety·2/√λ_max（蛙跳界 dt²·λ_max < 4）

    strict 为 True 且 cfg.dt 超出界限时抛出 InstabilityError。
    """
    return operator_stability(c.operators, cfg.dt, safety=safety, strict=strict)


def operator_stability(ops: StringOperators, dt: float, safety: float = 0.9, strict: bool = False) -> float:
    """同 stability_check，直接作用于弦算子（可训练模型的当前参数）"""
    lam = max_eigenvalue(ops)
    dt_max = float("inf") if lam <= 0 else safety * 2.0 / np.sqrt(lam)
    ratio = dt**2 * lam
    logger.debug(f"稳定性检查: λ_max={lam:.6g}, dt²·λ_max={ratio:.4f}, dt_max={dt_max:.6g}s")
    if strict and dt > dt_max:
        raise InstabilityError(
            f"时间步长 {dt:.6g}s 超过稳定界 {dt_max:.6g}s (dt²·λ_max={ratio:.3f})",
            step_index=0,
            provenance={"lambda_max": lam, "dt_max": dt_max},
        )
    return dt_max
