"""积分器类型定义"""

from dataclasses import dataclass
from typing import Any, Protocol

import numpy as np


class EnergyFunction(Protocol):
    """非二次能量 H_nl 及其梯度；能量保留最后一维"""

    def energy(self, q) -> Any: ...

    def gradient(self, q) -> Any: ...

    def energy_and_gradient(self, q) -> tuple[Any, Any]: ...


@dataclass
class StaggeredState:
    """交错状态 (q^{t-1/2}, p^t, ψ^t)"""
    q_half: np.ndarray
    p_int: np.ndarray
    psi: float
    step_index: int = 0

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.q_half))
            and np.all(np.isfinite(self.p_int))
            and np.isfinite(self.psi)
        )

    def to_dict(self) -> dict:
        return {
            "step_index": self.step_index,
            "psi": float(self.psi),
            "max_abs_q": float(np.max(np.abs(self.q_half))),
            "max_abs_p": float(np.max(np.abs(self.p_int))),
        }


@dataclass
class EnergyAuditReport:
    """逐步能量平衡报告（长度为步数 - 1 的数组）"""
    stored: np.ndarray
    dissipated: np.ndarray
    injected: np.ndarray
    drift: np.ndarray
    residual: np.ndarray

    @property
    def peak_energy(self) -> float:
        return float(np.max(np.abs(self.stored))) if self.stored.size else 0.0

    @property
    def max_relative_residual(self) -> float:
        peak = self.peak_energy
        if self.residual.size == 0:
            return 0.0
        worst = float(np.max(np.abs(self.residual)))
        return worst / peak if peak > 0 else worst

    def energy_change(self) -> np.ndarray:
        return np.diff(self.stored)

    def is_passive(self, tolerance: float = 1e-12) -> bool:
        """扣除注入功与漂移修正后储能逐步不增"""
        increase = self.energy_change() - self.injected - self.drift
        return bool(np.all(increase <= tolerance * max(self.peak_energy, 1e-300)))

    def to_dict(self) -> dict:
        return {
            "steps": int(self.residual.size),
            "initial_energy": float(self.stored[0]) if self.stored.size else 0.0,
            "final_energy": float(self.stored[-1]) if self.stored.size else 0.0,
            "peak_energy": self.peak_energy,
            "total_dissipated": float(np.sum(self.dissipated)),
            "total_injected": float(np.sum(self.injected)),
            "total_drift_correction": float(np.sum(self.drift)),
            "max_abs_residual": float(np.max(np.abs(self.residual))) if self.residual.size else 0.0,
            "max_relative_residual": self.max_relative_residual,
            "passive": self.is_passive(),
        }
