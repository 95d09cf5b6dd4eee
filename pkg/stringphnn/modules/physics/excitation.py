"""拨弦激励信号与输入向量"""

import numpy as np

from stringphnn.modules.core.types import ExcitationSpec, GridSpec, TimeSpec


def excitation_force(t, e: ExcitationSpec):
    """f_e(t) = (f_amp/2)·(1 - cos(πt/T_e))，t ∈ [0, T_e]；窗外为 0

    在 t = T_e 处取 f_amp，之后立即为 0。
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("激励时间不能为负")
    inside = t <= e.t_e
    force = np.where(inside, 0.5 * e.f_amp * (1.0 - np.cos(np.pi * t / e.t_e)), 0.0)
    return float(force) if force.ndim == 0 else force


def excitation_signal(e: ExcitationSpec, time: TimeSpec) -> np.ndarray:
    """半整数时刻 t = (n + 1/2)·dt 的采样序列 f^{n+1/2}，长度 step_count"""
    t = (np.arange(time.step_count) + 0.5) * time.dt
    return excitation_force(t, e)


def input_vector(e: ExcitationSpec, grid: GridSpec) -> np.ndarray:
    """G_p = e_{s_e}/h（激励节点处的离散 Dirac）"""
    e.check_grid(grid)
    return node_input_vector(e.node_e, grid)


def node_input_vector(node: int, grid: GridSpec) -> np.ndarray:
    g_p = np.zeros(grid.n - 1)
    g_p[node - 1] = 1.0 / grid.h
    return g_p
