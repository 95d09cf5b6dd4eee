"""线性模态参考：离散模态频率与理想弦基频"""

import math
from typing import Optional

import numpy as np

from stringphnn.modules.core.operators import sine_mode
from stringphnn.modules.core.types import GridSpec, PhysicalParams


def ideal_fundamental(params: PhysicalParams, l0: float) -> float:
    """理想弦基频 (1/2l0)·√(T/μ)"""
    return math.sqrt(params.tension / params.mu) / (2.0 * l0)


def modal_frequencies(
    params: PhysicalParams,
    grid: GridSpec,
    count: int,
    dt: Optional[float] = None,
) -> np.ndarray:
    """刚性弦前 count 个离散模态频率 (Hz)

    ω_k² = (T·a_k + EI·a_k²)/μ，a_k = (4/h²)·sin²(πk/2N)；
    给定 dt 时换算为交错蛙跳格式的数值频率 (2/dt)·asin(ω·dt/2)。
    """
    count = min(count, grid.n - 1)
    k = np.arange(1, count + 1)
    a = (4.0 / grid.h**2) * np.sin(np.pi * k / (2 * grid.n)) ** 2
    omega = np.sqrt((params.tension * a + params.ei * a * a) / params.mu)
    if dt is not None:
        omega = (2.0 / dt) * np.arcsin(np.minimum(omega * dt / 2.0, 1.0))
    return omega / (2.0 * np.pi)


def mode_shape(k: int, grid: GridSpec) -> np.ndarray:
    """第 k 阶模态形状"""
    return sine_mode(k, grid.n)
