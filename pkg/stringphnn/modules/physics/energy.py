"""非二次能量 H_nl 的解析实现

能量对象协议: energy(q)、gradient(q)、energy_and_gradient(q)，
能量保留最后一维（形状 (..., 1)），梯度与 q 同形。
"""

import numpy as np

from stringphnn.modules.nn import functional as F


class QuarticStretchingEnergy:
    """几何非线性拉伸能 H_nl = h·Σ_{s=1..N} ((EA-T)/8)·(D⁻q)_s⁴"""

    def __init__(self, stretch, h: float):
        # stretch = EA - T
        self.stretch = stretch
        self.h = h

    @property
    def coefficient(self):
        return self.stretch / 8.0

    def energy(self, q):
        w = F.d_minus(q, self.h)
        w2 = w * w
        return self.h * self.coefficient * F.sum(w2 * w2, axis=-1, keepdims=True)

    def gradient(self, q):
        """∇H_nl = -h·(EA-T)/2·D⁺(D⁻q)³"""
        w = F.d_minus(q, self.h)
        return -(self.h * self.stretch / 2.0) * F.d_plus(w * w * w, self.h)

    def energy_and_gradient(self, q):
        w = F.d_minus(q, self.h)
        w2 = w * w
        energy = self.h * self.coefficient * F.sum(w2 * w2, axis=-1, keepdims=True)
        grad = -(self.h * self.stretch / 2.0) * F.d_plus(w2 * w, self.h)
        return energy, grad


class ZeroEnergy:
    """H_nl ≡ 0（线性弦）"""

    def energy(self, q):
        q = F.value(q)
        return np.zeros(q.shape[:-1] + (1,))

    def gradient(self, q):
        return np.zeros_like(F.value(q))

    def energy_and_gradient(self, q):
        return self.energy(q), self.gradient(q)
