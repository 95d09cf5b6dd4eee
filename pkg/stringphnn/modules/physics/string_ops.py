"""弦的线性算子（刚度 K、阻尼 Dmp、动能）

系数可以是 float，也可以是 Tensor；真值仿真与 StringPHNN 共用这一条代码路径。
"""

from dataclasses import dataclass
from typing import Any

import numpy as np

from stringphnn.modules.core.errors import ConfigurationError
from stringphnn.modules.core.types import GridSpec
from stringphnn.modules.nn import functional as F

Scalar = Any  # float | Tensor


@dataclass(frozen=True)
class StringOperators:
    """离散弦算子，沿最后一维作用于长度 N-1 的内点向量"""

    h: float
    n: int
    mu: Scalar
    tension: Scalar
    ei: Scalar
    eta0: Scalar
    eta1: Scalar

    @classmethod
    def from_values(cls, grid: GridSpec, rho, radius, tension, youngs, eta0, eta1) -> "StringOperators":
        """由 θ = (ρ, R, T, E, η0, η1) 构造；A = πR², I = πR⁴/4"""
        area = np.pi * radius * radius
        inertia = area * radius * radius / 4.0
        return cls(
            h=grid.h,
            n=grid.n,
            mu=rho * area,
            tension=tension,
            ei=youngs * inertia,
            eta0=eta0,
            eta1=eta1,
        )

    def check_shape(self, v) -> None:
        size = F.value(v).shape[-1]
        if size != self.n - 1:
            raise ConfigurationError(f"状态长度 {size} 与网格内点数 {self.n - 1} 不符")

    # ------------------------------------------------------------------
    # 能量
    # ------------------------------------------------------------------

    def kinetic(self, p):
        """‖p‖²/(2μ)，保留最后一维"""
        return self.h / (2.0 * self.mu) * F.sum(p * p, axis=-1, keepdims=True)

    def quadratic_potential(self, q):
        """(T/2)‖D⁻q‖² + (EI/2)‖D²q‖²"""
        w = F.d_minus(q, self.h)
        c = F.d_plus(w, self.h)
        return (self.h / 2.0) * (
            self.tension * F.sum(w * w, axis=-1, keepdims=True)
            + self.ei * F.sum(c * c, axis=-1, keepdims=True)
        )

    def cross_potential(self, q_prev, q_next):
        """交错时间层的二次势能 (hT/2)(D⁻q₋)·(D⁻q₊) + (hEI/2)(D²q₋)·(D²q₊)"""
        wa = F.d_minus(q_prev, self.h)
        wb = F.d_minus(q_next, self.h)
        ca = F.d_plus(wa, self.h)
        cb = F.d_plus(wb, self.h)
        return (self.h / 2.0) * (
            self.tension * F.sum(wa * wb, axis=-1, keepdims=True)
            + self.ei * F.sum(ca * cb, axis=-1, keepdims=True)
        )

    # ------------------------------------------------------------------
    # 算子
    # ------------------------------------------------------------------

    def stiffness_apply(self, q):
        """K q = h(-T·I + EI·D²)D² q"""
        lap = F.d2(q, self.h)
        return self.h * (self.ei * F.d2(lap, self.h) - self.tension * lap)

    def damping_apply(self, p):
        """Dmp p = (η0·I - η1·D²) p"""
        return self.eta0 * p - self.eta1 * F.d2(p, self.h)

    def dissipation_apply(self, p):
        """2(η0·I - η1·D²) p"""
        return 2.0 * self.damping_apply(p)

    def implicit_coefficients(self, dt: float):
        """I + dt·Dmp 的对角与次对角系数"""
        inv_h2 = 1.0 / (self.h * self.h)
        diag = 1.0 + dt * self.eta0 + 2.0 * dt * self.eta1 * inv_h2
        off = -(dt * self.eta1 * inv_h2)
        return diag, off
