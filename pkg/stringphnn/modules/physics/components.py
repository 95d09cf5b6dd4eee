"""真值弦组件与离散哈密顿量"""

from dataclasses import dataclass

import numpy as np

from stringphnn.modules.core.operators import d_minus, norm_h
from stringphnn.modules.core.types import GridSpec, PhysicalParams
from stringphnn.modules.physics.energy import QuarticStretchingEnergy
from stringphnn.modules.physics.string_ops import StringOperators


@dataclass(frozen=True)
class GroundTruthComponents:
    """真值参数、网格与预计算的算子系数"""

    params: PhysicalParams
    grid: GridSpec
    operators: StringOperators
    nonlinear: QuarticStretchingEnergy

    @classmethod
    def build(cls, params: PhysicalParams, grid: GridSpec) -> "GroundTruthComponents":
        operators = StringOperators.from_values(
            grid,
            params.rho,
            params.radius,
            params.tension,
            params.youngs,
            params.eta0,
            params.eta1,
        )
        stretch = params.youngs * (np.pi * params.radius * params.radius) - params.tension
        return cls(
            params=params,
            grid=grid,
            operators=operators,
            nonlinear=QuarticStretchingEnergy(stretch, grid.h),
        )

    @property
    def mass_inverse(self) -> float:
        return 1.0 / self.operators.mu


def _vector(v, c: GroundTruthComponents) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    c.operators.check_shape(v)
    return v


def hamiltonian(q, p, c: GroundTruthComponents):
    """H = ‖p‖²/(2μ) + (T/2)‖D⁻q‖² + (EI/2)‖D²q‖² + H_nl(q)"""
    q, p = _vector(q, c), _vector(p, c)
    ops = c.operators
    total = ops.kinetic(p) + ops.quadratic_potential(q) + c.nonlinear.energy(q)
    return total[..., 0]


def h_nl(q, c: GroundTruthComponents):
    """四次拉伸能（求和形式）"""
    return c.nonlinear.energy(_vector(q, c))[..., 0]


def h_nl_norm_form(q, c: GroundTruthComponents):
    """四次拉伸能（范数形式）((EA-T)/8)·‖(D⁻q)∘²‖²"""
    w = d_minus(_vector(q, c), c.grid.h)
    return c.nonlinear.coefficient * norm_h(w * w, c.grid.h) ** 2


def grad_h_nl(q, c: GroundTruthComponents) -> np.ndarray:
    """∇_q H_nl"""
    return c.nonlinear.gradient(_vector(q, c))


def stiffness_apply(q, c: GroundTruthComponents) -> np.ndarray:
    """K q"""
    return c.operators.stiffness_apply(_vector(q, c))


def dissipation_apply(p, c: GroundTruthComponents) -> np.ndarray:
    """2(η0·I - η1·D²) p"""
    return c.operators.dissipation_apply(_vector(p, c))
