"""对数空间的可学习物理参数"""

from typing import Optional

import numpy as np

from stringphnn.modules.core.types import GridSpec, PhysicalParams
from stringphnn.modules.nn import functional as F
from stringphnn.modules.nn.layers import Module
from stringphnn.modules.nn.tensor import Tensor
from stringphnn.modules.physics.string_ops import StringOperators

PARAMETER_NAMES = ("rho", "radius", "tension", "youngs", "eta0", "eta1")


class LearnablePhysical(Module):
    """φ = log θ，对外暴露 θ = exp(φ) > 0"""

    def __init__(self, values: dict[str, float]):
        self.log: dict[str, Tensor] = {}
        for name in PARAMETER_NAMES:
            value = float(values[name])
            if not value > 0:
                raise ValueError(f"可学习参数 {name} 必须为正: {value}")
            self.log[name] = Tensor(np.log(value), requires_grad=True, name=f"log_{name}")

    @classmethod
    def from_params(
        cls,
        params: PhysicalParams,
        spread: float = 0.0,
        rng: Optional[np.random.Generator] = None,
    ) -> "LearnablePhysical":
        """θ_init = θ_truth·exp(U(-spread, spread))"""
        truth = {name: getattr(params, name) for name in PARAMETER_NAMES}
        if spread > 0:
            if rng is None:
                raise ValueError("随机初始化需要 rng")
            factors = np.exp(rng.uniform(-spread, spread, size=len(PARAMETER_NAMES)))
            truth = {name: truth[name] * float(f) for name, f in zip(PARAMETER_NAMES, factors)}
        return cls(truth)

    def exposed(self) -> dict[str, Tensor]:
        return {name: F.exp(phi) for name, phi in self.log.items()}

    def values(self) -> dict[str, float]:
        return {name: float(np.exp(phi.data)) for name, phi in self.log.items()}

    def to_params(self) -> PhysicalParams:
        return PhysicalParams(**self.values())

    def operators(self, grid: GridSpec, detached: bool = False) -> StringOperators:
        """由暴露的 θ 构造弦算子；detached 时使用 float 系数"""
        theta = self.values() if detached else self.exposed()
        return StringOperators.from_values(
            grid,
            theta["rho"],
            theta["radius"],
            theta["tension"],
            theta["youngs"],
            theta["eta0"],
            theta["eta1"],
        )

    def parameters(self) -> dict[str, Tensor]:
        return {f"log_{name}": phi for name, phi in self.log.items()}
