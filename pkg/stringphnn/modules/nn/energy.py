"""非线性能量网络 H_θnl

z = conv_k2(q, k)，H = h·Σ_{s=1..N} f(z_s)²，f 为逐点标量映射。
输入梯度按显式图构造：∇_q H = convᵀ(2h·f(z)·f'(z))，f' 用前向模式求得，
因此整个梯度表达式记录在磁带上，训练时权重梯度可穿过它。
"""

from typing import Optional

import numpy as np

from stringphnn.modules.config.schema import EnergyNetConfig
from stringphnn.modules.nn import functional as F
from stringphnn.modules.nn.layers import MLP, Module
from stringphnn.modules.nn.tensor import Tensor


class ScalarMLP(Module):
    """1 -> hidden×depth -> 1 的逐点映射"""

    kind = "mlp"

    def __init__(self, hidden: int = 100, depth: int = 5, negative_slope: float = 0.01,
                 rng: Optional[np.random.Generator] = None):
        self.hidden = hidden
        self.depth = depth
        self.negative_slope = negative_slope
        self.mlp = MLP(1, hidden, depth, 1, negative_slope, rng)

    def value_and_derivative(self, z):
        shape = F.value(z).shape
        flat = F.reshape(z, (-1, 1))
        out, slope = self.mlp.value_and_derivative(flat)
        return F.reshape(out, shape), F.reshape(slope, shape)

    def __call__(self, z):
        shape = F.value(z).shape
        return F.reshape(self.mlp(F.reshape(z, (-1, 1))), shape)

    def config(self) -> dict:
        return {"kind": self.kind, "hidden": self.hidden, "depth": self.depth,
                "negative_slope": self.negative_slope}

    def parameters(self) -> dict[str, Tensor]:
        return self.mlp.parameters()


class SquareLawMap(Module):
    """解析映射 f(x) = √c·x²，配合 k = [1/h, -1/h] 时 H 等于四次拉伸能"""

    kind = "square_law"

    def __init__(self, coefficient: float):
        self.scale = Tensor(np.array([np.sqrt(coefficient)]), requires_grad=True, name="scale")

    def value_and_derivative(self, z):
        return self.scale * z * z, 2.0 * self.scale * z

    def __call__(self, z):
        return self.scale * z * z

    def config(self) -> dict:
        return {"kind": self.kind}

    def parameters(self) -> dict[str, Tensor]:
        return {"scale": self.scale}


class EnergyNetwork(Module):
    """卷积（核大小 2）-> 标量映射 -> 平方 -> 加权求和"""

    def __init__(self, kernel, scalar_map, h: float):
        self.kernel = kernel if isinstance(kernel, Tensor) else Tensor(kernel, requires_grad=True, name="kernel")
        self.scalar_map = scalar_map
        self.h = h

    @classmethod
    def create(cls, h: float, cfg: EnergyNetConfig, rng: np.random.Generator) -> "EnergyNetwork":
        """核初始化为 [1/h, -1/h]·(1 + σ·N(0,1))，MLP 权重 U(±1/√fan_in)、偏置为零"""
        noise = 1.0 + cfg.kernel_noise * rng.standard_normal(2)
        kernel = np.array([1.0 / h, -1.0 / h]) * noise
        scalar_map = ScalarMLP(cfg.hidden, cfg.depth, cfg.negative_slope, rng)
        return cls(kernel, scalar_map, h)

    @classmethod
    def analytic(cls, h: float, coefficient: float) -> "EnergyNetwork":
        """k = [1/h, -1/h]、f(x) = √c·x² 的解析网络"""
        return cls(np.array([1.0 / h, -1.0 / h]), SquareLawMap(coefficient), h)

    def energy(self, q):
        z = F.conv_k2(q, self.kernel)
        a = self.scalar_map(z)
        return self.h * F.sum(a * a, axis=-1, keepdims=True)

    def energy_and_gradient(self, q):
        z = F.conv_k2(q, self.kernel)
        a, da = self.scalar_map.value_and_derivative(z)
        energy = self.h * F.sum(a * a, axis=-1, keepdims=True)
        grad = F.conv_k2_transpose((2.0 * self.h) * a * da, self.kernel)
        return energy, grad

    def gradient(self, q):
        return self.energy_and_gradient(q)[1]

    def config(self) -> dict:
        return {"h": self.h, "map": self.scalar_map.config()}

    def parameters(self) -> dict[str, Tensor]:
        params = {"kernel": self.kernel}
        for name, tensor in self.scalar_map.parameters().items():
            params[f"map.{name}"] = tensor
        return params


def energy_forward(net: EnergyNetwork, q):
    """H_θnl(q)"""
    return net.energy(q)


def energy_grad_q(net: EnergyNetwork, q):
    """∇_q H_θnl(q)"""
    return net.gradient(q)


def build_energy_network(config: dict, h: float) -> EnergyNetwork:
    """按 config() 的描述重建结构（参数随后由检查点加载）"""
    spec = config["map"]
    if spec["kind"] == SquareLawMap.kind:
        return EnergyNetwork(np.zeros(2), SquareLawMap(0.0), h)
    if spec["kind"] == ScalarMLP.kind:
        scalar_map = ScalarMLP(spec["hidden"], spec["depth"], spec["negative_slope"], rng=None)
        return EnergyNetwork(np.zeros(2), scalar_map, h)
    raise ValueError(f"未知的标量映射类型: {spec['kind']}")
