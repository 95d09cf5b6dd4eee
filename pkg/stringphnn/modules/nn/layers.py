"""全连接层与 MLP"""

from typing import Optional

import numpy as np

from stringphnn.modules.nn import functional as F
from stringphnn.modules.nn.tensor import Tensor


class Module:
    """带命名参数的模块基类"""

    def parameters(self) -> dict[str, Tensor]:
        raise NotImplementedError

    def zero_grad(self) -> None:
        for tensor in self.parameters().values():
            tensor.zero_grad()

    def parameter_count(self) -> int:
        return int(sum(t.size for t in self.parameters().values()))

    def load_parameters(self, values: dict[str, np.ndarray]) -> None:
        """按名称覆盖参数值（形状必须一致）"""
        params = self.parameters()
        missing = set(params) - set(values)
        if missing:
            raise KeyError(f"缺少参数: {sorted(missing)}")
        for name, tensor in params.items():
            data = np.asarray(values[name], dtype=np.float64)
            if data.shape != tensor.shape:
                raise ValueError(f"参数 {name} 形状不符: {data.shape} != {tensor.shape}")
            tensor.data = data.copy()


class Linear(Module):
    """y = x @ W + b，权重 U(±1/√fan_in)，偏置为零"""

    def __init__(self, fan_in: int, fan_out: int, rng: Optional[np.random.Generator] = None):
        bound = 1.0 / np.sqrt(fan_in)
        if rng is None:
            weight = np.zeros((fan_in, fan_out))
        else:
            weight = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        self.weight = Tensor(weight, requires_grad=True, name="weight")
        self.bias = Tensor(np.zeros(fan_out), requires_grad=True, name="bias")

    def __call__(self, x):
        return F.matmul(x, self.weight) + self.bias

    def parameters(self) -> dict[str, Tensor]:
        return {"weight": self.weight, "bias": self.bias}


class MLP(Module):
    """LeakyReLU 全连接网络：in -> hidden×depth -> out"""

    def __init__(
        self,
        fan_in: int,
        hidden: int,
        depth: int,
        fan_out: int,
        negative_slope: float = 0.01,
        rng: Optional[np.random.Generator] = None,
    ):
        sizes = [fan_in] + [hidden] * depth + [fan_out]
        self.layers = [Linear(a, b, rng) for a, b in zip(sizes[:-1], sizes[1:])]
        self.negative_slope = negative_slope

    def __call__(self, x):
        for layer in self.layers[:-1]:
            x = F.leaky_relu(layer(x), self.negative_slope)
        return self.layers[-1](x)

    def value_and_derivative(self, x):
        """标量输入的前向模式导数：返回 (f(x), f'(x))，x 形状 (M, 1)

        LeakyReLU 的掩码视为常量，二阶导数几乎处处为零。
        """
        dx = np.ones_like(F.value(x))
        for layer in self.layers[:-1]:
            u = layer(x)
            du = F.matmul(dx, layer.weight)
            slope = F.leaky_relu_slope(u, self.negative_slope)
            x = F.leaky_relu(u, self.negative_slope)
            dx = du * slope
        last = self.layers[-1]
        return last(x), F.matmul(dx, last.weight)

    def parameters(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for i, layer in enumerate(self.layers):
            for name, tensor in layer.parameters().items():
                params[f"layers.{i}.{name}"] = tensor
        return params
