"""Adam 优化器"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from stringphnn.modules.nn.tensor import Tensor


@dataclass
class AdamState:
    """一阶、二阶矩与步数"""
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """带偏差修正的 Adam：α_t = lr·√(1-β2^t)/(1-β1^t)，θ -= α_t·m/(√v + ε)"""
    t = state.step + 1
    step_size = lr * np.sqrt(1.0 - beta2**t) / (1.0 - beta1**t)
    new_params: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    for name, value in params.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(value)
        m = state.m.get(name, np.zeros_like(value))
        v = state.v.get(name, np.zeros_like(value))
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        new_params[name] = value - step_size * m / (np.sqrt(v) + eps)
        new_m[name] = m
        new_v[name] = v
    return new_params, AdamState(m=new_m, v=new_v, step=t)


class Adam:
    """作用于命名 Tensor 参数的 Adam"""

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        state: Optional[AdamState] = None,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = state or AdamState()

    def step(self) -> None:
        values = {name: t.data for name, t in self.params.items()}
        grads = {name: t.grad for name, t in self.params.items() if t.grad is not None}
        updated, self.state = adam_step(values, grads, self.state, self.lr, self.beta1, self.beta2, self.eps)
        for name, tensor in self.params.items():
            tensor.data = updated[name]

    def zero_grad(self) -> None:
        for tensor in self.params.values():
            tensor.zero_grad()

    def hyperparameters(self) -> dict:
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}


def global_grad_norm(params: dict[str, Tensor]) -> float:
    total = 0.0
    for tensor in params.values():
        if tensor.grad is not None:
            total += float(np.sum(tensor.grad * tensor.grad))
    return float(np.sqrt(total))


def clip_grad_norm(params: dict[str, Tensor], max_norm: float) -> float:
    """按全局范数裁剪梯度，返回裁剪前的范数"""
    norm = global_grad_norm(params)
    if norm > max_norm and norm > 0:
        scale = max_norm / norm
        for tensor in params.values():
            if tensor.grad is not None:
                tensor.grad = tensor.grad * scale
    return norm
