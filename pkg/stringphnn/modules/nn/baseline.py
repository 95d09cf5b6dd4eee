"""黑盒基线网络：直接逼近离散流 (q^{t-1/2}, p^t, f, s_e/N) -> (q^{t+1/2}, p^{t+1})"""

from typing import Optional

import numpy as np

from stringphnn.modules.config.schema import BaselineConfig
from stringphnn.modules.nn import functional as F
from stringphnn.modules.nn.layers import MLP, Module
from stringphnn.modules.nn.tensor import Tensor

STD_FLOOR = 1e-12


def _column(value, batch: tuple[int, ...]) -> np.ndarray:
    """标量或逐样本的量整理为 batch + (1,)"""
    value = np.asarray(value, dtype=np.float64)
    if value.size == 1:
        return np.full(batch + (1,), float(value.reshape(-1)[0]))
    return value.reshape(batch + (-1,))[..., :1]


class BaselineNet(Module):
    """输入按训练集逐特征标准化；输出乘以目标逐特征尺度，预测绝对的下一状态"""

    def __init__(self, interior: int, cfg: BaselineConfig, rng: Optional[np.random.Generator] = None):
        self.interior = interior
        self.cfg = cfg
        self.mlp = MLP(2 * interior + 2, cfg.hidden, cfg.depth, 2 * interior, cfg.negative_slope, rng)
        self.input_mean = np.zeros(2 * interior + 2)
        self.input_std = np.ones(2 * interior + 2)
        self.target_scale = np.ones(2 * interior)

    @staticmethod
    def features(q, p, force, node_fraction) -> np.ndarray:
        """拼接输入特征 (q, p, f, s_e/N)"""
        q = np.asarray(q, dtype=np.float64)
        batch = q.shape[:-1]
        columns = [_column(force, batch), _column(node_fraction, batch)]
        return np.concatenate([q, np.asarray(p, dtype=np.float64)] + columns, axis=-1)

    def fit_normalization(self, inputs: np.ndarray, targets: np.ndarray) -> None:
        """用训练集统计量设置标准化（标准差下限 1e-12）"""
        self.input_mean = inputs.mean(axis=0)
        self.input_std = np.maximum(inputs.std(axis=0), STD_FLOOR)
        self.target_scale = np.maximum(np.sqrt(np.mean(targets * targets, axis=0)), STD_FLOOR)

    def __call__(self, q, p, force, node_fraction):
        x = (self.features(q, p, force, node_fraction) - self.input_mean) / self.input_std
        out = self.mlp(x) * self.target_scale
        n = self.interior
        return F.slice_last(out, 0, n), F.slice_last(out, n, 2 * n)

    def buffers(self) -> dict[str, np.ndarray]:
        return {
            "input_mean": self.input_mean,
            "input_std": self.input_std,
            "target_scale": self.target_scale,
        }

    def load_buffers(self, buffers: dict[str, np.ndarray]) -> None:
        self.input_mean = np.asarray(buffers["input_mean"], dtype=np.float64)
        self.input_std = np.asarray(buffers["input_std"], dtype=np.float64)
        self.target_scale = np.asarray(buffers["target_scale"], dtype=np.float64)

    def parameters(self) -> dict[str, Tensor]:
        return {f"mlp.{name}": t for name, t in self.mlp.parameters().items()}

