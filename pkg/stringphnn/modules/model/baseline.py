"""黑盒基线模型"""

from typing import Any

import numpy as np

from stringphnn.modules.config.schema import ExperimentDocument
from stringphnn.modules.core.errors import InstabilityError
from stringphnn.modules.core.types import GridSpec
from stringphnn.modules.datagen.pairs import PairBatch
from stringphnn.modules.nn import functional as F
from stringphnn.modules.nn.baseline import BaselineNet
from stringphnn.modules.nn.tensor import Tensor


class BaselineModel:
    """MLP 直接逼近离散流，无辅助变量"""

    kind = "baseline"

    def __init__(self, net: BaselineNet, grid: GridSpec):
        self.net = net
        self.grid = grid

    @classmethod
    def create(cls, document: ExperimentDocument, seed: int) -> "BaselineModel":
        rng = np.random.default_rng(seed)
        return cls(BaselineNet(document.grid.n - 1, document.baseline, rng), document.grid)

    def fit_normalization(self, batch: PairBatch) -> None:
        self.net.fit_normalization(batch.baseline_inputs(self.grid.n), batch.targets())

    def parameters(self) -> dict[str, Tensor]:
        return {f"net.{k}": v for k, v in self.net.parameters().items()}

    def buffers(self) -> dict[str, np.ndarray]:
        return self.net.buffers()

    def zero_grad(self) -> None:
        self.net.zero_grad()

    def forward(self, batch: PairBatch):
        return self.net(batch.q, batch.p, batch.f, batch.node_fraction(self.grid.n))

    def simulate(self, q0, p0, forces, node_e: int, psi0=None):
        """递推生成整条轨迹，返回 (q, p, None)"""
        forces = np.asarray(forces, dtype=np.float64)
        steps = forces.shape[0]
        n = self.grid.n - 1
        fraction = node_e / self.grid.n
        q_rec, p_rec = np.empty((steps, n)), np.empty((steps, n))
        q = np.array(q0, dtype=np.float64)
        p = np.array(p0, dtype=np.float64)
        for t in range(steps):
            q_rec[t], p_rec[t] = q, p
            if t == steps - 1:
                break
            q_next, p_next = baseline_step(self.net, q, p, forces[t], node_e, self.grid.n)
            q, p = F.value(q_next), F.value(p_next)
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
                raise InstabilityError("基线递推出现非有限值", step_index=t + 1,
                                       provenance={"node_fraction": fraction})
        return q_rec, p_rec, None

    def config(self) -> dict[str, Any]:
        return {
            "grid": self.grid.model_dump(mode="json"),
            "baseline": self.net.cfg.model_dump(mode="json"),
        }


def baseline_step(net: BaselineNet, q_half, p_int, f_half, s_e: int, n: int):
    """单次 MLP 前向，输出下一交错状态 (q^{t+1/2}, p^{t+1})"""
    return net(q_half, p_int, f_half, s_e / n)
