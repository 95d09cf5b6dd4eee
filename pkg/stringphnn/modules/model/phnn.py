"""StringPHNN：学习的哈密顿量与耗散，由 SAV 积分器推进"""

from typing import Any, Optional

import numpy as np

from stringphnn.modules.config.schema import ExperimentDocument
from stringphnn.modules.core.errors import InstabilityError
from stringphnn.modules.core.types import GridSpec, PhysicalParams, SavConfig
from stringphnn.modules.datagen.pairs import PairBatch
from stringphnn.modules.integrator.sav import advance, initial_psi
from stringphnn.modules.integrator.types import EnergyFunction
from stringphnn.modules.model.learnable import LearnablePhysical
from stringphnn.modules.nn import functional as F
from stringphnn.modules.nn.energy import EnergyNetwork
from stringphnn.modules.nn.tensor import Tensor
from stringphnn.modules.physics.excitation import node_input_vector
from stringphnn.modules.physics.string_ops import StringOperators


class StringPHNN:
    """H_θ = ‖p‖²/(2ρπR²) + (T/2)‖D⁻q‖² + (EπR⁴/8)‖D²q‖² + H_θnl(q)"""

    kind = "phnn"

    def __init__(self, physical: LearnablePhysical, energy: EnergyFunction, grid: GridSpec, sav: SavConfig):
        self.physical = physical
        self.energy = energy
        self.grid = grid
        self.sav = sav

    @classmethod
    def create(cls, document: ExperimentDocument, seed: int, attempt: int = 0) -> "StringPHNN":
        """按种子随机初始化：θ = truth·exp(U(-a, a))，能量网络见 EnergyNetwork.create

        attempt > 0 时使用 (seed, attempt) 派生的随机流重新抽样。
        """
        rng = np.random.default_rng(seed if attempt == 0 else [seed, attempt])
        physical = LearnablePhysical.from_params(document.string, document.train.init_spread, rng)
        energy = EnergyNetwork.create(document.grid.h, document.energy_net, rng)
        return cls(physical, energy, document.grid, document.sav_config())

    @classmethod
    def analytic(cls, params: PhysicalParams, grid: GridSpec, sav: SavConfig) -> "StringPHNN":
        """真值参数 + 解析能量网络（k = [1/h, -1/h]，f(x) = √((EA-T)/8)·x²）"""
        physical = LearnablePhysical.from_params(params)
        exposed = physical.to_params()
        energy = EnergyNetwork.analytic(grid.h, exposed.nonlinear_coefficient)
        return cls(physical, energy, grid, sav)

    # ------------------------------------------------------------------

    def parameters(self) -> dict[str, Tensor]:
        params = {f"physical.{k}": v for k, v in self.physical.parameters().items()}
        if hasattr(self.energy, "parameters"):
            params.update({f"energy.{k}": v for k, v in self.energy.parameters().items()})
        return params

    def zero_grad(self) -> None:
        for tensor in self.parameters().values():
            tensor.zero_grad()

    def operators(self, detached: bool = False) -> StringOperators:
        return self.physical.operators(self.grid, detached=detached)

    def initial_psi(self, q, p, ops: Optional[StringOperators] = None):
        return initial_psi(q, p, self.energy, ops or self.operators(), self.sav)

    def step(self, q, p, psi, force, g_p, ops: Optional[StringOperators] = None):
        """一步 SAV：(q^{t-1/2}, p^t, ψ^t) -> (q^{t+1/2}, p^{t+1}, ψ^{t+1})"""
        return advance(q, p, psi, force, g_p, self.energy, ops or self.operators(), self.sav)

    def forward(self, batch: PairBatch):
        """一步预测 (q^{t+1/2}, p^{t+1})；批中无 ψ 时按定义重算"""
        ops = self.operators()
        psi = batch.psi if batch.psi is not None else self.initial_psi(batch.q, batch.p, ops)
        q_next, p_next, _ = self.step(batch.q, batch.p, psi, batch.f, batch.input_vectors(self.grid), ops)
        return q_next, p_next

    def simulate(self, q0, p0, forces, node_e: int, psi0: Optional[float] = None):
        """递推生成整条轨迹（不记录磁带），返回 (q, p, psi) 数组"""
        ops = self.operators(detached=True)
        forces = np.asarray(forces, dtype=np.float64)
        steps = forces.shape[0]
        n = self.grid.n - 1
        g_p = node_input_vector(node_e, self.grid)
        q_rec, p_rec, psi_rec = np.empty((steps, n)), np.empty((steps, n)), np.empty(steps)
        q = np.array(q0, dtype=np.float64)
        p = np.array(p0, dtype=np.float64)
        if psi0 is None:
            psi = F.value(self.initial_psi(q, p, ops))
        else:
            psi = np.array([psi0], dtype=np.float64)
        for t in range(steps):
            q_rec[t], p_rec[t], psi_rec[t] = q, p, psi[0]
            if t == steps - 1:
                break
            q, p, psi = (F.value(v) for v in self.step(q, p, psi, forces[t], g_p, ops))
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p)) and np.all(np.isfinite(psi))):
                raise InstabilityError("StringPHNN 递推出现非有限值", step_index=t + 1)
        return q_rec, p_rec, psi_rec

    def config(self) -> dict[str, Any]:
        energy_config = self.energy.config() if hasattr(self.energy, "config") else {"kind": "analytic"}
        return {
            "grid": self.grid.model_dump(mode="json"),
            "sav": self.sav.model_dump(mode="json"),
            "energy": energy_config,
        }


def phnn_step(model: StringPHNN, q_half, p_int, psi, f_half, s_e: int):
    """StringPHNN 单步，在活动磁带内调用即可反向传播"""
    g_p = node_input_vector(s_e, model.grid)
    return model.step(q_half, p_int, psi, f_half, g_p)
