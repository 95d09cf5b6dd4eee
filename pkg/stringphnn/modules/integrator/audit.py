"""能量平衡审计"""

from typing import Optional

import numpy as np

from stringphnn.modules.core.types import SavConfig
from stringphnn.modules.datagen.trajectory import Trajectory
from stringphnn.modules.integrator.sav import auxiliary_before_drift
from stringphnn.modules.integrator.types import EnergyAuditReport, EnergyFunction
from stringphnn.modules.physics.components import GroundTruthComponents


def stored_energy(q, p, psi, c: GroundTruthComponents, cfg: SavConfig) -> np.ndarray:
    """离散储能 E^t = (h/2μ)‖p^t‖² + 交错二次势能 + ((ψ^t)² - c0)/2"""
    ops = c.operators
    q_next = q + (cfg.dt / ops.mu) * p
    energy = ops.kinetic(p) + ops.cross_potential(q, q_next)
    return energy[..., 0] + 0.5 * (psi * psi - cfg.c0)


def energy_audit(
    trajectory: Trajectory,
    c: GroundTruthComponents,
    cfg: SavConfig,
    energy: Optional[EnergyFunction] = None,
) -> EnergyAuditReport:
    """逐步核算 ΔE = -耗散 + 注入 + 漂移修正，残差为两边之差"""
    if trajectory.psi is None:
        raise ValueError("能量审计需要内存中的 ψ 序列（文件中不保存 ψ）")
    energy = energy if energy is not None else c.nonlinear
    ops = c.operators
    dt = cfg.dt
    q, p, f, psi = trajectory.q, trajectory.p, trajectory.f, trajectory.psi

    stored = stored_energy(q, p, psi, c, cfg)
    p0, p1 = p[:-1], p[1:]
    p_mean = 0.5 * (p0 + p1)
    dissipated = (2.0 * ops.h * dt / ops.mu) * np.sum(p_mean * ops.damping_apply(p_mean), axis=-1)
    injected = (dt / ops.mu) * f[:-1] * p_mean[:, trajectory.meta.node_e - 1]

    psi_star = auxiliary_before_drift(q[1:], p0, p1, psi[:-1, None], energy, ops, cfg)[:, 0]
    drift = 0.5 * (psi[1:] ** 2 - psi_star**2)

    residual = np.diff(stored) + dissipated - injected - drift
    return EnergyAuditReport(
        stored=stored,
        dissipated=dissipated,
        injected=injected,
        drift=drift,
        residual=residual,
    )
