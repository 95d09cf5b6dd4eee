"""递推仿真"""

import time as _time
from typing import Optional

import numpy as np
from loguru import logger

from stringphnn.modules.core.errors import ConfigurationError, InstabilityError
from stringphnn.modules.core.types import ExcitationSpec, SavConfig, TimeSpec
from stringphnn.modules.datagen.trajectory import Trajectory, TrajectoryMeta
from stringphnn.modules.integrator.sav import advance, initial_psi
from stringphnn.modules.integrator.types import EnergyFunction, StaggeredState
from stringphnn.modules.physics.components import GroundTruthComponents
from stringphnn.modules.physics.excitation import node_input_vector


def rollout(
    initial: StaggeredState,
    forces: np.ndarray,
    node_e: int,
    c: GroundTruthComponents,
    cfg: SavConfig,
    energy: Optional[EnergyFunction] = None,
    excitation: Optional[ExcitationSpec] = None,
    provenance: Optional[dict] = None,
) -> Trajectory:
    """从初始状态递推 len(forces) 条记录

    第 t 条记录为步 t 的输入 (q^{t-1/2}, p^t, f^{t+1/2})，同时保存 ψ^t。
    initial.psi 为 NaN 时按定义 √(2H_nl(q̄⁰) + c0) 初始化。
    """
    energy = energy if energy is not None else c.nonlinear
    ops = c.operators
    forces = np.asarray(forces, dtype=np.float64)
    steps = forces.shape[0]
    if steps < 1:
        raise ConfigurationError("激励序列为空")
    if not 1 <= node_e <= c.grid.n - 1:
        raise ConfigurationError(f"激励节点 {node_e} 不在内点范围 [1, {c.grid.n - 1}]")
    ops.check_shape(initial.q_half)
    ops.check_shape(initial.p_int)

    n = c.grid.n - 1
    g_p = node_input_vector(node_e, c.grid)
    q_rec = np.empty((steps, n))
    p_rec = np.empty((steps, n))
    psi_rec = np.empty(steps)

    q = np.array(initial.q_half, dtype=np.float64)
    p = np.array(initial.p_int, dtype=np.float64)
    if np.isnan(initial.psi):
        psi = initial_psi(q, p, energy, ops, cfg)
    else:
        psi = np.array([initial.psi], dtype=np.float64)

    started = _time.perf_counter()
    for t in range(steps):
        q_rec[t] = q
        p_rec[t] = p
        psi_rec[t] = psi[0]
        if t == steps - 1:
            break
        q, p, psi = advance(q, p, psi, forces[t], g_p, energy, ops, cfg)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q)) and np.isfinite(psi[0])):
            raise InstabilityError(
                "仿真出现非有限值",
                step_index=initial.step_index + t + 1,
                provenance=dict(provenance or {}, node_e=node_e),
            )

    logger.debug(f"仿真完成: {steps} 条记录, N={c.grid.n}, 用时 {_time.perf_counter() - started:.2f}s")
    meta = TrajectoryMeta(
        params=c.params,
        grid=c.grid,
        time=TimeSpec(fs=1.0 / cfg.dt, ts=steps * cfg.dt),
        node_e=node_e,
        excitation=excitation,
        sav={"c0": cfg.c0, "lambda_dr": cfg.lambda_dr},
    )
    return Trajectory(meta=meta, q=q_rec, p=p_rec, f=forces.copy(), psi=psi_rec)


def zero_state(c: GroundTruthComponents) -> StaggeredState:
    """零初始条件，ψ 按定义初始化"""
    n = c.grid.n - 1
    return StaggeredState(q_half=np.zeros(n), p_int=np.zeros(n), psi=float("nan"))
