"""递推评估：模型以自身输出为下一步输入，激励始终取自记录"""

import time as _time

import numpy as np
from loguru import logger

from stringphnn.modules.datagen.trajectory import Trajectory, TrajectoryMeta


def recursive_rollout(model, trajectory: Trajectory) -> Trajectory:
    """从参考轨迹的初始状态出发递推整条轨迹；ψ⁰ 按定义由初始状态计算"""
    started = _time.perf_counter()
    q, p, psi = model.simulate(trajectory.q[0], trajectory.p[0], trajectory.f, trajectory.meta.node_e)
    ref = trajectory.meta
    meta = TrajectoryMeta(
        params=ref.params,
        grid=ref.grid,
        time=ref.time,
        node_e=ref.node_e,
        excitation=ref.excitation,
        sav=dict(ref.sav),
        seed=ref.seed,
        split=ref.split,
        source=f"prediction:{model.kind}",
    )
    logger.debug(f"{model.kind} 递推完成: {trajectory.step_count} 步, 用时 {_time.perf_counter() - started:.2f}s")
    return Trajectory(meta=meta, q=q, p=p, f=np.array(trajectory.f, copy=True), psi=psi)
