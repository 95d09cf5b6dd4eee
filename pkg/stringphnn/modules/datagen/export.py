"""数值导出"""

from pathlib import Path

import numpy as np

from stringphnn.modules.datagen.trajectory import Trajectory


def export_node_csv(trajectory: Trajectory, node: int, path: Path) -> Path:
    """导出单个节点的 q、p 时间序列与激励信号"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dt = trajectory.meta.time.dt
    steps = np.arange(trajectory.step_count)
    table = np.column_stack([
        steps,
        steps * dt,
        trajectory.observation(node, "q"),
        trajectory.observation(node, "p"),
        trajectory.f,
    ])
    np.savetxt(path, table, delimiter=",", header="step,time,q,p,f", comments="",
               fmt=["%d", "%.9e", "%.9e", "%.9e", "%.9e"])
    return path


def export_matrix_csv(matrix: np.ndarray, path: Path, header: str = "") -> Path:
    """导出二维矩阵（行 = 时间步，列 = 节点）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.asarray(matrix), delimiter=",", header=header, comments="", fmt="%.9e")
    return path
