"""一步训练样本：输入 y^t = (q^{t-1/2}, p^t), f^{t+1/2}, s_e，目标 y^{t+1}"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from stringphnn.modules.core.types import GridSpec
from stringphnn.modules.datagen.trajectory import Trajectory


@dataclass
class PairBatch:
    """一批一步样本；psi 仅在轨迹带有内存 ψ 时给出"""
    q: np.ndarray
    p: np.ndarray
    f: np.ndarray
    node: np.ndarray
    target_q: np.ndarray
    target_p: np.ndarray
    psi: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.q.shape[0]

    def input_vectors(self, grid: GridSpec) -> np.ndarray:
        """逐样本 G_p = e_{s_e}/h"""
        g_p = np.zeros_like(self.q)
        g_p[np.arange(len(self)), self.node - 1] = 1.0 / grid.h
        return g_p

    def node_fraction(self, n: int) -> np.ndarray:
        """归一化激励位置 s_e/N，形状 (B, 1)"""
        return (self.node.astype(np.float64) / n)[:, None]

    def baseline_inputs(self, n: int) -> np.ndarray:
        return np.concatenate([self.q, self.p, self.f, self.node_fraction(n)], axis=-1)

    def targets(self) -> np.ndarray:
        return np.concatenate([self.target_q, self.target_p], axis=-1)


def valid_step_count(trajectory: Trajectory) -> int:
    """可用样本数：t ∈ [0, S-2]"""
    return max(trajectory.step_count - 1, 0)


def collate(trajectories: Sequence[Trajectory], index: np.ndarray) -> PairBatch:
    """index 为 (k, 2) 的 (轨迹序号, t) 对"""
    index = np.asarray(index, dtype=np.int64).reshape(-1, 2)
    rows = []
    for traj_id, t in index:
        traj = trajectories[traj_id]
        if not 0 <= t <= traj.step_count - 2:
            raise IndexError(f"样本时刻 {t} 超出 [0, {traj.step_count - 2}]")
        rows.append((traj, int(t)))
    with_psi = all(traj.psi is not None for traj, _ in rows)
    return PairBatch(
        q=np.stack([traj.q[t] for traj, t in rows]),
        p=np.stack([traj.p[t] for traj, t in rows]),
        f=np.array([[traj.f[t]] for traj, t in rows]),
        node=np.array([traj.meta.node_e for traj, _ in rows], dtype=np.int64),
        target_q=np.stack([traj.q[t + 1] for traj, t in rows]),
        target_p=np.stack([traj.p[t + 1] for traj, t in rows]),
        psi=np.array([[traj.psi[t]] for traj, t in rows]) if with_psi else None,
    )


def one_step_pairs(trajectory: Trajectory, rng: np.random.Generator, count: int) -> PairBatch:
    """在单条轨迹上均匀采样 count 个一步样本"""
    limit = valid_step_count(trajectory)
    if limit == 0:
        raise ValueError("轨迹过短，无法构造一步样本")
    t = rng.integers(0, limit, size=count)
    index = np.stack([np.zeros(count, dtype=np.int64), t], axis=1)
    return collate([trajectory], index)


def all_pairs(trajectories: Sequence[Trajectory]) -> np.ndarray:
    """所有 (轨迹序号, t) 对，形状 (M, 2)"""
    blocks = [
        np.stack([np.full(valid_step_count(traj), i), np.arange(valid_step_count(traj))], axis=1)
        for i, traj in enumerate(trajectories)
    ]
    if not blocks:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(blocks).astype(np.int64)


class PairSampler:
    """按轮次重排的批采样器：每轮打乱全部 (轨迹, t) 对"""

    def __init__(self, trajectories: Sequence[Trajectory], batch_size: int, rng: np.random.Generator):
        self.trajectories = list(trajectories)
        self.batch_size = batch_size
        self.rng = rng
        self.index = all_pairs(self.trajectories)
        if len(self.index) == 0:
            raise ValueError("训练集中没有可用样本")
        self.epoch = 0
        self._order = np.empty(0, dtype=np.int64)
        self._cursor = 0

    def _reshuffle(self) -> None:
        self._order = self.rng.permutation(len(self.index))
        self._cursor = 0
        self.epoch += 1

    def next_batch(self) -> PairBatch:
        if self._cursor >= len(self._order):
            self._reshuffle()
        take = self._order[self._cursor:self._cursor + self.batch_size]
        self._cursor += len(take)
        return collate(self.trajectories, self.index[take])
