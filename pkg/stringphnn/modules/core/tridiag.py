"""常系数对称三对角系统的分解与求解"""

from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from stringphnn.modules.core.errors import ConfigurationError


class TridiagonalFactor:
    """A = diag·I + off·(S + Sᵀ) 的 LU 分解

    构造时分解一次，solve 支持形状 (..., n) 的右端项。
    """

    def __init__(self, diag: float, off: float, n: int):
        if n < 1:
            raise ConfigurationError(f"三对角系统维数非法: n={n}")
        self.diag = float(diag)
        self.off = float(off)
        self.n = int(n)
        self.matrix = sp.diags(
            [np.full(n - 1, self.off), np.full(n, self.diag), np.full(n - 1, self.off)],
            [-1, 0, 1],
            shape=(n, n),
            format="csc",
        )
        self._lu = splu(self.matrix)

    def solve(self, rhs) -> np.ndarray:
        """求解 A x = rhs（沿最后一维）"""
        rhs = np.asarray(rhs, dtype=np.float64)
        if rhs.shape[-1] != self.n:
            raise ConfigurationError(f"右端项长度 {rhs.shape[-1]} 与系统维数 {self.n} 不符")
        columns = np.ascontiguousarray(rhs.reshape(-1, self.n).T)
        x = self._lu.solve(columns)
        return np.ascontiguousarray(x.T).reshape(rhs.shape)

    def matvec(self, x) -> np.ndarray:
        """计算 A x（不经过稀疏矩阵，按模板）"""
        x = np.asarray(x, dtype=np.float64)
        out = self.diag * x
        out[..., 1:] += self.off * x[..., :-1]
        out[..., :-1] += self.off * x[..., 1:]
        return out

    def residual_norm(self, x, rhs) -> float:
        """‖A x - rhs‖ / ‖rhs‖"""
        rhs = np.asarray(rhs, dtype=np.float64)
        denom = np.linalg.norm(rhs)
        if denom == 0.0:
            return float(np.linalg.norm(self.matvec(x)))
        return float(np.linalg.norm(self.matvec(x) - rhs) / denom)


@lru_cache(maxsize=64)
def factorize(diag: float, off: float, n: int) -> TridiagonalFactor:
    """按系数缓存分解结果，参数不变时只分解一次"""
    return TridiagonalFactor(diag, off, n)
