"""有限差分算子

简支边界 q_0 = q_N = 0 隐含在模板中，所有算子沿最后一维作用，支持批量输入。
"""

import numpy as np
import scipy.sparse as sp

from stringphnn.modules.core.errors import ConfigurationError


def _as_array(v) -> np.ndarray:
    return np.asarray(v, dtype=np.float64)


def _check_spacing(h: float) -> None:
    if not h > 0:
        raise ConfigurationError(f"网格间距必须为正: h={h}")


def d_minus(v, h: float, n: int | None = None) -> np.ndarray:
    """后向差分 D⁻: 长度 N-1 的内点向量 -> 长度 N

    output[i] = (v[i] - v[i-1]) / h，两端补零。
    """
    _check_spacing(h)
    v = _as_array(v)
    if v.ndim == 0 or v.shape[-1] < 1:
        raise ConfigurationError(f"d_minus 输入形状非法: {v.shape}")
    if n is not None and v.shape[-1] != n - 1:
        raise ConfigurationError(f"d_minus 期望长度 {n - 1}，实际 {v.shape[-1]}")
    padded = np.zeros(v.shape[:-1] + (v.shape[-1] + 2,))
    padded[..., 1:-1] = v
    return np.diff(padded, axis=-1) / h


def d_plus(w, h: float, n: int | None = None) -> np.ndarray:
    """前向差分 D⁺ = -(D⁻)ᵀ: 长度 N -> 长度 N-1"""
    _check_spacing(h)
    w = _as_array(w)
    if w.ndim == 0 or w.shape[-1] < 2:
        raise ConfigurationError(f"d_plus 输入形状非法: {w.shape}")
    if n is not None and w.shape[-1] != n:
        raise ConfigurationError(f"d_plus 期望长度 {n}，实际 {w.shape[-1]}")
    return (w[..., 1:] - w[..., :-1]) / h


def d2(v, h: float, n: int | None = None) -> np.ndarray:
    """二阶差分 D² = D⁺D⁻（Dirichlet 离散拉普拉斯）"""
    return d_plus(d_minus(v, h, n), h)


def norm_h(v, h: float) -> np.ndarray:
    """h 加权范数 √(h·Σv²)"""
    v = _as_array(v)
    return np.sqrt(h * np.sum(v * v, axis=-1))


def inner_h(u, v, h: float) -> np.ndarray:
    """h 加权内积"""
    return h * np.sum(_as_array(u) * _as_array(v), axis=-1)


# ============================================================================
# 显式稀疏矩阵（测试与谱分析用）
# ============================================================================

def d_minus_matrix(n: int, h: float) -> sp.csr_matrix:
    """D⁻ 的 N×(N-1) 稀疏矩阵"""
    _check_spacing(h)
    main = np.ones(n - 1) / h
    return sp.diags([main, -main], [0, -1], shape=(n, n - 1), format="csr")


def d_plus_matrix(n: int, h: float) -> sp.csr_matrix:
    """D⁺ 的 (N-1)×N 稀疏矩阵"""
    return (-d_minus_matrix(n, h).T).tocsr()


def d2_matrix(n: int, h: float) -> sp.csr_matrix:
    """D² 的 (N-1)×(N-1) 稀疏矩阵"""
    return (d_plus_matrix(n, h) @ d_minus_matrix(n, h)).tocsr()


def laplacian_eigenvalue(k: int, n: int, h: float) -> float:
    """Dirichlet 离散拉普拉斯第 k 个特征值 -(4/h²)·sin²(πk/2N)"""
    return -(4.0 / h**2) * np.sin(np.pi * k / (2 * n)) ** 2


def sine_mode(k: int, n: int) -> np.ndarray:
    """第 k 个离散正弦模态 sin(πks/N), s = 1..N-1"""
    s = np.arange(1, n)
    return np.sin(np.pi * k * s / n)
