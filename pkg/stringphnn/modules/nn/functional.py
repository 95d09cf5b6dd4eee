"""多态原语：输入含 Tensor 时走自动微分，否则直接返回 numpy 结果

同一段数值代码既可用于真值仿真（float/ndarray），也可用于可训练模型（Tensor）。
两条路径执行完全相同的 numpy 运算。
"""

from typing import Optional, Sequence

import numpy as np

from stringphnn.modules.core import operators as ops
from stringphnn.modules.core.tridiag import factorize
from stringphnn.modules.nn.tensor import Tensor, apply, as_tensor, is_tensor, matmul as _matmul


def value(x) -> np.ndarray:
    """取数值（Tensor 取 data）"""
    return x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)


def _axes(axis, ndim: int) -> Optional[tuple[int, ...]]:
    if axis is None:
        return None
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


# ============================================================================
# 逐元素函数
# ============================================================================

def exp(x):
    if not is_tensor(x):
        return np.exp(x)
    out = np.exp(x.data)
    return apply(out, (x,), lambda g: (g * out,))


def log(x):
    if not is_tensor(x):
        return np.log(x)
    out = np.log(x.data)
    return apply(out, (x,), lambda g: (g / x.data,))


def sqrt(x):
    if not is_tensor(x):
        return np.sqrt(x)
    out = np.sqrt(x.data)
    return apply(out, (x,), lambda g: (g * 0.5 / out,))


def abs(x):  # noqa: A001
    if not is_tensor(x):
        return np.abs(x)
    out = np.abs(x.data)
    return apply(out, (x,), lambda g: (g * np.sign(x.data),))


def leaky_relu(x, negative_slope: float = 0.01):
    if not is_tensor(x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x > 0, x, negative_slope * x)
    out = np.where(x.data > 0, x.data, negative_slope * x.data)
    slope = leaky_relu_slope(x.data, negative_slope)
    return apply(out, (x,), lambda g: (g * slope,))


def leaky_relu_slope(x, negative_slope: float = 0.01) -> np.ndarray:
    """LeakyReLU 导数：x>0 取 1，否则取负斜率（含 x=0）；视为常量"""
    return np.where(value(x) > 0, 1.0, negative_slope)


# ============================================================================
# 归约与形状
# ============================================================================

def sum(x, axis=None, keepdims: bool = False):  # noqa: A001
    if not is_tensor(x):
        return np.sum(x, axis=axis, keepdims=keepdims)
    shape = x.shape
    out = np.sum(x.data, axis=axis, keepdims=keepdims)
    axes = _axes(axis, x.ndim)

    def vjp(g):
        g = np.asarray(g)
        if axes is not None and not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, shape).copy(),)

    return apply(out, (x,), vjp)


def mean(x, axis=None, keepdims: bool = False):
    count = value(x).size if axis is None else int(np.prod([value(x).shape[a] for a in _axes(axis, value(x).ndim)]))
    return sum(x, axis=axis, keepdims=keepdims) / float(count)


def reshape(x, shape: Sequence[int]):
    if not is_tensor(x):
        return np.reshape(x, shape)
    original = x.shape
    return apply(x.data.reshape(shape), (x,), lambda g: (np.reshape(g, original),))


def concat(xs: Sequence, axis: int = -1):
    if not is_tensor(*xs):
        return np.concatenate([np.asarray(x, dtype=np.float64) for x in xs], axis=axis)
    xs = [as_tensor(x) for x in xs]
    out = np.concatenate([x.data for x in xs], axis=axis)
    splits = np.cumsum([x.shape[axis] for x in xs])[:-1]
    return apply(out, xs, lambda g: tuple(np.split(g, splits, axis=axis)))


def matmul(a, b):
    if not is_tensor(a, b):
        return np.asarray(a) @ np.asarray(b)
    return _matmul(a, b)


# ============================================================================
# 差分算子
# ============================================================================

def d_minus(v, h: float):
    if not is_tensor(v):
        return ops.d_minus(v, h)
    return apply(ops.d_minus(v.data, h), (v,), lambda g: (-ops.d_plus(g, h),))


def d_plus(w, h: float):
    if not is_tensor(w):
        return ops.d_plus(w, h)
    return apply(ops.d_plus(w.data, h), (w,), lambda g: (-ops.d_minus(g, h),))


def d2(v, h: float):
    return d_plus(d_minus(v, h), h)


# ============================================================================
# 核大小为 2 的卷积
# ============================================================================

def _pad(q: np.ndarray) -> np.ndarray:
    padded = np.zeros(q.shape[:-1] + (q.shape[-1] + 2,))
    padded[..., 1:-1] = q
    return padded


def _conv(q: np.ndarray, k: np.ndarray) -> np.ndarray:
    padded = _pad(q)
    return k[0] * padded[..., 1:] + k[1] * padded[..., :-1]


def _conv_transpose(u: np.ndarray, k: np.ndarray) -> np.ndarray:
    return k[0] * u[..., :-1] + k[1] * u[..., 1:]


def conv_k2(q, k):
    """z_s = k1·q_s + k2·q_{s-1}, s = 1..N（零边界）；k = [1/h, -1/h] 时即 D⁻"""
    if not is_tensor(q, k):
        return _conv(np.asarray(q, dtype=np.float64), np.asarray(k, dtype=np.float64))
    q, k = as_tensor(q), as_tensor(k)
    out = _conv(q.data, k.data)

    def vjp(g):
        padded = _pad(q.data)
        grad_k = np.array([np.sum(g * padded[..., 1:]), np.sum(g * padded[..., :-1])])
        return _conv_transpose(g, k.data), grad_k

    return apply(out, (q, k), vjp)


def conv_k2_transpose(u, k):
    """conv_k2 的转置: y_j = k1·u_j + k2·u_{j+1}, 长度 N -> N-1"""
    if not is_tensor(u, k):
        return _conv_transpose(np.asarray(u, dtype=np.float64), np.asarray(k, dtype=np.float64))
    u, k = as_tensor(u), as_tensor(k)
    out = _conv_transpose(u.data, k.data)

    def vjp(g):
        grad_k = np.array([np.sum(g * u.data[..., :-1]), np.sum(g * u.data[..., 1:])])
        return _conv(g, k.data), grad_k

    return apply(out, (u, k), vjp)


# ============================================================================
# 三对角求解
# ============================================================================

def tridiag_solve(diag, off, rhs):
    """求解 (diag·I + off·(S+Sᵀ)) x = rhs，对 diag、off、rhs 可微

    伴随规则：λ = A⁻ᵀ ḡ（A 对称），rhs̄ = λ，diaḡ = -Σλx，off̄ = -Σ(λ_i x_{i+1} + λ_{i+1} x_i)。
    """
    n = value(rhs).shape[-1]
    factor = factorize(float(value(diag)), float(value(off)), n)
    if not is_tensor(diag, off, rhs):
        return factor.solve(rhs)
    diag, off, rhs = as_tensor(diag), as_tensor(off), as_tensor(rhs)
    x = factor.solve(rhs.data)

    def vjp(g):
        lam = factor.solve(g)
        grad_diag = -np.sum(lam * x)
        grad_off = -(np.sum(lam[..., :-1] * x[..., 1:]) + np.sum(lam[..., 1:] * x[..., :-1]))
        return (
            np.full(diag.shape, grad_diag),
            np.full(off.shape, grad_off),
            lam,
        )

    return apply(x, (diag, off, rhs), vjp)


def slice_last(x, start: int, stop: int):
    """沿最后一维切片 x[..., start:stop]"""
    if not is_tensor(x):
        return np.asarray(x)[..., start:stop]
    shape = x.shape

    def vjp(g):
        full = np.zeros(shape)
        full[..., start:stop] = g
        return (full,)

    return apply(x.data[..., start:stop], (x,), vjp)
