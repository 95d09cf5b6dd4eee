"""张量与反向模式自动微分磁带

Tape 是上下文管理器：在活动磁带内，对需要梯度的张量执行的原语会被记录；
没有活动磁带时原语只做数值计算，返回常量张量。
"""

import itertools
import threading
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from stringphnn.modules.core.errors import TapeError

_state = threading.local()
_tape_ids = itertools.count(1)


def _stack() -> list["Tape"]:
    if not hasattr(_state, "stack"):
        _state.stack = []
    return _state.stack


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """把广播后的梯度按求和归约回输入形状"""
    grad = np.asarray(grad, dtype=np.float64)
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """64 位浮点张量，可选梯度槽"""

    # 阻止 numpy 接管混合运算，保证 ndarray ⊕ Tensor 走反射运算符
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self.grad: Optional[np.ndarray] = None
        self._tape_id: Optional[int] = None
        self._generation: Optional[int] = None

    # ------------------------------------------------------------------
    # 基本属性
    # ------------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._tape_id is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    def __len__(self) -> int:
        return len(self.data)

    # ------------------------------------------------------------------
    # 运算符
    # ------------------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)


@dataclass
class _Record:
    output: Tensor
    inputs: tuple[Tensor, ...]
    vjp: Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tape:
    """反向模式自动微分磁带（线程局部、可嵌套）"""

    def __init__(self) -> None:
        self.id = next(_tape_ids)
        self.generation = 0
        self.records: list[_Record] = []

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _stack()
        if stack and stack[-1] is self:
            stack.pop()

    @staticmethod
    def current() -> Optional["Tape"]:
        stack = _stack()
        return stack[-1] if stack else None

    def reset(self) -> None:
        """清空记录并进入新一代，旧张量随之失效"""
        self.records = []
        self.generation += 1

    def owns(self, tensor: Tensor) -> bool:
        return tensor._tape_id == self.id and tensor._generation == self.generation

    def tracks(self, tensor: Tensor) -> bool:
        """张量是否参与当前磁带的微分"""
        if tensor.is_leaf:
            return tensor.requires_grad
        if not self.owns(tensor):
            raise TapeError(
                f"张量来自失效的磁带 (tape={tensor._tape_id}, generation={tensor._generation})"
            )
        return True

    def record(self, output: Tensor, inputs: tuple[Tensor, ...], vjp) -> Tensor:
        output._tape_id = self.id
        output._generation = self.generation
        self.records.append(_Record(output, inputs, vjp))
        return output

    def backward(self, root: Tensor) -> None:
        """从标量根节点反向传播，把梯度累加到叶子张量的 .grad"""
        if root.size != 1:
            raise TapeError(f"只能从标量反向传播，实际形状 {root.shape}")
        if root.is_leaf or not self.owns(root):
            raise TapeError("根节点不属于当前磁带")

        grads: dict[int, np.ndarray] = {id(root): np.ones_like(root.data)}
        leaves: dict[int, Tensor] = {}
        for record in reversed(self.records):
            upstream = grads.pop(id(record.output), None)
            if upstream is None:
                continue
            input_grads = record.vjp(upstream)
            for tensor, grad in zip(record.inputs, input_grads):
                if grad is None:
                    continue
                if tensor.is_leaf:
                    if not tensor.requires_grad:
                        continue
                    leaves[id(tensor)] = tensor
                elif not self.owns(tensor):
                    continue
                key = id(tensor)
                grads[key] = grads[key] + grad if key in grads else grad

        for key, tensor in leaves.items():
            grad = grads[key].reshape(tensor.shape)
            tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def is_tensor(*values) -> bool:
    return any(isinstance(v, Tensor) for v in values)


def apply(data: np.ndarray, inputs: Iterable[Tensor], vjp) -> Tensor:
    """构造原语输出；若有活动磁带且存在需微分的输入则记录"""
    inputs = tuple(inputs)
    out = Tensor(data)
    tape = Tape.current()
    if tape is None:
        return out
    tracked = [tape.tracks(t) for t in inputs]
    if any(tracked):
        tape.record(out, inputs, vjp)
    return out


# ============================================================================
# 逐元素原语
# ============================================================================

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data
    return apply(out, (a, b), lambda g: (unbroadcast(g, a.shape), unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data - b.data
    return apply(out, (a, b), lambda g: (unbroadcast(g, a.shape), unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data
    return apply(
        out,
        (a, b),
        lambda g: (unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)),
    )


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data
    return apply(
        out,
        (a, b),
        lambda g: (unbroadcast(g / b.data, a.shape), unbroadcast(-g * out / b.data, b.shape)),
    )


def neg(a) -> Tensor:
    a = as_tensor(a)
    return apply(-a.data, (a,), lambda g: (-g,))


def power(a, exponent: float) -> Tensor:
    if isinstance(exponent, Tensor):
        raise TapeError("指数必须是常数")
    a = as_tensor(a)
    k = float(exponent)
    out = a.data**k
    return apply(out, (a,), lambda g: (g * k * a.data ** (k - 1.0),))


def matmul(a, b) -> Tensor:
    """a: (..., k) @ b: (k, m)"""
    a, b = as_tensor(a), as_tensor(b)
    if b.ndim != 2:
        raise TapeError(f"matmul 右操作数必须是二维，实际 {b.shape}")
    out = a.data @ b.data

    def vjp(g):
        grad_a = g @ b.data.T
        flat_a = a.data.reshape(-1, a.shape[-1])
        grad_b = flat_a.T @ g.reshape(-1, b.shape[-1])
        return grad_a, grad_b

    return apply(out, (a, b), vjp)
