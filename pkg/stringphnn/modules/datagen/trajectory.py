"""轨迹记录与二进制文件格式

文件布局（小端）:
    8 字节魔数 b"STRTRJ01"
    uint64 元数据长度
    UTF-8 JSON 元数据（键排序）
    q (S × (N-1)), p (S × (N-1)), f (S)，均为 float32
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from stringphnn.modules.core.errors import DataFormatError
from stringphnn.modules.core.types import ExcitationSpec, GridSpec, PhysicalParams, TimeSpec

MAGIC = b"STRTRJ01"
FORMAT_VERSION = 1
STORAGE_DTYPE = "<f4"


@dataclass
class TrajectoryMeta:
    """轨迹元数据"""
    params: PhysicalParams
    grid: GridSpec
    time: TimeSpec
    node_e: int
    excitation: Optional[ExcitationSpec] = None
    sav: dict[str, float] = field(default_factory=dict)
    seed: Optional[dict[str, Any]] = None
    split: Optional[str] = None
    source: str = "simulation"
    format_version: int = FORMAT_VERSION

    def to_dict(self) -> dict:
        return {
            "params": self.params.model_dump(mode="json"),
            "grid": self.grid.model_dump(mode="json"),
            "time": self.time.model_dump(mode="json"),
            "node_e": self.node_e,
            "excitation": self.excitation.model_dump(mode="json") if self.excitation else None,
            "sav": dict(self.sav),
            "seed": self.seed,
            "split": self.split,
            "source": self.source,
            "format_version": self.format_version,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrajectoryMeta":
        return cls(
            params=PhysicalParams.model_validate(data["params"]),
            grid=GridSpec.model_validate(data["grid"]),
            time=TimeSpec.model_validate(data["time"]),
            node_e=int(data["node_e"]),
            excitation=ExcitationSpec.model_validate(data["excitation"]) if data.get("excitation") else None,
            sav=dict(data.get("sav") or {}),
            seed=data.get("seed"),
            split=data.get("split"),
            source=data.get("source", "simulation"),
            format_version=int(data.get("format_version", FORMAT_VERSION)),
        )


@dataclass
class Trajectory:
    """一条轨迹：第 t 条记录为 (q^{t-1/2}, p^t, f^{t+1/2})

    psi 只在内存中保留（ψ^t），不写入文件。
    """
    meta: TrajectoryMeta
    q: np.ndarray
    p: np.ndarray
    f: np.ndarray
    psi: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=np.float64)
        self.p = np.asarray(self.p, dtype=np.float64)
        self.f = np.asarray(self.f, dtype=np.float64)
        if self.psi is not None:
            self.psi = np.asarray(self.psi, dtype=np.float64)
        self.check()

    @property
    def step_count(self) -> int:
        return self.q.shape[0]

    @property
    def interior(self) -> int:
        return self.q.shape[1]

    def check(self) -> None:
        """检查形状一致性"""
        n = self.meta.grid.n - 1
        steps = self.q.shape[0]
        if self.q.ndim != 2 or self.q.shape[1] != n:
            raise DataFormatError(f"q 形状 {self.q.shape} 与网格内点数 {n} 不符")
        if self.p.shape != self.q.shape:
            raise DataFormatError(f"p 形状 {self.p.shape} 与 q 形状 {self.q.shape} 不符")
        if self.f.shape != (steps,):
            raise DataFormatError(f"f 形状 {self.f.shape} 与步数 {steps} 不符")
        if self.psi is not None and self.psi.shape != (steps,):
            raise DataFormatError(f"psi 形状 {self.psi.shape} 与步数 {steps} 不符")

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p)) and np.all(np.isfinite(self.f)))

    def observation(self, node: int, quantity: str = "p") -> np.ndarray:
        """节点 node（1..N-1）处的时间序列"""
        if not 1 <= node <= self.interior:
            raise ValueError(f"观测节点 {node} 超出范围 [1, {self.interior}]")
        series = {"p": self.p, "q": self.q}.get(quantity)
        if series is None:
            raise ValueError(f"未知物理量: {quantity}")
        return series[:, node - 1]

    def times(self, quantity: str = "p") -> np.ndarray:
        """记录对应的时刻：q 在半整数步，p 在整数步"""
        offset = -0.5 if quantity == "q" else 0.0
        return (np.arange(self.step_count) + offset) * self.meta.time.dt

    def summary(self) -> dict:
        return {
            "steps": self.step_count,
            "interior_nodes": self.interior,
            "node_e": self.meta.node_e,
            "max_abs_q": float(np.max(np.abs(self.q))) if self.q.size else 0.0,
            "max_abs_p": float(np.max(np.abs(self.p))) if self.p.size else 0.0,
            "max_abs_f": float(np.max(np.abs(self.f))) if self.f.size else 0.0,
            "finite": self.is_finite(),
        }


# ============================================================================
# 文件读写
# ============================================================================

def write_trajectory(path: Path, trajectory: Trajectory) -> Path:
    """写入轨迹文件（数组以 float32 存储）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = trajectory.meta.to_dict()
    meta["arrays"] = [
        {"name": "q", "shape": list(trajectory.q.shape), "dtype": STORAGE_DTYPE},
        {"name": "p", "shape": list(trajectory.p.shape), "dtype": STORAGE_DTYPE},
        {"name": "f", "shape": list(trajectory.f.shape), "dtype": STORAGE_DTYPE},
    ]
    header = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for array in (trajectory.q, trajectory.p, trajectory.f):
            fh.write(np.ascontiguousarray(array, dtype=STORAGE_DTYPE).tobytes())
    return path


def read_header(path: Path) -> tuple[dict, int]:
    """读取元数据与数据区偏移"""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise DataFormatError(f"不是轨迹文件（魔数不符）: {path}")
        raw_length = fh.read(8)
        if len(raw_length) != 8:
            raise DataFormatError(f"轨迹文件头不完整: {path}")
        (length,) = struct.unpack("<Q", raw_length)
        raw = fh.read(length)
    if len(raw) != length:
        raise DataFormatError(f"轨迹元数据被截断: {path}")
    try:
        meta = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataFormatError(f"轨迹元数据无法解析: {path}: {e}") from e
    if meta.get("format_version") != FORMAT_VERSION:
        raise DataFormatError(f"不支持的轨迹格式版本 {meta.get('format_version')}: {path}")
    return meta, len(MAGIC) + 8 + length


def load_trajectory(path: Path) -> Trajectory:
    """读取轨迹文件，数组转换为 float64"""
    path = Path(path)
    meta, offset = read_header(path)
    payload = path.read_bytes()[offset:]
    arrays: dict[str, np.ndarray] = {}
    cursor = 0
    for entry in meta["arrays"]:
        dtype = np.dtype(entry["dtype"])
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        chunk = payload[cursor:cursor + nbytes]
        if len(chunk) != nbytes:
            raise DataFormatError(f"轨迹数组 {entry['name']} 被截断: {path}")
        arrays[entry["name"]] = np.frombuffer(chunk, dtype=dtype).reshape(shape).astype(np.float64)
        cursor += nbytes
    try:
        trajectory_meta = TrajectoryMeta.from_dict(meta)
    except (KeyError, ValueError) as e:
        raise DataFormatError(f"轨迹元数据字段非法: {path}: {e}") from e
    return Trajectory(meta=trajectory_meta, q=arrays["q"], p=arrays["p"], f=arrays["f"])
