"""检查点文件

布局（小端）:
    8 字节魔数 b"SPHNNCK1"
    uint64 头长度
    UTF-8 JSON 头：版本、模型类型、条目表（名称、区段、形状、字节偏移）、优化器状态、附加元数据
    float64 数据块：参数、Adam 一阶矩、Adam 二阶矩、缓冲区
另写 JSON 旁注文件 <checkpoint>.json。
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from stringphnn.modules.core.errors import DataFormatError
from stringphnn.modules.nn.optim import AdamState

MAGIC = b"SPHNNCK1"
CHECKPOINT_VERSION = 1
SECTIONS = ("param", "m", "v", "buffer")


@dataclass
class Checkpoint:
    """已加载的检查点"""
    kind: str
    params: dict[str, np.ndarray]
    optimizer: AdamState
    hyperparameters: dict[str, float] = field(default_factory=dict)
    buffers: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "parameters": {name: list(v.shape) for name, v in self.params.items()},
            "parameter_count": int(sum(v.size for v in self.params.values())),
            "optimizer_step": self.optimizer.step,
            "buffers": {name: list(v.shape) for name, v in self.buffers.items()},
            "metadata_keys": sorted(self.metadata),
        }


def sidecar_path(path: Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def save_checkpoint(
    path: Path,
    kind: str,
    params: dict[str, np.ndarray],
    optimizer: Optional[AdamState] = None,
    hyperparameters: Optional[dict[str, float]] = None,
    buffers: Optional[dict[str, np.ndarray]] = None,
    metadata: Optional[dict[str, Any]] = None,
    sidecar: Optional[dict[str, Any]] = None,
) -> Path:
    """写入检查点（内容只由参数与状态决定，不含时间戳）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    optimizer = optimizer or AdamState()
    blocks: list[tuple[str, str, np.ndarray]] = []
    for name, value in params.items():
        blocks.append(("param", name, value))
    for name in params:
        if name in optimizer.m:
            blocks.append(("m", name, optimizer.m[name]))
    for name in params:
        if name in optimizer.v:
            blocks.append(("v", name, optimizer.v[name]))
    for name, value in (buffers or {}).items():
        blocks.append(("buffer", name, value))

    entries = []
    offset = 0
    payload = bytearray()
    for section, name, value in blocks:
        data = np.ascontiguousarray(value, dtype="<f8")
        entries.append({"section": section, "name": name, "shape": list(data.shape), "offset": offset})
        raw = data.tobytes()
        payload.extend(raw)
        offset += len(raw)

    header = {
        "version": CHECKPOINT_VERSION,
        "kind": kind,
        "entries": entries,
        "optimizer": {"step": optimizer.step, "hyperparameters": hyperparameters or {}},
        "metadata": metadata or {},
    }
    raw_header = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(raw_header)))
        fh.write(raw_header)
        fh.write(bytes(payload))

    if sidecar is not None:
        sidecar_path(path).write_text(
            json.dumps(sidecar, indent=2, sort_keys=True, ensure_ascii=False), encoding="utf-8"
        )
    return path


def load_checkpoint(path: Path) -> Checkpoint:
    """读取检查点"""
    path = Path(path)
    raw = path.read_bytes()
    if raw[: len(MAGIC)] != MAGIC:
        raise DataFormatError(f"不是检查点文件（魔数不符）: {path}")
    if len(raw) < len(MAGIC) + 8:
        raise DataFormatError(f"检查点文件头不完整: {path}")
    (length,) = struct.unpack("<Q", raw[len(MAGIC): len(MAGIC) + 8])
    start = len(MAGIC) + 8
    if len(raw) < start + length:
        raise DataFormatError(f"检查点头被截断: {path}")
    try:
        header = json.loads(raw[start: start + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataFormatError(f"检查点头无法解析: {path}: {e}") from e
    if header.get("version") != CHECKPOINT_VERSION:
        raise DataFormatError(f"不支持的检查点版本 {header.get('version')}: {path}")

    payload = raw[start + length:]
    sections: dict[str, dict[str, np.ndarray]] = {name: {} for name in SECTIONS}
    for entry in header["entries"]:
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * 8
        chunk = payload[entry["offset"]: entry["offset"] + nbytes]
        if len(chunk) != nbytes:
            raise DataFormatError(f"检查点条目 {entry['name']} 被截断: {path}")
        sections[entry["section"]][entry["name"]] = np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()

    optimizer = header.get("optimizer", {})
    return Checkpoint(
        kind=header["kind"],
        params=sections["param"],
        optimizer=AdamState(m=sections["m"], v=sections["v"], step=int(optimizer.get("step", 0))),
        hyperparameters=optimizer.get("hyperparameters", {}),
        buffers=sections["buffer"],
        metadata=header.get("metadata", {}),
    )
