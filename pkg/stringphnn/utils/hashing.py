"""内容哈希 - 配置哈希与数据集内容哈希"""

import hashlib
import json
from pathlib import Path
from typing import Any, Iterable

from pydantic import BaseModel


def canonical_json(data: Any) -> str:
    """排序键、紧凑分隔符的规范 JSON"""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(model: BaseModel | dict) -> str:
    """配置的 SHA-256 哈希（基于规范 JSON）"""
    payload = model.model_dump(mode="json") if isinstance(model, BaseModel) else model
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def blob_hash(path: Path) -> str:
    """git 风格的 blob 哈希: sha1(b"blob <len>\\0" + content)"""
    content = Path(path).read_bytes()
    digest = hashlib.sha1(f"blob {len(content)}\0".encode("ascii"))
    digest.update(content)
    return digest.hexdigest()


def tree_hash(files: Iterable[Path], root: Path) -> str:
    """对一组文件计算树哈希（相对路径 + blob 哈希，按路径排序）"""
    entries = sorted(
        (Path(f).resolve().relative_to(Path(root).resolve()).as_posix(), blob_hash(f))
        for f in files
    )
    digest = hashlib.sha1()
    for name, blob in entries:
        digest.update(f"{blob} {name}\n".encode("utf-8"))
    return digest.hexdigest()
