"""数据集生成

每个划分（train/val/test）从主种子派生独立的 SeedSequence 子流，
每条轨迹再派生一个子种子；生成结果只取决于 (配置, 主种子)。
"""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
from loguru import logger

from stringphnn import __version__
from stringphnn.modules.config.schema import ExperimentDocument
from stringphnn.modules.core.errors import DataFormatError, InstabilityError
from stringphnn.modules.datagen.sampling import sample_excitation
from stringphnn.modules.datagen.trajectory import Trajectory, load_trajectory, write_trajectory
from stringphnn.modules.integrator.audit import energy_audit
from stringphnn.modules.integrator.rollout import rollout, zero_state
from stringphnn.modules.integrator.stability import stability_check
from stringphnn.modules.physics.components import GroundTruthComponents
from stringphnn.modules.physics.excitation import excitation_signal
from stringphnn.utils.hashing import config_hash, tree_hash

SPLITS = ("train", "val", "test")
MANIFEST_NAME = "dataset_manifest.json"
TRAJECTORY_SUFFIX = ".strtrj"
AUDIT_TOLERANCE = 1e-9


@dataclass
class TrajectoryRecord:
    """清单中的单条轨迹记录"""
    split: str
    index: int
    file: str
    seed: dict[str, Any]
    excitation: dict[str, Any]
    audit_max_relative_residual: float

    def to_dict(self) -> dict:
        return {
            "split": self.split,
            "index": self.index,
            "file": self.file,
            "seed": self.seed,
            "excitation": self.excitation,
            "audit_max_relative_residual": self.audit_max_relative_residual,
        }


@dataclass
class DatasetManifest:
    """数据集清单（不含计时信息，保证可逐字节复现）"""
    config_hash: str
    master_seed: int
    records: list[TrajectoryRecord] = field(default_factory=list)
    dataset_hash: str = ""
    document: dict[str, Any] = field(default_factory=dict)

    def split(self, name: str) -> list[TrajectoryRecord]:
        return [r for r in self.records if r.split == name]

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "config_hash": self.config_hash,
            "master_seed": self.master_seed,
            "dataset_hash": self.dataset_hash,
            "splits": {name: [r.file for r in self.split(name)] for name in SPLITS},
            "trajectories": [r.to_dict() for r in self.records],
            "document": self.document,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetManifest":
        return cls(
            config_hash=data["config_hash"],
            master_seed=int(data["master_seed"]),
            records=[TrajectoryRecord(**r) for r in data["trajectories"]],
            dataset_hash=data.get("dataset_hash", ""),
            document=data.get("document", {}),
        )


def split_seeds(master_seed: int, counts: dict[str, int]) -> dict[str, list[np.random.SeedSequence]]:
    """主种子 -> 每个划分一个子流 -> 每条轨迹一个子种子"""
    streams = np.random.SeedSequence(master_seed).spawn(len(SPLITS))
    return {name: stream.spawn(counts[name]) for name, stream in zip(SPLITS, streams)}


def _seed_info(seq: np.random.SeedSequence) -> dict[str, Any]:
    return {"entropy": int(seq.entropy), "spawn_key": [int(k) for k in seq.spawn_key]}


def simulate_trajectory(
    document: ExperimentDocument,
    seq: np.random.SeedSequence,
    split: str,
) -> tuple[Trajectory, float]:
    """按子种子采样激励并从零初始条件仿真，返回 (轨迹, 审计最大相对残差)"""
    c = GroundTruthComponents.build(document.string, document.grid)
    cfg = document.sav_config()
    rng = np.random.default_rng(seq)
    excitation = sample_excitation(rng, document.dataset, document.grid)
    forces = excitation_signal(excitation, document.time)
    provenance = {"split": split, "seed": _seed_info(seq), "excitation": excitation.model_dump()}
    trajectory = rollout(zero_state(c), forces, excitation.node_e, c, cfg,
                         excitation=excitation, provenance=provenance)
    trajectory.meta.seed = _seed_info(seq)
    trajectory.meta.split = split
    residual = energy_audit(trajectory, c, cfg).max_relative_residual
    return trajectory, residual


def _generate_one(job: tuple[dict, np.random.SeedSequence, str, int, str]) -> TrajectoryRecord:
    """进程池任务：仿真一条轨迹并写文件"""
    document_data, seq, split, index, path = job
    document = ExperimentDocument.model_validate(document_data)
    trajectory, residual = simulate_trajectory(document, seq, split)
    write_trajectory(Path(path), trajectory)
    return TrajectoryRecord(
        split=split,
        index=index,
        file=f"{split}/{Path(path).name}",
        seed=trajectory.meta.seed,
        excitation=trajectory.meta.excitation.model_dump(mode="json"),
        audit_max_relative_residual=residual,
    )


def generate_dataset(
    document: ExperimentDocument,
    output_dir: Path,
    threads: int = 1,
) -> DatasetManifest:
    """生成 train/val/test 轨迹文件与清单"""
    output_dir = Path(output_dir)
    c = GroundTruthComponents.build(document.string, document.grid)
    stability_check(c, document.sav_config(), strict=True)

    spec = document.dataset
    counts = {"train": spec.n_train, "val": spec.n_val, "test": spec.n_test}
    seeds = split_seeds(spec.seed, counts)
    document_data = document.model_dump(mode="json")
    jobs = []
    for split in SPLITS:
        (output_dir / split).mkdir(parents=True, exist_ok=True)
        for index, seq in enumerate(seeds[split]):
            path = output_dir / split / f"traj_{index:04d}{TRAJECTORY_SUFFIX}"
            jobs.append((document_data, seq, split, index, str(path)))

    workers = max(1, min(threads, len(jobs), os.cpu_count() or 1))
    logger.info(f"开始生成数据集: {len(jobs)} 条轨迹, N={document.grid.n}, fs={document.time.fs:g}Hz, "
                f"ts={document.time.ts:g}s, workers={workers}")
    try:
        if workers == 1:
            records = [_generate_one(job) for job in jobs]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                records = list(pool.map(_generate_one, jobs))
    except InstabilityError as e:
        logger.error(f"轨迹仿真失稳: {e} provenance={e.provenance}")
        raise

    for record in records:
        if record.audit_max_relative_residual > AUDIT_TOLERANCE:
            logger.warning(f"能量审计残差偏大: {record.file} "
                           f"(max relative residual {record.audit_max_relative_residual:.3e})")

    files = [output_dir / r.file for r in records]
    manifest = DatasetManifest(
        config_hash=config_hash(document),
        master_seed=spec.seed,
        records=records,
        dataset_hash=tree_hash(files, output_dir),
        document=document_data,
    )
    write_manifest(output_dir / MANIFEST_NAME, manifest)
    logger.info(f"数据集已写入 {output_dir} (hash={manifest.dataset_hash[:12]})")
    return manifest


def write_manifest(path: Path, manifest: DatasetManifest) -> None:
    Path(path).write_text(
        json.dumps(manifest.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def read_manifest(dataset_dir: Path) -> DatasetManifest:
    path = Path(dataset_dir) / MANIFEST_NAME
    if not path.exists():
        raise DataFormatError(f"数据集清单不存在: {path}")
    try:
        return DatasetManifest.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except (KeyError, TypeError, json.JSONDecodeError) as e:
        raise DataFormatError(f"数据集清单无法解析: {path}: {e}") from e


def load_split(dataset_dir: Path, split: str, limit: Optional[int] = None) -> list[Trajectory]:
    """按清单读取一个划分的轨迹"""
    manifest = read_manifest(dataset_dir)
    records = manifest.split(split)
    if limit is not None:
        records = records[:limit]
    return [load_trajectory(Path(dataset_dir) / r.file) for r in records]
