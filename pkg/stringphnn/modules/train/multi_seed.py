"""多种子训练协议：每个种子独立初始化与训练，按测试相对 MSE 汇总"""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from stringphnn.modules.config.schema import ExperimentDocument
from stringphnn.modules.datagen.generator import load_split, read_manifest
from stringphnn.modules.eval import figures
from stringphnn.modules.eval.report import evaluate_trajectory
from stringphnn.modules.train.trainer import initialize_model, train_model
from stringphnn.modules.train.types import TrainResult

SUMMARY_NAME = "multi_seed.json"


@dataclass
class MultiSeedSummary:
    """逐种子结果与测试相对 MSE 统计；最优种子为测试误差最低者"""
    kind: str
    results: list[TrainResult] = field(default_factory=list)
    dataset_hash: Optional[str] = None

    def _scores(self) -> np.ndarray:
        return np.array([np.inf if r.test_relative_mse is None else r.test_relative_mse for r in self.results])

    @property
    def best(self) -> TrainResult:
        return self.results[int(np.argmin(self._scores()))]

    def statistics(self) -> dict[str, float]:
        scores = self._scores()
        return {
            "min": float(np.min(scores)),
            "median": float(np.median(scores)),
            "max": float(np.max(scores)),
        }

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seeds": [r.seed for r in self.results],
            "dataset_hash": self.dataset_hash,
            "test_relative_mse": self.statistics(),
            "best_seed": self.best.seed,
            "results": [r.to_dict() for r in self.results],
        }


def test_set_relative_mse(model, document: ExperimentDocument, test_set) -> float:
    """测试集逐条递推的平均相对 MSE"""
    node = document.observation_node()
    scores = [
        evaluate_trajectory(model, traj, f"test[{i}]", node, document.eval.f0_band)[0].relative_mse
        for i, traj in enumerate(test_set)
    ]
    return float(np.mean(scores))


def _train_seed(job: tuple[str, dict, str, int, Optional[str]]) -> TrainResult:
    """进程池任务：初始化、训练并在测试集上评估一个种子"""
    kind, document_data, dataset_dir, seed, output_dir = job
    document = ExperimentDocument.model_validate(document_data)
    dataset_dir = Path(dataset_dir)
    manifest = read_manifest(dataset_dir)
    train_set = load_split(dataset_dir, "train")
    val_set = load_split(dataset_dir, "val")
    test_set = load_split(dataset_dir, "test", limit=document.eval.max_trajectories)

    model, attempts = initialize_model(kind, document, seed)
    result = train_model(model, train_set, val_set, document, seed,
                         output_dir=Path(output_dir) if output_dir else None,
                         dataset_hash=manifest.dataset_hash)
    result.init_attempts = attempts
    result.test_relative_mse = test_set_relative_mse(model, document, test_set)
    logger.info(f"[{kind}/seed {seed}] 测试相对 MSE {result.test_relative_mse:.6e}")
    return result


def multi_seed(
    kind: str,
    document: ExperimentDocument,
    dataset_dir: Path,
    output_dir: Optional[Path] = None,
    seeds: Optional[Sequence[int]] = None,
    threads: int = 1,
) -> MultiSeedSummary:
    """对每个种子运行 train_model，汇总 min/median/max 并标记最优种子"""
    seeds = list(seeds if seeds is not None else document.train.seeds)
    if not seeds:
        raise ValueError("至少需要一个种子")
    dataset_dir = Path(dataset_dir)
    manifest = read_manifest(dataset_dir)
    document_data = document.model_dump(mode="json")
    jobs = [
        (kind, document_data, str(dataset_dir), seed,
         str(Path(output_dir) / kind / f"seed_{seed}") if output_dir else None)
        for seed in seeds
    ]
    workers = max(1, min(threads, len(jobs), os.cpu_count() or 1))
    logger.info(f"多种子训练 {kind}: seeds={seeds}, workers={workers}")
    if workers == 1:
        results = [_train_seed(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_train_seed, jobs))

    summary = MultiSeedSummary(kind=kind, results=results, dataset_hash=manifest.dataset_hash)
    logger.info(f"{kind} 测试相对 MSE 统计: {summary.statistics()}, 最优种子 {summary.best.seed}")
    if output_dir is not None:
        target = Path(output_dir) / kind
        target.mkdir(parents=True, exist_ok=True)
        (target / SUMMARY_NAME).write_text(
            json.dumps(summary.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
        finite = [(r.seed, r.test_relative_mse) for r in results
                  if r.test_relative_mse is not None and np.isfinite(r.test_relative_mse)]
        if finite:
            figures.plot_relative_mse_bars({kind: finite}, target / "relative_mse_by_seed.png")
    return summary
