"""训练结果数据结构"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional


@dataclass
class CurvePoint:
    """训练曲线上的一个点；train_loss 为上一区间内有效批次的均值"""
    step: int
    train_loss: Optional[float]
    val_loss: float
    learning_rate: float

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "learning_rate": self.learning_rate,
        }


@dataclass
class TrainResult:
    """单个种子的训练结果"""
    kind: str
    seed: int
    steps_run: int
    best_step: int
    best_val_loss: float
    final_learning_rate: float
    skipped_batches: int = 0
    init_attempts: int = 1
    checkpoint_path: Optional[str] = None
    curve_path: Optional[str] = None
    curve: list[CurvePoint] = field(default_factory=list)
    test_relative_mse: Optional[float] = None
    exposed_parameters: Optional[dict[str, float]] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "steps_run": self.steps_run,
            "best_step": self.best_step,
            "best_val_loss": self.best_val_loss,
            "final_learning_rate": self.final_learning_rate,
            "skipped_batches": self.skipped_batches,
            "init_attempts": self.init_attempts,
            "checkpoint_path": self.checkpoint_path,
            "curve_path": self.curve_path,
            "test_relative_mse": self.test_relative_mse,
            "exposed_parameters": self.exposed_parameters,
        }


def write_curve_csv(path: Path, curve: list[CurvePoint]) -> Path:
    """写训练曲线 CSV：step, train_loss, val_loss, learning_rate"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "train_loss", "val_loss", "learning_rate"])
        for point in curve:
            writer.writerow([
                point.step,
                "" if point.train_loss is None else repr(point.train_loss),
                repr(point.val_loss),
                repr(point.learning_rate),
            ])
    return path
