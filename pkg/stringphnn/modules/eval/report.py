"""检查点评估：逐条测试轨迹递推，汇总指标并导出 JSON / CSV / PNG"""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
from loguru import logger

from stringphnn.modules.config.schema import EvalConfig
from stringphnn.modules.core.errors import AnalysisError, InstabilityError
from stringphnn.modules.datagen.export import export_matrix_csv, export_node_csv
from stringphnn.modules.datagen.generator import read_manifest
from stringphnn.modules.datagen.trajectory import Trajectory, load_trajectory
from stringphnn.modules.eval import figures
from stringphnn.modules.eval.metrics import displacement_error_map, relative_mse
from stringphnn.modules.eval.rollout import recursive_rollout
from stringphnn.modules.eval.spectral import error_spectrogram, fundamental_frequency, spectrogram
from stringphnn.modules.model.io import load_model
from stringphnn.modules.model.phnn import StringPHNN
from stringphnn.modules.model.report import parameter_report

ALL_FORMATS = ("json", "csv", "png")


@dataclass
class TrajectoryEvaluation:
    """单条测试轨迹的评估结果"""
    file: str
    relative_mse: float
    displacement_max_error: float
    displacement_mean_error: float
    f0_reference: Optional[float] = None
    f0_predicted: Optional[float] = None
    unstable_at: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "file": self.file,
            "relative_mse": self.relative_mse,
            "displacement_max_error": self.displacement_max_error,
            "displacement_mean_error": self.displacement_mean_error,
            "f0_reference": self.f0_reference,
            "f0_predicted": self.f0_predicted,
            "unstable_at": self.unstable_at,
        }


@dataclass
class EvaluationReport:
    """一个检查点在测试集上的汇总"""
    kind: str
    checkpoint: str
    trajectories: list[TrajectoryEvaluation] = field(default_factory=list)
    parameters: Optional[dict[str, Any]] = None
    outputs: list[str] = field(default_factory=list)

    @property
    def relative_mse(self) -> float:
        """测试集平均相对 MSE"""
        return float(np.mean([t.relative_mse for t in self.trajectories]))

    def summary(self) -> dict[str, float]:
        values = np.array([t.relative_mse for t in self.trajectories])
        return {
            "mean": float(np.mean(values)),
            "median": float(np.median(values)),
            "min": float(np.min(values)),
            "max": float(np.max(values)),
        }

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "checkpoint": self.checkpoint,
            "relative_mse": self.summary(),
            "trajectories": [t.to_dict() for t in self.trajectories],
            "parameters": self.parameters,
            "outputs": self.outputs,
        }


def _f0(signal: np.ndarray, fs: float, band: tuple[float, float]) -> Optional[float]:
    try:
        return fundamental_frequency(signal, fs, band)
    except AnalysisError:
        return None


def evaluate_trajectory(model, trajectory: Trajectory, name: str, observation_node: int,
                        band: tuple[float, float]) -> tuple[TrajectoryEvaluation, Optional[Trajectory]]:
    """递推一条测试轨迹；递推失稳时记为 inf 误差"""
    try:
        predicted = recursive_rollout(model, trajectory)
    except InstabilityError as e:
        logger.warning(f"{model.kind} 在 {name} 第 {e.step_index} 步失稳")
        return TrajectoryEvaluation(
            file=name,
            relative_mse=float("inf"),
            displacement_max_error=float("inf"),
            displacement_mean_error=float("inf"),
            unstable_at=e.step_index,
        ), None
    error_map = displacement_error_map(trajectory.q, predicted.q)
    fs = trajectory.meta.time.fs
    return TrajectoryEvaluation(
        file=name,
        relative_mse=relative_mse((trajectory.q, trajectory.p), (predicted.q, predicted.p)),
        displacement_max_error=error_map.max,
        displacement_mean_error=error_map.mean,
        f0_reference=_f0(trajectory.observation(observation_node, "p"), fs, band),
        f0_predicted=_f0(predicted.observation(observation_node, "p"), fs, band),
    ), predicted


def _evaluate_job(job: tuple[str, str, str, int, tuple[float, float]]) -> TrajectoryEvaluation:
    """进程池任务：各自加载检查点与轨迹"""
    checkpoint, path, name, node, band = job
    model, _, _ = load_model(Path(checkpoint))
    result, _ = evaluate_trajectory(model, load_trajectory(Path(path)), name, node, band)
    return result


def evaluate_checkpoint(
    checkpoint: Path,
    dataset_dir: Path,
    output_dir: Optional[Path] = None,
    formats: Sequence[str] = ALL_FORMATS,
    threads: int = 1,
    eval_config: Optional[EvalConfig] = None,
) -> EvaluationReport:
    """在测试集上评估检查点，按 formats 写出 metrics.json、CSV 矩阵与 PNG 图

    eval_config 覆盖检查点内配置文档的 eval 段。
    """
    checkpoint, dataset_dir = Path(checkpoint), Path(dataset_dir)
    model, document, _ = load_model(checkpoint)
    if eval_config is not None:
        document = document.model_copy(update={"eval": eval_config})
    manifest = read_manifest(dataset_dir)
    records = manifest.split("test")
    if document.eval.max_trajectories is not None:
        records = records[:document.eval.max_trajectories]
    if not records:
        raise AnalysisError(f"数据集 {dataset_dir} 没有测试轨迹")
    workers = max(1, min(threads, len(records), os.cpu_count() or 1))
    logger.info(f"评估 {model.kind} 检查点 {checkpoint.name}: {len(records)} 条测试轨迹, workers={workers}")
    node, band = document.observation_node(), document.eval.f0_band
    jobs = [(str(checkpoint), str(dataset_dir / r.file), r.file, node, band) for r in records]
    if workers == 1:
        results = [_evaluate_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_job, jobs))

    report = EvaluationReport(kind=model.kind, checkpoint=str(checkpoint), trajectories=results)
    if isinstance(model, StringPHNN):
        amplitude = document.eval.quartic_amplitude or _max_displacement(dataset_dir, records)
        report.parameters = parameter_report(model, document.string, quartic_amplitude=amplitude).to_dict()

    logger.info(f"{model.kind} 测试相对 MSE: {report.summary()}")
    if output_dir is not None:
        first = load_trajectory(dataset_dir / records[0].file)
        _write_outputs(report, model, first, document, Path(output_dir), set(formats))
    return report


def _max_displacement(dataset_dir: Path, records) -> float:
    peak = max(float(np.max(np.abs(load_trajectory(dataset_dir / r.file).q))) for r in records)
    return peak if peak > 0 else 1e-3


def _write_outputs(report: EvaluationReport, model, trajectory: Trajectory, document,
                   output_dir: Path, formats: set[str]) -> None:
    """以第一条测试轨迹导出矩阵与图"""
    output_dir.mkdir(parents=True, exist_ok=True)
    outputs: list[Path] = []
    node = document.observation_node()
    fs = trajectory.meta.time.fs
    predicted = None
    if "csv" in formats or "png" in formats:
        try:
            predicted = recursive_rollout(model, trajectory)
        except InstabilityError as e:
            logger.warning(f"导出用递推失稳（第 {e.step_index} 步），跳过 CSV/PNG")

    if predicted is not None:
        error_map = displacement_error_map(trajectory.q, predicted.q)
        if "csv" in formats:
            outputs.append(export_matrix_csv(error_map.errors, output_dir / "displacement_error_map.csv"))
            outputs.append(export_node_csv(trajectory, node, output_dir / "reference_observation.csv"))
            outputs.append(export_node_csv(predicted, node, output_dir / "predicted_observation.csv"))
        if "png" in formats:
            cfg = document.eval.spectrogram
            reference_p = trajectory.observation(node, "p")
            predicted_p = predicted.observation(node, "p")
            outputs.append(figures.plot_error_map(error_map.errors, trajectory.meta.time.dt,
                                                  trajectory.meta.grid.h, output_dir / "displacement_error_map.png",
                                                  title=model.kind))
            outputs.append(figures.plot_spectrogram_triptych(
                spectrogram(reference_p, fs, cfg),
                spectrogram(predicted_p, fs, cfg),
                error_spectrogram(reference_p, predicted_p, fs, cfg),
                output_dir / "spectrogram_triptych.png",
                max_frequency=min(fs / 2, 2000.0),
            ))
    if "png" in formats:
        if report.parameters:
            outputs.append(figures.plot_parameter_errors(report.parameters["relative_errors"],
                                                         output_dir / "parameter_errors.png"))
        finite = [(i, t.relative_mse) for i, t in enumerate(report.trajectories) if np.isfinite(t.relative_mse)]
        if finite:
            outputs.append(figures.plot_relative_mse_bars({model.kind: finite}, output_dir / "relative_mse.png"))

    report.outputs = [str(p) for p in outputs]
    if "json" in formats:
        metrics = output_dir / "metrics.json"
        report.outputs.append(str(metrics))
        metrics.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                           encoding="utf-8")
    logger.info(f"评估输出已写入 {output_dir}")


def compare_reports(reports: Sequence[EvaluationReport], path: Path) -> Path:
    """多个检查点的测试相对 MSE 对比图"""
    results: dict[str, list[tuple[int, float]]] = {}
    for report in reports:
        label = f"{report.kind}:{Path(report.checkpoint).parent.name}"
        results[label] = [(i, t.relative_mse) for i, t in enumerate(report.trajectories)
                          if np.isfinite(t.relative_mse)]
    return figures.plot_relative_mse_bars(results, path)
