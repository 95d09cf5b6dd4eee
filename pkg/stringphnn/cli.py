"""stringphnn 命令行入口

子命令: simulate / gen-data / train / eval / inspect
退出码: 0 成功, 1 其他错误, 2 配置错误, 3 数值失稳, 4 文件读写错误
"""

import argparse
import json
import platform
import sys
import time as _time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
from loguru import logger

from stringphnn import __version__
from stringphnn.modules.config.loader import config_loader
from stringphnn.modules.config.schema import ExperimentDocument
from stringphnn.modules.config.settings import get_settings
from stringphnn.modules.core.errors import (
    AnalysisError,
    ConfigurationError,
    DataFormatError,
    InstabilityError,
    StringLabError,
)
from stringphnn.utils.hashing import config_hash
from stringphnn.utils.logger import setup_logger

FORMATS = ("json", "csv", "png")
RUN_MANIFEST = "manifest.json"


# ============================================================================
# 公共工具
# ============================================================================

def _load_document(args) -> ExperimentDocument:
    if args.config:
        return config_loader.load(Path(args.config))
    logger.info("未指定 --config，使用内置桌面规模默认配置")
    return ExperimentDocument()


def _output_dir(args, command: str) -> Path:
    root = Path(args.output) if args.output else get_settings().output_root / command
    root.mkdir(parents=True, exist_ok=True)
    return root


def _threads(args) -> int:
    return args.threads if args.threads is not None else get_settings().threads


def _formats(args) -> tuple[str, ...]:
    return tuple(args.format) if args.format else FORMATS


def _write_json(path: Path, data: Any) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


class RunManifest:
    """每个命令写出的运行清单：命令、配置哈希、种子、版本、平台与计时"""

    def __init__(self, command: str, argv: Sequence[str]):
        self.command = command
        self.argv = list(argv)
        self.started = datetime.now(timezone.utc)
        self._clock = _time.perf_counter()
        self.data: dict[str, Any] = {}

    def write(self, output_dir: Path, document: Optional[ExperimentDocument] = None,
              seed: Optional[Any] = None, **extra) -> Path:
        finished = datetime.now(timezone.utc)
        manifest = {
            "command": self.command,
            "argv": self.argv,
            "version": __version__,
            "platform": platform.platform(),
            "python": platform.python_version(),
            "config_hash": config_hash(document) if document is not None else None,
            "document": document.model_dump(mode="json") if document is not None else None,
            "seed": seed,
            "started": self.started.isoformat(),
            "finished": finished.isoformat(),
            "elapsed_seconds": round(_time.perf_counter() - self._clock, 3),
            **self.data,
            **extra,
        }
        return _write_json(Path(output_dir) / RUN_MANIFEST, manifest)


# ============================================================================
# 子命令
# ============================================================================

def cmd_simulate(args, run: RunManifest) -> None:
    """真值仿真 + 能量审计 + 可选导出"""
    from stringphnn.modules.datagen.export import export_matrix_csv, export_node_csv
    from stringphnn.modules.datagen.trajectory import write_trajectory
    from stringphnn.modules.eval import figures
    from stringphnn.modules.eval.spectral import fundamental_frequency, spectrogram
    from stringphnn.modules.integrator.audit import energy_audit
    from stringphnn.modules.integrator.rollout import rollout, zero_state
    from stringphnn.modules.integrator.stability import stability_check
    from stringphnn.modules.physics.components import GroundTruthComponents
    from stringphnn.modules.physics.excitation import excitation_signal
    from stringphnn.modules.physics.modal import ideal_fundamental

    document = _load_document(args)
    output = _output_dir(args, "simulate")
    formats = _formats(args)
    c = GroundTruthComponents.build(document.string, document.grid)
    cfg = document.sav_config()
    dt_max = stability_check(c, cfg, strict=True)

    excitation = document.excitation
    forces = excitation_signal(excitation, document.time)
    trajectory = rollout(zero_state(c), forces, excitation.node_e, c, cfg, excitation=excitation,
                         provenance={"command": "simulate"})
    audit = energy_audit(trajectory, c, cfg)
    write_trajectory(output / "trajectory.strtrj", trajectory)

    node = document.observation_node()
    signal = trajectory.observation(node, "p")
    try:
        f0 = fundamental_frequency(signal, document.time.fs, document.eval.f0_band)
    except AnalysisError as e:
        logger.warning(f"基频估计失败: {e}")
        f0 = None
    report = {
        "energy_audit": audit.to_dict(),
        "passive": audit.is_passive(),
        "dt_max": dt_max,
        "observation_node": node,
        "fundamental_frequency": f0,
        "ideal_fundamental": ideal_fundamental(document.string, document.grid.l0),
        "trajectory": trajectory.summary(),
    }
    logger.info(f"能量审计最大相对残差 {audit.max_relative_residual:.3e}, f0={f0}")
    if "json" in formats:
        _write_json(output / "energy_audit.json", report)
    if "csv" in formats:
        export_node_csv(trajectory, node, output / "observation.csv")
        table = np.column_stack([audit.stored[1:], audit.dissipated, audit.injected, audit.drift, audit.residual])
        export_matrix_csv(table, output / "energy_audit.csv", header="stored,dissipated,injected,drift,residual")
    if "png" in formats:
        spec = spectrogram(signal, document.time.fs, document.eval.spectrogram)
        figures.plot_spectrogram(spec, output / "spectrogram.png", max_frequency=min(document.time.fs / 2, 2000.0))
    print(json.dumps({"max_relative_residual": audit.max_relative_residual, "fundamental_frequency": f0,
                      "output": str(output)}, ensure_ascii=False))
    run.write(output, document, seed=args.seed, max_relative_residual=audit.max_relative_residual)


def cmd_gen_data(args, run: RunManifest) -> None:
    """按数据集配置生成 train/val/test 轨迹"""
    from stringphnn.modules.datagen.generator import generate_dataset

    document = _load_document(args)
    if args.seed is not None:
        document = document.model_copy(update={"dataset": document.dataset.model_copy(update={"seed": args.seed})})
    output = _output_dir(args, "dataset")
    manifest = generate_dataset(document, output, threads=_threads(args))
    worst = max(r.audit_max_relative_residual for r in manifest.records)
    print(json.dumps({"dataset_hash": manifest.dataset_hash, "trajectories": len(manifest.records),
                      "max_audit_residual": worst, "output": str(output)}, ensure_ascii=False))
    run.write(output, document, seed=document.dataset.seed, dataset_hash=manifest.dataset_hash)


def cmd_train(args, run: RunManifest) -> None:
    """多种子训练"""
    from stringphnn.modules.train.multi_seed import multi_seed

    document = _load_document(args)
    seeds = args.seeds if args.seeds else ([args.seed] if args.seed is not None else document.train.seeds)
    if args.steps is not None:
        document = document.model_copy(update={"train": document.train.model_copy(update={"steps": args.steps})})
    output = _output_dir(args, "train")
    kinds = ("phnn", "baseline") if args.model == "both" else (args.model,)
    summaries = {}
    for kind in kinds:
        summary = multi_seed(kind, document, Path(args.data), output_dir=output, seeds=seeds,
                             threads=_threads(args))
        summaries[kind] = {"statistics": summary.statistics(), "best_seed": summary.best.seed,
                           "best_checkpoint": summary.best.checkpoint_path}
    if len(kinds) > 1 and "png" in _formats(args):
        from stringphnn.modules.eval import figures

        scores = {k: [(s, v) for s, v in _seed_scores(output, k) if np.isfinite(v)] for k in kinds}
        figures.plot_relative_mse_bars(scores, output / "relative_mse_comparison.png")
    print(json.dumps(summaries, indent=2, ensure_ascii=False))
    run.write(output, document, seed=list(seeds), summaries=summaries)


def _seed_scores(output: Path, kind: str) -> list[tuple[int, float]]:
    from stringphnn.modules.train.multi_seed import SUMMARY_NAME

    data = json.loads((output / kind / SUMMARY_NAME).read_text(encoding="utf-8"))
    return [(r["seed"], r["test_relative_mse"]) for r in data["results"]]


def cmd_eval(args, run: RunManifest) -> None:
    """评估一个或多个检查点"""
    from stringphnn.modules.eval.report import compare_reports, evaluate_checkpoint

    eval_config = config_loader.load(Path(args.config)).eval if args.config else None
    output = _output_dir(args, "eval")
    checkpoints = [Path(p) for p in args.checkpoint]
    reports = []
    for index, checkpoint in enumerate(checkpoints):
        target = output if len(checkpoints) == 1 else output / f"{index}_{checkpoint.parent.name}"
        reports.append(evaluate_checkpoint(checkpoint, Path(args.data), target, formats=_formats(args),
                                           threads=_threads(args), eval_config=eval_config))
    if len(reports) > 1 and "png" in _formats(args):
        compare_reports(reports, output / "relative_mse_comparison.png")
    summary = {r.checkpoint: r.summary() for r in reports}
    print(json.dumps(summary, indent=2, ensure_ascii=False))
    run.write(output, None, seed=None, relative_mse=summary)


def cmd_inspect(args, run: RunManifest) -> None:
    """查看轨迹文件、检查点或数据集目录"""
    from stringphnn.modules.datagen.generator import MANIFEST_NAME, read_manifest
    from stringphnn.modules.datagen.trajectory import MAGIC as TRAJECTORY_MAGIC, load_trajectory
    from stringphnn.modules.nn.checkpoint import MAGIC as CHECKPOINT_MAGIC, load_checkpoint, sidecar_path

    path = Path(args.path)
    seed: Optional[Any] = None
    source_hash: Optional[str] = None
    if path.is_dir():
        if not (path / MANIFEST_NAME).exists():
            raise DataFormatError(f"目录中没有数据集清单: {path}")
        manifest = read_manifest(path)
        info = {
            "type": "dataset",
            "dataset_hash": manifest.dataset_hash,
            "config_hash": manifest.config_hash,
            "master_seed": manifest.master_seed,
            "splits": {s: len(manifest.split(s)) for s in ("train", "val", "test")},
            "max_audit_residual": max((r.audit_max_relative_residual for r in manifest.records), default=None),
        }
        seed, source_hash = manifest.master_seed, manifest.config_hash
    else:
        with open(path, "rb") as fh:
            magic = fh.read(8)
        if magic == TRAJECTORY_MAGIC:
            trajectory = load_trajectory(path)
            info = {"type": "trajectory", "meta": trajectory.meta.to_dict(), "summary": trajectory.summary()}
            seed = info["meta"].get("seed")
        elif magic == CHECKPOINT_MAGIC:
            checkpoint = load_checkpoint(path)
            info = {"type": "checkpoint", **checkpoint.summary()}
            sidecar = sidecar_path(path)
            if sidecar.exists():
                info["sidecar"] = json.loads(sidecar.read_text(encoding="utf-8"))
                seed = info["sidecar"].get("seed")
                source_hash = info["sidecar"].get("config_hash")
        else:
            raise DataFormatError(f"无法识别的文件类型: {path}")
    print(json.dumps(info, indent=2, sort_keys=True, ensure_ascii=False))
    # 被查看对象的配置哈希写进清单的 config_hash
    run.write(_output_dir(args, "inspect"), None, seed=seed, config_hash=source_hash, path=str(path), info=info)


# ============================================================================
# 参数解析与入口
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stringphnn",
        description="非线性阻尼弦仿真与 StringPHNN 灰盒辨识",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None, help="控制台日志级别（默认取 STRINGPHNN_LOG_LEVEL）")
    sub = parser.add_subparsers(dest="command", help="子命令")

    def common(p: argparse.ArgumentParser, config: bool = True) -> None:
        if config:
            p.add_argument("--config", help="实验配置文件 (.toml/.json/.yaml)")
        p.add_argument("--output", help="输出目录（默认 STRINGPHNN_OUTPUT_ROOT 下按命令分目录）")
        p.add_argument("--threads", type=int, default=None, help="最大并行进程数")
        p.add_argument("--format", action="append", choices=FORMATS, help="输出格式，可重复；默认全部")

    # simulate
    p_sim = sub.add_parser("simulate", help="真值仿真与能量审计")
    common(p_sim)
    p_sim.add_argument("--seed", type=int, default=None, help="记录在清单中的种子（仿真本身是确定性的）")

    # gen-data
    p_gen = sub.add_parser("gen-data", help="生成数据集")
    common(p_gen)
    p_gen.add_argument("--seed", type=int, default=None, help="覆盖 dataset.seed")

    # train
    p_train = sub.add_parser("train", help="训练（多种子）")
    common(p_train)
    p_train.add_argument("--model", choices=("phnn", "baseline", "both"), default="phnn", help="模型类型")
    p_train.add_argument("--data", required=True, help="数据集目录")
    p_train.add_argument("--seed", type=int, default=None, help="单个训练种子")
    p_train.add_argument("--seeds", type=int, nargs="+", default=None, help="训练种子列表（覆盖 train.seeds）")
    p_train.add_argument("--steps", type=int, default=None, help="覆盖 train.steps")

    # eval
    p_eval = sub.add_parser("eval", help="评估检查点")
    common(p_eval)
    p_eval.add_argument("--checkpoint", action="append", required=True, help="检查点文件，可重复")
    p_eval.add_argument("--data", required=True, help="数据集目录")

    # inspect
    p_inspect = sub.add_parser("inspect", help="查看轨迹、检查点或数据集")
    p_inspect.add_argument("path", help="文件或数据集目录")
    p_inspect.add_argument("--output", help="运行清单目录（默认 STRINGPHNN_OUTPUT_ROOT/inspect）")

    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "inspect": cmd_inspect,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """解析参数并执行子命令，返回退出码"""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 1

    settings = get_settings()
    setup_logger(level=args.log_level or settings.log_level, log_dir=settings.log_dir)
    run = RunManifest(args.command, argv)
    try:
        COMMANDS[args.command](args, run)
    except ConfigurationError as e:
        logger.error(f"配置错误: {e}")
        return 2
    except InstabilityError as e:
        logger.error(f"数值失稳: {e}")
        return 3
    except OSError as e:
        logger.error(f"文件读写错误: {e}")
        return 4
    except StringLabError as e:
        logger.error(f"运行失败: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
