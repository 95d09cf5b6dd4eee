"""评估图表（PNG，Agg 后端）"""

from pathlib import Path
from typing import Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from stringphnn.modules.eval.spectral import Spectrogram  # noqa: E402

DPI = 120


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_relative_mse_bars(results: Mapping[str, Sequence[tuple[int, float]]], path: Path) -> Path:
    """各模型逐种子的测试相对 MSE（对数坐标）

    results: {模型名: [(seed, relative_mse), ...]}
    """
    fig, ax = plt.subplots(figsize=(7, 4))
    names = list(results)
    width = 0.8 / max(len(names), 1)
    for i, name in enumerate(names):
        seeds = [s for s, _ in results[name]]
        values = [max(v, np.finfo(np.float64).tiny) for _, v in results[name]]
        ax.bar(np.arange(len(seeds)) + i * width, values, width=width, label=name)
    longest = max((len(v) for v in results.values()), default=0)
    ax.set_xticks(np.arange(longest) + 0.4 - width / 2)
    ax.set_xticklabels([f"init {k}" for k in range(longest)])
    ax.set_yscale("log")
    ax.set_ylabel("test relative MSE")
    ax.legend()
    return _save(fig, path)


def plot_parameter_errors(errors: Mapping[str, float], path: Path) -> Path:
    """参数相对绝对误差柱状图"""
    fig, ax = plt.subplots(figsize=(7, 4))
    names = list(errors)
    values = [max(errors[n], np.finfo(np.float64).tiny) for n in names]
    ax.bar(names, values, color="tab:blue")
    ax.set_yscale("log")
    ax.set_ylabel("relative absolute error")
    ax.tick_params(axis="x", rotation=45)
    return _save(fig, path)


def plot_error_map(errors: np.ndarray, dt: float, h: float, path: Path, title: Optional[str] = None) -> Path:
    """位移绝对误差时空图，横轴位置、纵轴时间"""
    fig, ax = plt.subplots(figsize=(6, 5))
    steps, nodes = errors.shape
    image = ax.imshow(
        errors,
        aspect="auto",
        origin="lower",
        extent=(h * 0.5, h * (nodes + 0.5), 0.0, steps * dt),
        cmap="viridis",
    )
    fig.colorbar(image, ax=ax, label="|q_ref - q_pred| (m)")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("t (s)")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_spectrogram_triptych(
    reference: Spectrogram,
    predicted: Spectrogram,
    error: Spectrogram,
    path: Path,
    max_frequency: Optional[float] = None,
) -> Path:
    """参考 / 预测 / 误差三联频谱图

    误差面板是 dB 差，用发散色图，色标关于 0 对称。
    """
    fig, axes = plt.subplots(1, 3, figsize=(15, 4), sharey=True)
    top = max_frequency or float(reference.frequencies[-1])
    vmax = float(max(np.max(reference.magnitude_db), np.max(predicted.magnitude_db)))
    for ax, spec, title in zip(axes[:2], (reference, predicted), ("reference", "prediction")):
        image = ax.pcolormesh(spec.times, spec.frequencies, spec.magnitude_db.T, shading="nearest",
                              vmin=spec.floor_db, vmax=vmax, cmap="magma")
        ax.set_title(title)
    fig.colorbar(image, ax=axes[:2], label="dB")

    bound = float(max(abs(error.floor_db), np.max(np.abs(error.magnitude_db)), 1.0))
    image = axes[2].pcolormesh(error.times, error.frequencies, error.magnitude_db.T, shading="nearest",
                               vmin=-bound, vmax=bound, cmap="coolwarm")
    axes[2].set_title("error (ref - pred)")
    fig.colorbar(image, ax=axes[2], label="dB")

    for ax in axes:
        ax.set_ylim(0.0, top)
        ax.set_xlabel("t (s)")
    axes[0].set_ylabel("f (Hz)")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_training_curve(steps, train_loss, val_loss, path: Path) -> Path:
    """训练 / 验证损失曲线"""
    fig, ax = plt.subplots(figsize=(6, 4))
    train = np.array([np.nan if v is None else v for v in train_loss], dtype=np.float64)
    ax.semilogy(steps, train, "o-", label="train")
    ax.semilogy(steps, val_loss, "s-", label="validation")
    ax.set_xlabel("step")
    ax.set_ylabel("MAE / dt")
    ax.legend()
    return _save(fig, path)


def plot_spectrogram(spec: Spectrogram, path: Path, max_frequency: Optional[float] = None) -> Path:
    """单幅频谱图"""
    fig, ax = plt.subplots(figsize=(6, 4))
    image = ax.pcolormesh(spec.times, spec.frequencies, spec.magnitude_db.T, shading="nearest",
                          vmin=spec.floor_db, cmap="magma")
    ax.set_ylim(0.0, max_frequency or float(spec.frequencies[-1]))
    ax.set_xlabel("t (s)")
    ax.set_ylabel("f (Hz)")
    fig.colorbar(image, ax=ax, label="dB")
    return _save(fig, path)
