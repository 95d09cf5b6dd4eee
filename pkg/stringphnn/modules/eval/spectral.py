"""短时傅里叶分析与基频估计"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import get_window

from stringphnn.modules.config.schema import SpectrogramConfig
from stringphnn.modules.core.errors import AnalysisError

F0_PADDING = 8


@dataclass
class Spectrogram:
    """幅度谱（dB），形状 (帧数, n_fft/2 + 1)"""
    times: np.ndarray
    frequencies: np.ndarray
    magnitude_db: np.ndarray
    floor_db: float

    def to_dict(self) -> dict:
        return {
            "frames": int(self.magnitude_db.shape[0]),
            "bins": int(self.magnitude_db.shape[1]),
            "floor_db": self.floor_db,
            "peak_db": float(np.max(self.magnitude_db)),
        }

    def dominant_frequencies(self) -> np.ndarray:
        """每帧幅度最大的频点"""
        return self.frequencies[np.argmax(self.magnitude_db, axis=1)]


def _frames(signal: np.ndarray, cfg: SpectrogramConfig) -> np.ndarray:
    """按窗长与跳长切帧；信号短于窗长时补零到一帧"""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise AnalysisError(f"只支持一维信号，实际形状 {signal.shape}")
    if signal.size < cfg.window_length:
        signal = np.pad(signal, (0, cfg.window_length - signal.size))
    return np.lib.stride_tricks.sliding_window_view(signal, cfg.window_length)[::cfg.hop]


def stft_magnitude(signal, cfg: SpectrogramConfig) -> np.ndarray:
    """线性幅度 |rfft(x·w, n_fft)|"""
    window = get_window(cfg.window, cfg.window_length, fftbins=True)
    return np.abs(np.fft.rfft(_frames(signal, cfg) * window, n=cfg.n_fft, axis=-1))


def spectrogram(signal, fs: float, cfg: Optional[SpectrogramConfig] = None) -> Spectrogram:
    """20·log10|X|，低于 floor_db 的值截断到 floor_db"""
    cfg = cfg or SpectrogramConfig()
    magnitude = stft_magnitude(signal, cfg)
    floor = 10.0 ** (cfg.floor_db / 20.0)
    magnitude_db = 20.0 * np.log10(np.maximum(magnitude, floor))
    times = (np.arange(magnitude.shape[0]) * cfg.hop + cfg.window_length / 2) / fs
    frequencies = np.fft.rfftfreq(cfg.n_fft, d=1.0 / fs)
    return Spectrogram(times=times, frequencies=frequencies, magnitude_db=magnitude_db, floor_db=cfg.floor_db)


def error_spectrogram(reference, predicted, fs: float, cfg: Optional[SpectrogramConfig] = None) -> Spectrogram:
    """参考与预测谱图的 dB 差 S_ref - S_pred，低于 error_floor_db 的值截断

    只比较幅度，反相但幅度相同的预测误差为 0 dB。
    """
    cfg = cfg or SpectrogramConfig()
    reference = np.asarray(reference, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if reference.shape != predicted.shape:
        raise AnalysisError(f"参考与预测长度不符: {reference.shape} vs {predicted.shape}")
    ref = spectrogram(reference, fs, cfg)
    pred = spectrogram(predicted, fs, cfg)
    difference = np.maximum(ref.magnitude_db - pred.magnitude_db, cfg.error_floor_db)
    return Spectrogram(times=ref.times, frequencies=ref.frequencies, magnitude_db=difference,
                       floor_db=cfg.error_floor_db)


def frame_energies(signal, cfg: Optional[SpectrogramConfig] = None) -> tuple[np.ndarray, np.ndarray]:
    """逐帧 (加窗时域能量 Σ(x·w)², 由 rfft 按 Parseval 还原的能量)"""
    cfg = cfg or SpectrogramConfig()
    window = get_window(cfg.window, cfg.window_length, fftbins=True)
    frames = _frames(signal, cfg) * window
    time_energy = np.sum(frames * frames, axis=-1)
    power = np.abs(np.fft.rfft(frames, n=cfg.n_fft, axis=-1)) ** 2
    # 单边谱：除直流与（偶数长度时的）奈奎斯特点外计两次
    weights = np.full(power.shape[-1], 2.0)
    weights[0] = 1.0
    if cfg.n_fft % 2 == 0:
        weights[-1] = 1.0
    spectral_energy = np.sum(power * weights, axis=-1) / cfg.n_fft
    return time_energy, spectral_energy


def fundamental_frequency(signal, fs: float, band: tuple[float, float] = (20.0, 150.0)) -> float:
    """频带内幅度谱峰值频率，对数幅度抛物线插值

    去均值、Hann 加窗、补零到 8 倍长度。
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1 or x.size < 4:
        raise AnalysisError(f"信号过短或维数错误: {x.shape}")
    scale = float(np.max(np.abs(x)))
    x = x - np.mean(x)
    n_fft = int(2 ** np.ceil(np.log2(F0_PADDING * x.size)))
    spectrum = np.abs(np.fft.rfft(x * get_window("hann", x.size, fftbins=False), n=n_fft))
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / fs)

    in_band = np.flatnonzero((freqs >= band[0]) & (freqs <= band[1]))
    if in_band.size == 0:
        raise AnalysisError(f"频带 {band} 内没有频点 (fs={fs})")
    k = int(in_band[np.argmax(spectrum[in_band])])
    peak = spectrum[k]
    if not np.isfinite(peak) or peak == 0.0 or peak <= 1e-12 * scale * x.size:
        raise AnalysisError("信号在频带内没有谱峰")
    if 0 < k < spectrum.size - 1 and spectrum[k - 1] > 0 and spectrum[k + 1] > 0:
        a, b, c = np.log(spectrum[k - 1]), np.log(peak), np.log(spectrum[k + 1])
        denominator = a - 2.0 * b + c
        offset = 0.5 * (a - c) / denominator if denominator != 0 else 0.0
        return float(freqs[k] + offset * (freqs[1] - freqs[0]))
    return float(freqs[k])


@dataclass
class PitchGlide:
    """早、晚两个时间窗的基频"""
    early_hz: float
    late_hz: float

    @property
    def glide_hz(self) -> float:
        return self.early_hz - self.late_hz

    def to_dict(self) -> dict:
        return {"early_hz": self.early_hz, "late_hz": self.late_hz, "glide_hz": self.glide_hz}


def pitch_glide(
    signal,
    fs: float,
    early: tuple[float, float],
    late: tuple[float, float],
    band: tuple[float, float] = (20.0, 150.0),
) -> PitchGlide:
    """分别估计 [early) 与 [late) 时间窗（秒）内的基频"""
    x = np.asarray(signal, dtype=np.float64)

    def window(span: tuple[float, float]) -> np.ndarray:
        start, stop = int(round(span[0] * fs)), int(round(span[1] * fs))
        if not 0 <= start < stop <= x.size:
            raise AnalysisError(f"时间窗 {span} 超出信号范围 (长度 {x.size / fs:.4f}s)")
        return x[start:stop]

    return PitchGlide(
        early_hz=fundamental_frequency(window(early), fs, band),
        late_hz=fundamental_frequency(window(late), fs, band),
    )
