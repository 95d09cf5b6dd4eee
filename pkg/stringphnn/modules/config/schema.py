"""实验配置数据模型"""

import math
from typing import Optional

from pydantic import Field, field_validator, model_validator

from stringphnn.modules.core.types import (
    ExcitationSpec,
    GridSpec,
    PhysicalParams,
    SavConfig,
    StrictModel,
    TimeSpec,
)


class SavSection(StrictModel):
    """SAV 配置（dt 由 time 段给出）"""
    c0: float = Field(default=1e-12, gt=0, description="SAV 正则常数 (J)")
    lambda_dr: float = Field(default=1e-3, ge=0, le=1, description="漂移抑制增益")


class DatasetSpec(StrictModel):
    """数据集生成配置"""
    n_train: int = Field(default=8, ge=1, description="训练轨迹数")
    n_val: int = Field(default=2, ge=1, description="验证轨迹数")
    n_test: int = Field(default=4, ge=1, description="测试轨迹数")
    t_e_min: float = Field(default=0.005, gt=0, description="拨弦时长下限 (s)")
    t_e_max: float = Field(default=0.030, gt=0, description="拨弦时长上限 (s)")
    f_amp_min: float = Field(default=0.1, gt=0, description="激励幅值下限 (N)")
    f_amp_max: float = Field(default=5.0, gt=0, description="激励幅值上限 (N)")
    node_min_fraction: float = Field(default=0.1, gt=0, lt=1, description="激励位置下限（弦长比例）")
    node_max_fraction: float = Field(default=0.9, gt=0, lt=1, description="激励位置上限（弦长比例）")
    seed: int = Field(default=20240101, ge=0, description="主随机种子")

    @model_validator(mode="after")
    def check_ranges(self) -> "DatasetSpec":
        for lo, hi in (
            ("t_e_min", "t_e_max"),
            ("f_amp_min", "f_amp_max"),
            ("node_min_fraction", "node_max_fraction"),
        ):
            if getattr(self, lo) > getattr(self, hi):
                raise ValueError(f"{lo} 不能大于 {hi}")
        return self

    def node_range(self, grid: GridSpec) -> tuple[int, int]:
        """激励节点的闭区间 [round(0.1·l0/h), round(0.9·l0/h)]，截断到内点"""
        lo = max(1, round(self.node_min_fraction * grid.l0 / grid.h))
        hi = min(grid.n - 1, round(self.node_max_fraction * grid.l0 / grid.h))
        return lo, max(lo, hi)

    @staticmethod
    def observation_node(grid: GridSpec) -> int:
        """观测节点 x_o = floor(√2·l0/(2h))"""
        return int(math.floor(math.sqrt(2.0) * grid.l0 / (2.0 * grid.h)))


class EnergyNetConfig(StrictModel):
    """非线性能量网络配置"""
    hidden: int = Field(default=100, ge=1, description="隐藏层宽度")
    depth: int = Field(default=5, ge=1, description="隐藏层数")
    negative_slope: float = Field(default=0.01, ge=0, lt=1, description="LeakyReLU 负斜率")
    kernel_noise: float = Field(default=1e-2, ge=0, description="卷积核初始化相对噪声")


class BaselineConfig(StrictModel):
    """黑盒基线配置"""
    hidden: int = Field(default=256, ge=1, description="隐藏层宽度")
    depth: int = Field(default=5, ge=1, description="隐藏层数")
    negative_slope: float = Field(default=0.01, ge=0, lt=1, description="LeakyReLU 负斜率")


class TrainConfig(StrictModel):
    """训练配置"""
    batch_size: int = Field(default=128, ge=1, description="批大小")
    learning_rate: float = Field(default=1e-3, gt=0, description="学习率")
    steps: int = Field(default=20000, ge=1, description="优化步数")
    val_interval: int = Field(default=500, ge=1, description="验证间隔（步）")
    val_pairs: int = Field(default=1024, ge=1, description="固定验证样本数")
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4], description="多种子协议")
    grad_clip: Optional[float] = Field(default=1e3, gt=0, description="全局梯度范数裁剪，null 关闭")
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    eps: float = Field(default=1e-8, gt=0)
    init_spread: float = Field(default=0.7, ge=0, description="物理参数初始化 truth·exp(U(-a, a))")
    nan_halving_after: int = Field(default=3, ge=1, description="连续 NaN 批次达到该数时学习率减半")
    nan_abort_after: int = Field(default=10, ge=1, description="连续 NaN 批次达到该数时终止")

    @field_validator("grad_clip", mode="before")
    @classmethod
    def disable_clip(cls, v):
        # TOML 没有 null，false 表示关闭
        return None if v is False else v

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, v: list[int]) -> list[int]:
        if not v:
            raise ValueError("至少需要一个种子")
        if len(set(v)) != len(v):
            raise ValueError(f"种子不能重复: {v}")
        return v


class SpectrogramConfig(StrictModel):
    """STFT 配置"""
    window: str = Field(default="hann", description="窗函数名（scipy.signal.get_window）")
    window_length: int = Field(default=2048, ge=8)
    hop: int = Field(default=512, ge=1)
    n_fft: int = Field(default=2048, ge=8)
    floor_db: float = Field(default=-120.0, description="dB 下限")
    error_floor_db: float = Field(default=-60.0, le=0, description="误差谱图（参考与预测的 dB 差）下限")

    @model_validator(mode="after")
    def check_fft(self) -> "SpectrogramConfig":
        if self.n_fft < self.window_length:
            raise ValueError("n_fft 不能小于窗长")
        return self


class EvalConfig(StrictModel):
    """评估配置"""
    spectrogram: SpectrogramConfig = Field(default_factory=SpectrogramConfig)
    f0_band: tuple[float, float] = Field(default=(20.0, 150.0), description="基频搜索频带 (Hz)")
    observation_node: Optional[int] = Field(default=None, ge=1, description="观测节点，缺省按 √2 规则")
    quartic_amplitude: Optional[float] = Field(default=None, gt=0, description="四次系数拟合幅度，缺省取数据最大位移")
    max_trajectories: Optional[int] = Field(default=None, ge=1, description="最多评估的测试轨迹数")

    @field_validator("f0_band")
    @classmethod
    def validate_band(cls, v: tuple[float, float]) -> tuple[float, float]:
        if not 0 <= v[0] < v[1]:
            raise ValueError(f"频带非法: {v}")
        return v


class ExperimentDocument(StrictModel):
    """完整实验文档，CLI 各命令读取所需的段"""
    string: PhysicalParams = Field(default_factory=PhysicalParams)
    grid: GridSpec = Field(default_factory=GridSpec)
    time: TimeSpec = Field(default_factory=TimeSpec)
    sav: SavSection = Field(default_factory=SavSection)
    excitation: ExcitationSpec = Field(default_factory=ExcitationSpec)
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    energy_net: EnergyNetConfig = Field(default_factory=EnergyNetConfig)
    baseline: BaselineConfig = Field(default_factory=BaselineConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    @model_validator(mode="after")
    def check_excitation(self) -> "ExperimentDocument":
        if not 1 <= self.excitation.node_e <= self.grid.n - 1:
            raise ValueError(f"激励节点 {self.excitation.node_e} 不在内点范围 [1, {self.grid.n - 1}]")
        if self.eval.observation_node is not None and self.eval.observation_node > self.grid.n - 1:
            raise ValueError(f"观测节点 {self.eval.observation_node} 超出网格")
        return self

    def sav_config(self) -> SavConfig:
        return SavConfig(c0=self.sav.c0, lambda_dr=self.sav.lambda_dr, dt=self.time.dt)

    def observation_node(self) -> int:
        if self.eval.observation_node is not None:
            return self.eval.observation_node
        return DatasetSpec.observation_node(self.grid)
