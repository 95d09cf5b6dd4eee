"""经过校验的物理与离散化配置类型"""

import math
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from stringphnn.modules.core.errors import ConfigurationError


class StrictModel(BaseModel):
    """不可变、拒绝未知键的配置基类"""

    model_config = ConfigDict(extra="forbid", frozen=True)


class PhysicalParams(StrictModel):
    """弦的物理参数 θ = (ρ, R, T, E, η0, η1)"""

    rho: float = Field(default=8000.0, gt=0, description="体密度 (kg/m³)")
    radius: float = Field(default=4.0e-4, gt=0, description="弦半径 R (m)")
    tension: float = Field(default=60.0, gt=0, description="张力 T (N)")
    youngs: float = Field(default=2.0e11, gt=0, description="杨氏模量 E (Pa)")
    # 阻尼允许为 0，用于无损情形的验证
    eta0: float = Field(default=0.9, ge=0, description="频率无关阻尼 (1/s)")
    eta1: float = Field(default=4.0e-4, ge=0, description="频率相关阻尼 (m²/s)")

    @model_validator(mode="after")
    def check_string_regime(self) -> "PhysicalParams":
        if self.youngs * self.area - self.tension <= 0:
            raise ValueError(
                f"EA - T 必须为正 (EA={self.youngs * self.area:.6g}, T={self.tension:.6g})"
            )
        return self

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def inertia(self) -> float:
        return math.pi * self.radius**4 / 4.0

    @property
    def mu(self) -> float:
        """线密度 ρA"""
        return self.rho * self.area

    @property
    def ea(self) -> float:
        return self.youngs * self.area

    @property
    def ei(self) -> float:
        return self.youngs * self.inertia

    @property
    def nonlinear_coefficient(self) -> float:
        """四次拉伸能系数 (EA - T)/8"""
        return (self.ea - self.tension) / 8.0

    def composites(self) -> dict[str, float]:
        """报告用的参数与组合量"""
        return {
            "rho": self.rho,
            "radius": self.radius,
            "mu": self.mu,
            "youngs": self.youngs,
            "tension": self.tension,
            "inertia": self.inertia,
            "nonlinear_coefficient": self.nonlinear_coefficient,
            "eta0": self.eta0,
            "eta1": self.eta1,
        }


class GridSpec(StrictModel):
    """空间网格 x_s = s·h, l0 = N·h"""

    n: int = Field(default=32, ge=4, description="节点数 N")
    l0: float = Field(default=1.1, gt=0, description="弦长 (m)")
    h: Optional[float] = Field(default=None, gt=0, description="网格间距，缺省为 l0/N")

    @model_validator(mode="before")
    @classmethod
    def fill_spacing(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        n = data.get("n", 32)
        l0 = data.get("l0", 1.1)
        h = data.get("h")
        if h is None:
            data["h"] = l0 / n
        elif not math.isclose(n * h, l0, rel_tol=1e-12):
            raise ValueError(f"l0 必须等于 N·h: N={n}, h={h}, l0={l0}")
        return data

    @property
    def interior(self) -> int:
        """内点自由度 N - 1"""
        return self.n - 1

    def node_positions(self) -> list[float]:
        return [s * self.h for s in range(1, self.n)]


class TimeSpec(StrictModel):
    """时间离散化"""

    fs: float = Field(default=16000.0, gt=0, description="采样率 (Hz)")
    ts: float = Field(default=0.25, gt=0, description="仿真时长 (s)")

    @model_validator(mode="after")
    def check_steps(self) -> "TimeSpec":
        if self.step_count < 2:
            raise ValueError(f"步数过少: round(ts·fs) = {self.step_count}")
        return self

    @property
    def dt(self) -> float:
        return 1.0 / self.fs

    @property
    def step_count(self) -> int:
        return int(round(self.ts * self.fs))


class ExcitationSpec(StrictModel):
    """拨弦激励"""

    f_amp: float = Field(default=1.0, gt=0, description="激励幅值 (N)")
    t_e: float = Field(default=0.01, gt=0, description="拨弦时长 (s)")
    node_e: int = Field(default=16, ge=1, description="激励节点 s_e")

    def check_grid(self, grid: GridSpec) -> None:
        if not 1 <= self.node_e <= grid.n - 1:
            raise ConfigurationError(
                f"激励节点 {self.node_e} 不在内点范围 [1, {grid.n - 1}]"
            )


class SavConfig(StrictModel):
    """SAV 积分器配置"""

    c0: float = Field(default=1e-12, gt=0, description="SAV 正则常数 (J)")
    lambda_dr: float = Field(default=1e-3, ge=0, le=1, description="漂移抑制增益")
    dt: float = Field(gt=0, description="时间步长 (s)")
