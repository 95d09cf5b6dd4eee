"""参数报告与四次系数提取"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from stringphnn.modules.core.operators import d_minus, sine_mode
from stringphnn.modules.core.types import GridSpec, PhysicalParams
from stringphnn.modules.integrator.types import EnergyFunction
from stringphnn.modules.nn import functional as F

REPORTED = ("rho", "radius", "mu", "youngs", "tension", "inertia", "nonlinear_coefficient", "eta0", "eta1")


@dataclass
class ParameterReport:
    """暴露参数、组合量及相对误差"""
    values: dict[str, float]
    truth: Optional[dict[str, float]] = None
    errors: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"values": self.values, "truth": self.truth, "relative_errors": self.errors}


def extract_quartic_coefficient(
    energy: EnergyFunction,
    grid: GridSpec,
    amplitude: float,
    modes: int = 3,
    points: int = 16,
) -> float:
    """沿前几阶正弦模态拟合 H(α·φ_k) ≈ Σ c_j α^j，取 c4 / (h·Σ(D⁻φ_k)⁴) 的中位数"""
    if not amplitude > 0:
        raise ValueError(f"拟合幅度必须为正: {amplitude}")
    u = np.linspace(-1.0, 1.0, points)
    estimates = []
    for k in range(1, min(modes, grid.n - 1) + 1):
        phi = sine_mode(k, grid.n)
        states = (amplitude * u)[:, None] * phi[None, :]
        values = F.value(energy.energy(states))[:, 0]
        coeffs = np.polynomial.polynomial.polyfit(u, values, 4)
        c4 = coeffs[4] / amplitude**4
        estimates.append(c4 / (grid.h * np.sum(d_minus(phi, grid.h) ** 4)))
    return float(np.median(estimates))


def composites(values: dict[str, float], nonlinear_coefficient: Optional[float]) -> dict[str, float]:
    """由 θ 计算 μ、I 等组合量"""
    area = np.pi * values["radius"] ** 2
    out = {
        "rho": values["rho"],
        "radius": values["radius"],
        "mu": values["rho"] * area,
        "youngs": values["youngs"],
        "tension": values["tension"],
        "inertia": np.pi * values["radius"] ** 4 / 4.0,
        "eta0": values["eta0"],
        "eta1": values["eta1"],
    }
    if nonlinear_coefficient is not None:
        out["nonlinear_coefficient"] = nonlinear_coefficient
    return {k: float(out[k]) for k in REPORTED if k in out}


def parameter_report(
    model,
    truth: Optional[PhysicalParams] = None,
    quartic_amplitude: Optional[float] = None,
) -> ParameterReport:
    """StringPHNN 的暴露参数与组合量；给定真值时附相对绝对误差 |θ̂-θ|/θ"""
    nonlinear = None
    if quartic_amplitude is not None:
        nonlinear = extract_quartic_coefficient(model.energy, model.grid, quartic_amplitude)
    values = composites(model.physical.values(), nonlinear)
    if truth is None:
        return ParameterReport(values=values)
    reference = {k: float(v) for k, v in truth.composites().items() if k in values}
    errors = {k: abs(values[k] - reference[k]) / abs(reference[k]) for k in reference}
    return ParameterReport(values=values, truth=reference, errors=errors)
