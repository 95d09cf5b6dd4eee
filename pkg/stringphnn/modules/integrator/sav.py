"""交错时间 SAV 单步

状态 (q^{t-1/2}, p^t, ψ^t) -> (q^{t+1/2}, p^{t+1}, ψ^{t+1})：
    1. q^{t+1/2} = q^{t-1/2} + (dt/μ)·p^t
    2. g = ∇H_nl(q^{t+1/2}) / √(2·H_nl(q^{t+1/2}) + c0)
    3. ψ* = ψ^t + (dt/2μ)·g·(p^{t+1} + p^t)
    5. F = -(1/h)·K q^{t+1/2} - (1/h)·g·(ψ* + ψ^t)/2 + G_p·f^{t+1/2}
    6. (I + dt·Dmp)·p^{t+1} = (I - dt·Dmp)·p^t + dt·F
    4. ψ^{t+1} = (1-λ)·ψ* + λ·√(2·H_nl(q̄) + c0)，q̄ 为 q^{t+1/2} 与 q^{t+3/2} 的中点
第 3、5、6 步对 p^{t+1} 线性，合并为 (A + β·g·gᵀ)·p^{t+1} = r，
β = dt²/(4μh)，用 Sherman–Morrison 及两次常系数三对角求解得到。
"""

import numpy as np

from stringphnn.modules.core.errors import InstabilityError
from stringphnn.modules.core.types import SavConfig
from stringphnn.modules.integrator.types import EnergyFunction, StaggeredState
from stringphnn.modules.nn import functional as F
from stringphnn.modules.physics.string_ops import StringOperators


def advance(q, p, psi, force, g_p, energy: EnergyFunction, ops: StringOperators, cfg: SavConfig):
    """执行一步（float/ndarray 与 Tensor 通用）

    psi 形状为 q.shape[:-1] + (1,)，force 可为标量或 (..., 1)。
    """
    dt = cfg.dt
    q_half = q + (dt / ops.mu) * p

    h_value, grad = energy.energy_and_gradient(q_half)
    g = grad / F.sqrt(2.0 * h_value + cfg.c0)

    beta = dt * dt / (4.0 * ops.mu * ops.h)
    forcing = -(ops.stiffness_apply(q_half) / ops.h) - g * psi / ops.h + g_p * force
    rhs = p - dt * ops.damping_apply(p) + dt * forcing - beta * g * F.sum(g * p, axis=-1, keepdims=True)

    diag, off = ops.implicit_coefficients(dt)
    x = F.tridiag_solve(diag, off, rhs)
    y = F.tridiag_solve(diag, off, g)
    gx = F.sum(g * x, axis=-1, keepdims=True)
    gy = F.sum(g * y, axis=-1, keepdims=True)
    p_next = x - beta * y * gx / (1.0 + beta * gy)

    psi_star = psi + (dt / (2.0 * ops.mu)) * F.sum(g * (p_next + p), axis=-1, keepdims=True)
    if cfg.lambda_dr > 0.0:
        psi_next = (1.0 - cfg.lambda_dr) * psi_star + cfg.lambda_dr * reference_psi(
            q_half, p_next, energy, ops, cfg
        )
    else:
        psi_next = psi_star
    return q_half, p_next, psi_next


def reference_psi(q_half, p_next, energy: EnergyFunction, ops: StringOperators, cfg: SavConfig):
    """√(2·H_nl(q̄) + c0)，q̄ = (q^{t+1/2} + q^{t+3/2})/2"""
    q_after = q_half + (cfg.dt / ops.mu) * p_next
    q_mid = 0.5 * (q_half + q_after)
    return F.sqrt(2.0 * energy.energy(q_mid) + cfg.c0)


def auxiliary_before_drift(q_half, p, p_next, psi, energy: EnergyFunction, ops: StringOperators, cfg: SavConfig):
    """重算漂移抑制前的 ψ*（能量审计用）"""
    h_value, grad = energy.energy_and_gradient(q_half)
    g = grad / F.sqrt(2.0 * h_value + cfg.c0)
    return psi + (cfg.dt / (2.0 * ops.mu)) * F.sum(g * (p_next + p), axis=-1, keepdims=True)


def initial_psi(q, p, energy: EnergyFunction, ops: StringOperators, cfg: SavConfig):
    """ψ^t = √(2·H_nl(q̄^t) + c0)，q̄^t 为 q^{t-1/2} 与 q^{t+1/2} 的中点"""
    q_next = q + (cfg.dt / ops.mu) * p
    q_mid = 0.5 * (q + q_next)
    return F.sqrt(2.0 * energy.energy(q_mid) + cfg.c0)


def sav_step(
    state: StaggeredState,
    f_half: float,
    g_p: np.ndarray,
    energy: EnergyFunction,
    ops: StringOperators,
    cfg: SavConfig,
) -> StaggeredState:
    """推进一步，出现非有限值时抛出 InstabilityError"""
    ops.check_shape(state.q_half)
    ops.check_shape(state.p_int)
    psi = np.array([state.psi], dtype=np.float64)
    q_half, p_next, psi_next = advance(
        np.asarray(state.q_half, dtype=np.float64),
        np.asarray(state.p_int, dtype=np.float64),
        psi,
        float(f_half),
        g_p,
        energy,
        ops,
        cfg,
    )
    result = StaggeredState(q_half=q_half, p_int=p_next, psi=float(psi_next[0]), step_index=state.step_index + 1)
    if not result.is_finite():
        raise InstabilityError("SAV 状态出现非有限值", step_index=result.step_index)
    return result
