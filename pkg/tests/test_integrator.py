"""SAV 积分器：能量平衡、漂移抑制与稳定界"""

import numpy as np
import pytest

from stringphnn.modules.config.loader import ConfigLoader
from stringphnn.modules.core.errors import ConfigurationError, InstabilityError
from stringphnn.modules.core.operators import laplacian_eigenvalue, sine_mode
from stringphnn.modules.core.types import ExcitationSpec, GridSpec, PhysicalParams, SavConfig, TimeSpec
from stringphnn.modules.integrator.audit import energy_audit
from stringphnn.modules.integrator.rollout import rollout, zero_state
from stringphnn.modules.integrator.sav import initial_psi, sav_step
from stringphnn.modules.integrator.stability import max_eigenvalue, stability_check
from stringphnn.modules.integrator.types import StaggeredState
from stringphnn.modules.physics.components import GroundTruthComponents
from stringphnn.modules.physics.energy import ZeroEnergy
from stringphnn.modules.physics.excitation import excitation_signal, node_input_vector
from stringphnn.utils.paths import CONFIG_DIR

DT = 1.0 / 16000.0


def plucked_state(grid: GridSpec, amplitude: float = 1e-3) -> StaggeredState:
    q = amplitude * sine_mode(1, grid.n)
    return StaggeredState(q_half=q, p_int=np.zeros(grid.n - 1), psi=float("nan"))


@pytest.fixture
def lossless():
    return GroundTruthComponents.build(PhysicalParams(eta0=0.0, eta1=0.0), GridSpec(n=8))


class TestEnergyBalance:
    def test_lossless_unforced_energy_is_conserved(self, lossless):
        cfg = SavConfig(dt=DT, lambda_dr=0.0)
        traj = rollout(plucked_state(lossless.grid), np.zeros(400), 3, lossless, cfg)
        audit = energy_audit(traj, lossless, cfg)
        assert np.all(audit.dissipated == 0.0)
        assert np.max(np.abs(np.diff(audit.stored))) <= 1e-10 * audit.peak_energy

    def test_linear_leapfrog_invariant_over_long_run(self, lossless):
        """H_nl ≡ 0 时退化为交错蛙跳，离散能量在 10⁴ 步内守恒到舍入误差"""
        cfg = SavConfig(dt=DT, lambda_dr=0.0)
        linear = ZeroEnergy()
        traj = rollout(plucked_state(lossless.grid), np.zeros(10001), 3, lossless, cfg, energy=linear)
        stored = energy_audit(traj, lossless, cfg, energy=linear).stored
        assert np.max(np.abs(stored - stored[0])) < 1e-11 * stored[0]

    def test_nonlinear_modified_energy_over_long_run(self, lossless):
        cfg = SavConfig(dt=DT, lambda_dr=0.0)
        traj = rollout(plucked_state(lossless.grid, 1e-2), np.zeros(10001), 3, lossless, cfg)
        audit = energy_audit(traj, lossless, cfg)
        # 四次项占初始能量的可观比例
        assert 0.5 * (traj.psi[0] ** 2 - cfg.c0) > 0.01 * audit.peak_energy
        assert np.max(np.abs(audit.stored - audit.stored[0])) < 1e-6 * audit.stored[0]

    def test_lossless_with_drift_correction_balances(self, lossless):
        cfg = SavConfig(dt=DT, lambda_dr=1e-3)
        traj = rollout(plucked_state(lossless.grid, 1e-2), np.zeros(400), 3, lossless, cfg)
        assert energy_audit(traj, lossless, cfg).max_relative_residual < 1e-10

    def test_unforced_damped_energy_decreases(self, small_components):
        cfg = SavConfig(dt=DT, lambda_dr=0.0)
        traj = rollout(plucked_state(small_components.grid), np.zeros(800), 3, small_components, cfg)
        audit = energy_audit(traj, small_components, cfg)
        assert audit.is_passive()
        assert audit.stored[-1] < audit.stored[0]
        assert np.all(audit.dissipated >= 0.0)

    def test_forced_audit_residual(self, params):
        grid = GridSpec(n=32)
        c = GroundTruthComponents.build(params, grid)
        cfg = SavConfig(dt=DT)
        excitation = ExcitationSpec(f_amp=1.0, t_e=0.01, node_e=16)
        forces = excitation_signal(excitation, TimeSpec(fs=16000.0, ts=0.05))
        traj = rollout(zero_state(c), forces, excitation.node_e, c, cfg)
        audit = energy_audit(traj, c, cfg)
        assert audit.max_relative_residual < 1e-9
        assert np.sum(audit.injected) > 0.0
        assert audit.to_dict()["steps"] == traj.step_count - 1

    def test_audit_needs_auxiliary_sequence(self, small_components):
        cfg = SavConfig(dt=DT)
        traj = rollout(plucked_state(small_components.grid), np.zeros(10), 3, small_components, cfg)
        traj.psi = None
        with pytest.raises(ValueError):
            energy_audit(traj, small_components, cfg)


class TestDriftCorrection:
    def test_full_correction_tracks_definition(self, small_components):
        cfg = SavConfig(dt=DT, lambda_dr=1.0)
        traj = rollout(plucked_state(small_components.grid, 1e-2), np.zeros(200), 3, small_components, cfg)
        expected = initial_psi(traj.q, traj.p, small_components.nonlinear, small_components.operators, cfg)[:, 0]
        np.testing.assert_allclose(traj.psi, expected, rtol=1e-12)

    def test_no_correction_has_no_drift_term(self, small_components):
        cfg = SavConfig(dt=DT, lambda_dr=0.0)
        traj = rollout(plucked_state(small_components.grid, 1e-2), np.zeros(200), 3, small_components, cfg)
        audit = energy_audit(traj, small_components, cfg)
        assert np.max(np.abs(audit.drift)) <= 1e-12 * audit.peak_energy


class TestStep:
    def test_single_step_matches_rollout(self, small_components, sav16k):
        state = plucked_state(small_components.grid)
        traj = rollout(state, np.array([0.3, 0.0]), 2, small_components, sav16k)
        state.psi = float(traj.psi[0])
        g_p = node_input_vector(2, small_components.grid)
        nxt = sav_step(state, 0.3, g_p, small_components.nonlinear, small_components.operators, sav16k)
        np.testing.assert_allclose(nxt.q_half, traj.q[1], rtol=1e-14)
        np.testing.assert_allclose(nxt.p_int, traj.p[1], rtol=1e-14)
        assert nxt.step_index == 1

    def test_non_finite_state_raises(self, small_components, sav16k):
        state = plucked_state(small_components.grid)
        state.q_half[0] = np.nan
        state.psi = 1.0
        g_p = node_input_vector(2, small_components.grid)
        with pytest.raises(InstabilityError) as info:
            sav_step(state, 0.0, g_p, small_components.nonlinear, small_components.operators, sav16k)
        assert info.value.step_index == 1

    def test_rollout_records_inputs(self, small_components, sav16k):
        forces = np.linspace(0.0, 1.0, 5)
        traj = rollout(zero_state(small_components), forces, 4, small_components, sav16k)
        assert traj.step_count == 5
        np.testing.assert_allclose(traj.f, forces)
        assert np.all(traj.q[0] == 0.0)
        assert traj.meta.time.step_count == 5

    def test_rollout_rejects_bad_arguments(self, small_components, sav16k):
        with pytest.raises(ConfigurationError):
            rollout(zero_state(small_components), np.zeros(0), 4, small_components, sav16k)
        with pytest.raises(ConfigurationError):
            rollout(zero_state(small_components), np.zeros(5), 8, small_components, sav16k)


class TestConvergence:
    def test_refining_time_step_is_second_order(self, small_components):
        """fs、2fs、4fs 在公共时刻比较 p，相邻两级误差之比约为 4"""
        window = 0.025
        coarse_steps = int(round(window / DT)) + 1
        sampled = []
        for factor in (1, 2, 4):
            cfg = SavConfig(dt=DT / factor, lambda_dr=0.0)
            forces = np.zeros((coarse_steps - 1) * factor + 1)
            traj = rollout(plucked_state(small_components.grid), forces, 3, small_components, cfg)
            sampled.append(traj.p[::factor])
        coarse = np.max(np.abs(sampled[0] - sampled[1]))
        fine = np.max(np.abs(sampled[1] - sampled[2]))
        assert fine > 0.0
        assert 3.0 < coarse / fine < 5.0


class TestStability:
    def test_power_iteration_finds_top_mode(self, small_components):
        c = small_components
        n, h = c.grid.n, c.grid.h
        a = -laplacian_eigenvalue(n - 1, n, h)
        expected = (c.params.tension * a + c.params.ei * a * a) / c.params.mu
        assert max_eigenvalue(c.operators) == pytest.approx(expected, rel=1e-6)

    def test_bound(self, params):
        c = GroundTruthComponents.build(params, GridSpec(n=32))
        dt_max = stability_check(c, SavConfig(dt=DT), strict=True)
        assert DT < dt_max < 1e-3
        with pytest.raises(InstabilityError):
            stability_check(c, SavConfig(dt=1e-3), strict=True)
        assert stability_check(c, SavConfig(dt=1e-3)) == pytest.approx(dt_max)

    def test_power_iteration_matches_dense_eigenvalues(self, params):
        ops = GroundTruthComponents.build(params, GridSpec(n=4)).operators
        matrix = np.stack([ops.stiffness_apply(col) for col in np.eye(3)], axis=1) / (ops.h * ops.mu)
        dense = float(np.max(np.linalg.eigvals(matrix).real))
        assert max_eigenvalue(ops) == pytest.approx(dense, rel=1e-10)

    def test_quadrupled_tension_halves_bound(self):
        """弯曲刚度可忽略时 λ_max ∝ T，dt_max ∝ 1/√T"""
        grid = GridSpec(n=32)
        bounds = [
            stability_check(GroundTruthComponents.build(PhysicalParams(tension=t, youngs=1e9), grid), SavConfig(dt=DT))
            for t in (60.0, 240.0)
        ]
        assert bounds[1] / bounds[0] == pytest.approx(0.5, rel=1e-3)

    def test_full_scale_configuration_is_stable(self):
        document = ConfigLoader().load(CONFIG_DIR / "full.toml")
        c = GroundTruthComponents.build(document.string, document.grid)
        cfg = document.sav_config()
        assert cfg.dt == pytest.approx(1.0 / 88200.0)
        dt_max = stability_check(c, cfg, strict=True)
        assert cfg.dt < dt_max

        n, h = c.grid.n, c.grid.h
        a = -laplacian_eigenvalue(n - 1, n, h)
        expected = (c.params.tension * a + c.params.ei * a * a) / c.params.mu
        assert dt_max == pytest.approx(0.9 * 2.0 / np.sqrt(expected), rel=1e-3)
