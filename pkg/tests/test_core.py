"""有限差分算子、三对角求解与配置类型"""

import math

import numpy as np
import pytest

from stringphnn.modules.core import operators as ops
from stringphnn.modules.core.errors import ConfigurationError, InstabilityError
from stringphnn.modules.core.tridiag import TridiagonalFactor, factorize
from stringphnn.modules.core.types import ExcitationSpec, GridSpec, PhysicalParams, TimeSpec


class TestOperators:
    def test_d_plus_is_negative_adjoint(self, rng):
        n, h = 12, 0.1
        v = rng.standard_normal(n - 1)
        w = rng.standard_normal(n)
        # h·<D⁻v, w> = -h·<v, D⁺w>
        lhs = ops.inner_h(ops.d_minus(v, h), w, h)
        rhs = -ops.inner_h(v, ops.d_plus(w, h), h)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_matrices_match_stencils(self, rng):
        n, h = 10, 0.25
        v = rng.standard_normal(n - 1)
        w = rng.standard_normal(n)
        np.testing.assert_allclose(ops.d_minus_matrix(n, h) @ v, ops.d_minus(v, h), rtol=1e-13)
        np.testing.assert_allclose(ops.d_plus_matrix(n, h) @ w, ops.d_plus(w, h), rtol=1e-13)
        np.testing.assert_allclose(ops.d2_matrix(n, h) @ v, ops.d2(v, h), rtol=1e-13)

    def test_d2_is_symmetric(self):
        dense = ops.d2_matrix(9, 0.3).toarray()
        np.testing.assert_allclose(dense, dense.T)

    def test_sine_modes_are_eigenvectors(self):
        n, h = 16, 1.1 / 16
        for k in (1, 5, n - 1):
            phi = ops.sine_mode(k, n)
            np.testing.assert_allclose(
                ops.d2(phi, h), ops.laplacian_eigenvalue(k, n, h) * phi, atol=1e-9 / h**2
            )

    def test_batched_input(self, rng):
        v = rng.standard_normal((3, 5, 7))
        out = ops.d_minus(v, 0.5)
        assert out.shape == (3, 5, 8)
        np.testing.assert_allclose(out[1, 2], ops.d_minus(v[1, 2], 0.5))

    def test_boundary_values_are_implicit_zero(self):
        v = np.ones(4)
        out = ops.d_minus(v, 1.0)
        np.testing.assert_allclose(out, [1.0, 0.0, 0.0, 0.0, -1.0])

    def test_rejects_bad_input(self):
        with pytest.raises(ConfigurationError):
            ops.d_minus(np.ones(4), 0.0)
        with pytest.raises(ConfigurationError):
            ops.d_minus(np.ones(4), 0.1, n=8)
        with pytest.raises(ConfigurationError):
            ops.d_plus(np.ones(1), 0.1)

    def test_norm(self):
        assert ops.norm_h(np.array([3.0, 4.0]), 0.25) == pytest.approx(2.5)


class TestTridiagonal:
    def test_solve_residual(self, rng):
        factor = TridiagonalFactor(2.5, -0.75, 20)
        rhs = rng.standard_normal((4, 20))
        x = factor.solve(rhs)
        assert x.shape == rhs.shape
        for row in range(4):
            assert factor.residual_norm(x[row], rhs[row]) < 1e-13

    def test_matches_dense(self, rng):
        n = 9
        factor = TridiagonalFactor(1.3, 0.2, n)
        rhs = rng.standard_normal(n)
        dense = factor.matrix.toarray()
        np.testing.assert_allclose(factor.solve(rhs), np.linalg.solve(dense, rhs), rtol=1e-12)

    def test_factorization_is_cached(self):
        assert factorize(1.5, -0.25, 7) is factorize(1.5, -0.25, 7)

    def test_shape_mismatch(self):
        with pytest.raises(ConfigurationError):
            TridiagonalFactor(2.0, -1.0, 5).solve(np.ones(4))


class TestTypes:
    def test_default_string(self):
        params = PhysicalParams()
        assert params.mu == pytest.approx(8000.0 * math.pi * 1.6e-7)
        assert params.nonlinear_coefficient == pytest.approx((params.ea - params.tension) / 8.0)

    def test_regime_requires_positive_stretch(self):
        with pytest.raises(ValueError):
            PhysicalParams(youngs=1.0)

    def test_zero_damping_allowed(self):
        params = PhysicalParams(eta0=0.0, eta1=0.0)
        assert params.eta0 == 0.0

    def test_grid_spacing(self):
        grid = GridSpec(n=32, l0=1.1)
        assert grid.h == pytest.approx(1.1 / 32)
        assert grid.interior == 31
        assert len(grid.node_positions()) == 31
        with pytest.raises(ValueError):
            GridSpec(n=32, l0=1.1, h=0.1)

    def test_grid_rejects_unknown_keys(self):
        with pytest.raises(ValueError):
            GridSpec(n=8, spacing=0.1)

    def test_time(self):
        time = TimeSpec(fs=16000.0, ts=0.25)
        assert time.step_count == 4000
        assert time.dt == pytest.approx(6.25e-5)
        with pytest.raises(ValueError):
            TimeSpec(fs=10.0, ts=0.05)

    def test_excitation_grid_check(self):
        ExcitationSpec(node_e=7).check_grid(GridSpec(n=8))
        with pytest.raises(ConfigurationError):
            ExcitationSpec(node_e=8).check_grid(GridSpec(n=8))

    def test_instability_message_carries_step(self):
        error = InstabilityError("boom", step_index=12)
        assert str(error) == "boom (step 12)"
        assert error.exit_code == 3
