"""自动微分、能量网络、优化器与检查点"""

import numpy as np
import pytest

from stringphnn.modules.config.schema import EnergyNetConfig
from stringphnn.modules.core.errors import DataFormatError, TapeError
from stringphnn.modules.core.types import GridSpec
from stringphnn.modules.nn import functional as F
from stringphnn.modules.nn.checkpoint import load_checkpoint, save_checkpoint, sidecar_path
from stringphnn.modules.nn.energy import EnergyNetwork, build_energy_network
from stringphnn.modules.nn.layers import MLP
from stringphnn.modules.nn.optim import Adam, AdamState, adam_step, clip_grad_norm, global_grad_norm
from stringphnn.modules.nn.tensor import Tape, Tensor
from stringphnn.modules.physics.energy import QuarticStretchingEnergy


def numeric_gradient(fn, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(x)
    for index in np.ndindex(x.shape):
        step = np.zeros_like(x)
        step[index] = eps
        grad[index] = (fn(x + step) - fn(x - step)) / (2 * eps)
    return grad


def tape_gradient(fn, x: np.ndarray) -> np.ndarray:
    leaf = Tensor(x, requires_grad=True)
    with Tape() as tape:
        out = fn(leaf)
        tape.backward(out)
    return leaf.grad


def scalar(fn):
    """把张量函数包装成返回 float 的 numpy 函数"""
    return lambda x: float(F.value(fn(x)))


class TestAutodiff:
    @pytest.mark.parametrize("fn", [
        lambda x: F.sum(F.exp(x) * x),
        lambda x: F.sum(F.sqrt(x * x + 1.0) / (x + 3.0)),
        lambda x: F.sum(F.log(x * x + 2.0) - x ** 3),
        lambda x: F.mean(F.leaky_relu(x - 0.1, 0.2)),
        lambda x: F.sum(F.d2(x, 0.5) * F.d2(x, 0.5)),
        lambda x: F.sum(F.slice_last(F.concat([x, 2.0 * x], axis=-1), 1, 5) ** 2),
    ])
    def test_primitives(self, fn, rng):
        x = rng.standard_normal(6)
        np.testing.assert_allclose(tape_gradient(fn, x), numeric_gradient(scalar(fn), x), rtol=1e-6, atol=1e-8)

    def test_matmul_and_broadcast(self, rng):
        w = rng.standard_normal((4, 3))
        b = rng.standard_normal(3)

        def fn(x):
            return F.sum(F.reshape(F.matmul(x, w) + b, (-1,)) ** 2)

        x = rng.standard_normal((5, 4))
        np.testing.assert_allclose(tape_gradient(fn, x), numeric_gradient(scalar(fn), x), rtol=1e-6)

    def test_tridiagonal_solve_gradients(self, rng):
        rhs = rng.standard_normal((2, 7))
        weights = rng.standard_normal((2, 7))
        np.testing.assert_allclose(
            tape_gradient(lambda r: F.sum(weights * F.tridiag_solve(2.0, -0.5, r)), rhs),
            numeric_gradient(lambda r: float(np.sum(weights * F.tridiag_solve(2.0, -0.5, r))), rhs),
            rtol=1e-6,
        )

        def by_diag(d):
            return F.sum(weights * F.tridiag_solve(d[0], d[1], rhs))

        coefficients = np.array([2.0, -0.5])
        leaf = Tensor(coefficients, requires_grad=True)
        with Tape() as tape:
            out = F.sum(weights * F.tridiag_solve(F.slice_last(leaf, 0, 1), F.slice_last(leaf, 1, 2), rhs))
            tape.backward(out)
        np.testing.assert_allclose(leaf.grad, numeric_gradient(scalar(by_diag), coefficients), rtol=1e-6)

    def test_convolution_kernel_gradient(self, rng):
        q = rng.standard_normal((3, 7))
        weights = rng.standard_normal((3, 8))
        kernel = np.array([1.3, -0.7])

        def fn(k):
            return F.sum(weights * F.conv_k2(q, k)) + F.sum(F.conv_k2_transpose(weights, k) * q)

        np.testing.assert_allclose(tape_gradient(fn, kernel), numeric_gradient(scalar(fn), kernel), rtol=1e-6)

    def test_convolution_with_difference_kernel_is_backward_difference(self, rng):
        h = 0.2
        q = rng.standard_normal(7)
        np.testing.assert_allclose(F.conv_k2(q, np.array([1 / h, -1 / h])), F.d_minus(q, h), rtol=1e-13)
        w = rng.standard_normal(8)
        np.testing.assert_allclose(F.conv_k2_transpose(w, np.array([1 / h, -1 / h])), -F.d_plus(w, h), rtol=1e-13)

    def test_abs_has_zero_gradient_at_zero(self):
        assert tape_gradient(lambda x: F.sum(F.abs(x)), np.array([0.0, -2.0, 3.0])).tolist() == [0.0, -1.0, 1.0]

    def test_gradients_accumulate_on_leaves(self):
        leaf = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        for _ in range(2):
            with Tape() as tape:
                tape.backward(F.sum(leaf * leaf))
        np.testing.assert_allclose(leaf.grad, [4.0, 8.0])

    def test_no_tape_means_constants(self):
        leaf = Tensor(np.ones(3), requires_grad=True)
        out = F.sum(leaf * 2.0)
        assert out.is_leaf
        assert out.item() == pytest.approx(6.0)

    def test_stale_tensor_is_rejected(self):
        leaf = Tensor(np.ones(3), requires_grad=True)
        with Tape() as tape:
            stale = leaf * 2.0
            tape.reset()
            with pytest.raises(TapeError):
                F.sum(stale)

    def test_backward_requires_scalar_root(self):
        leaf = Tensor(np.ones(3), requires_grad=True)
        with Tape() as tape:
            with pytest.raises(TapeError):
                tape.backward(leaf * 2.0)

    def test_numpy_inputs_stay_numpy(self):
        out = F.sum(F.exp(np.zeros(3)))
        assert isinstance(out, np.floating)


class TestEnergyNetwork:
    def test_analytic_network_equals_quartic_energy(self, params, rng):
        grid = GridSpec(n=8)
        quartic = QuarticStretchingEnergy(params.ea - params.tension, grid.h)
        net = EnergyNetwork.analytic(grid.h, params.nonlinear_coefficient)
        q = 1e-2 * rng.standard_normal((4, 7))
        np.testing.assert_allclose(F.value(net.energy(q)), quartic.energy(q), rtol=1e-12)
        np.testing.assert_allclose(F.value(net.gradient(q)), quartic.gradient(q), rtol=1e-10, atol=1e-14)

    def test_input_gradient_matches_finite_differences(self, rng):
        net = EnergyNetwork.create(0.1, EnergyNetConfig(hidden=6, depth=2), rng)
        q = 0.3 * rng.standard_normal(7)
        numeric = numeric_gradient(lambda x: float(F.value(net.energy(x))[0]), q)
        np.testing.assert_allclose(F.value(net.gradient(q)), numeric, rtol=1e-5, atol=1e-9)

    def test_weight_gradient_through_input_gradient(self, rng):
        """权重梯度穿过 ∇_q H 的显式图"""
        net = EnergyNetwork.create(0.1, EnergyNetConfig(hidden=5, depth=2), rng)
        q = 0.3 * rng.standard_normal(7)
        weights = rng.standard_normal(7)
        kernel = net.kernel

        def loss():
            return F.sum(weights * net.gradient(q))

        net.zero_grad()
        with Tape() as tape:
            tape.backward(loss())
        analytic = kernel.grad.copy()
        original = kernel.data.copy()

        def at(k):
            kernel.data = k
            return float(F.value(loss()))

        numeric = numeric_gradient(at, original, eps=1e-6)
        kernel.data = original
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5)

    def test_structure_rebuild(self, rng):
        net = EnergyNetwork.create(0.1, EnergyNetConfig(hidden=4, depth=3), rng)
        rebuilt = build_energy_network(net.config(), 0.1)
        assert set(rebuilt.parameters()) == set(net.parameters())
        with pytest.raises(ValueError):
            build_energy_network({"map": {"kind": "spline"}}, 0.1)

    def test_mlp_forward_derivative(self, rng):
        mlp = MLP(1, 6, 2, 1, rng=rng)
        x = rng.standard_normal((5, 1))
        _, slope = mlp.value_and_derivative(x)
        eps = 1e-6
        numeric = (F.value(mlp(x + eps)) - F.value(mlp(x - eps))) / (2 * eps)
        np.testing.assert_allclose(F.value(slope), numeric, rtol=1e-5, atol=1e-9)


class TestOptim:
    def test_first_adam_step_moves_by_learning_rate(self):
        params = {"w": np.array([1.0, -1.0])}
        grads = {"w": np.array([0.5, -3.0])}
        updated, state = adam_step(params, grads, AdamState(), lr=0.1)
        np.testing.assert_allclose(updated["w"], [0.9, -0.9], rtol=1e-6)
        assert state.step == 1

    def test_adam_minimises_quadratic(self):
        w = Tensor(np.array([3.0, -2.0]), requires_grad=True)
        opt = Adam({"w": w}, lr=0.05)
        for _ in range(500):
            opt.zero_grad()
            with Tape() as tape:
                tape.backward(F.sum(w * w))
            opt.step()
        assert np.max(np.abs(w.data)) < 0.1

    def test_clip(self):
        w = Tensor(np.zeros(2), requires_grad=True)
        w.grad = np.array([3.0, 4.0])
        assert clip_grad_norm({"w": w}, 1.0) == pytest.approx(5.0)
        assert global_grad_norm({"w": w}) == pytest.approx(1.0)


class TestCheckpoint:
    def test_round_trip_and_determinism(self, tmp_path, rng):
        params = {"a": rng.standard_normal((2, 3)), "b": rng.standard_normal(4)}
        state = AdamState(m={k: v * 0.1 for k, v in params.items()}, v={k: v * v for k, v in params.items()}, step=7)
        kwargs = dict(kind="phnn", params=params, optimizer=state, hyperparameters={"lr": 1e-3},
                      buffers={"scale": np.ones(2)}, metadata={"seed": 3}, sidecar={"seed": 3})
        first = save_checkpoint(tmp_path / "one.sphnn", **kwargs)
        second = save_checkpoint(tmp_path / "two.sphnn", **kwargs)
        assert first.read_bytes() == second.read_bytes()
        assert sidecar_path(first).exists()

        loaded = load_checkpoint(first)
        assert loaded.kind == "phnn"
        assert loaded.optimizer.step == 7
        for name, value in params.items():
            np.testing.assert_array_equal(loaded.params[name], value)
            np.testing.assert_array_equal(loaded.optimizer.m[name], state.m[name])
        assert loaded.metadata == {"seed": 3}
        assert loaded.summary()["parameter_count"] == 10

    def test_rejects_foreign_and_truncated_files(self, tmp_path):
        foreign = tmp_path / "x.sphnn"
        foreign.write_bytes(b"NOTACKPT" + b"\0" * 16)
        with pytest.raises(DataFormatError):
            load_checkpoint(foreign)
        path = save_checkpoint(tmp_path / "ok.sphnn", kind="phnn", params={"a": np.ones(8)})
        truncated = tmp_path / "cut.sphnn"
        truncated.write_bytes(path.read_bytes()[:-16])
        with pytest.raises(DataFormatError):
            load_checkpoint(truncated)
