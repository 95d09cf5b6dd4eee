"""训练损失、训练循环与多种子协议"""

import csv
import json

import numpy as np
import pytest

from stringphnn.modules.core.errors import InstabilityError
from stringphnn.modules.datagen.generator import generate_dataset, load_split
from stringphnn.modules.integrator.rollout import rollout, zero_state
from stringphnn.modules.model.phnn import StringPHNN
from stringphnn.modules.physics.components import GroundTruthComponents
from stringphnn.modules.physics.excitation import excitation_signal
from stringphnn.modules.train import trainer as trainer_module
from stringphnn.modules.train.loss import absolute_error_sum, train_loss
from stringphnn.modules.train.multi_seed import SUMMARY_NAME, multi_seed
from stringphnn.modules.train.trainer import (
    CHECKPOINT_NAME,
    CURVE_NAME,
    initialize_model,
    sample_pairs,
    seed_streams,
    train_model,
)
from tests.conftest import tiny_document


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("train-data")
    generate_dataset(tiny_document(), root)
    return root


def analytic_setup(document):
    """解析模型与它自己生成的带 ψ 轨迹"""
    model = StringPHNN.analytic(document.string, document.grid, document.sav_config())
    c = GroundTruthComponents.build(model.physical.to_params(), document.grid)
    forces = excitation_signal(document.excitation, document.time)
    traj = rollout(zero_state(c), forces, document.excitation.node_e, c, document.sav_config())
    return model, traj


class TestLoss:
    def test_constant_offset(self):
        q, p = np.zeros((3, 4)), np.ones((3, 4))
        assert train_loss((q + 0.5, p - 0.5), (q, p), dt=0.25) == pytest.approx(2.0)
        total, count = absolute_error_sum((q + 0.5, p), (q, p))
        assert (total, count) == (pytest.approx(6.0), 24)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            train_loss((np.zeros((2, 3)), np.zeros((2, 3))), (np.zeros((2, 4)), np.zeros((2, 3))), dt=1.0)


class TestTrainer:
    def test_best_parameters_are_restored(self, tiny_doc):
        """在精确解处任何 Adam 步都会变差，训练结束应回到初值"""
        model, traj = analytic_setup(tiny_doc)
        before = {name: t.data.copy() for name, t in model.parameters().items()}
        result = train_model(model, [traj], [traj], tiny_doc, seed=0)
        assert result.best_step == 0
        assert result.best_val_loss == result.curve[0].val_loss
        assert all(point.val_loss >= result.best_val_loss for point in result.curve)
        for name, tensor in model.parameters().items():
            np.testing.assert_array_equal(tensor.data, before[name])
        assert set(result.exposed_parameters) == set(model.physical.values())

    def test_outputs_written(self, tiny_doc, dataset_dir, tmp_path):
        model, _ = initialize_model("phnn", tiny_doc, 1)
        result = train_model(model, load_split(dataset_dir, "train"), load_split(dataset_dir, "val"),
                             tiny_doc, seed=1, output_dir=tmp_path, dataset_hash="abc")
        assert (tmp_path / CHECKPOINT_NAME).exists()
        with open(tmp_path / CURVE_NAME, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["step", "train_loss", "val_loss", "learning_rate"]
        assert [int(r[0]) for r in rows[1:]] == [0, 2, 4]
        assert rows[1][1] == ""
        assert result.checkpoint_path.endswith(CHECKPOINT_NAME)

    def test_non_finite_batches_halve_learning_rate(self, dataset_dir, monkeypatch):
        document = tiny_document(train={"steps": 6, "nan_halving_after": 2, "nan_abort_after": 10})
        monkeypatch.setattr(trainer_module, "gradient_step", lambda *args: float("nan"))
        model, _ = initialize_model("phnn", document, 0)
        result = train_model(model, load_split(dataset_dir, "train"), load_split(dataset_dir, "val"),
                             document, seed=0)
        assert result.skipped_batches == 6
        assert result.final_learning_rate == pytest.approx(document.train.learning_rate / 8)

    def test_persistent_non_finite_loss_aborts(self, dataset_dir, monkeypatch):
        document = tiny_document(train={"steps": 6, "nan_halving_after": 2, "nan_abort_after": 3})
        monkeypatch.setattr(trainer_module, "gradient_step", lambda *args: float("nan"))
        model, _ = initialize_model("baseline", document, 0)
        with pytest.raises(InstabilityError) as info:
            train_model(model, load_split(dataset_dir, "train"), load_split(dataset_dir, "val"), document, seed=0)
        assert info.value.step_index == 3
        assert "last_good_val_loss" in info.value.provenance

    def test_baseline_training_runs(self, tiny_doc, dataset_dir):
        model, attempts = initialize_model("baseline", tiny_doc, 0)
        result = train_model(model, load_split(dataset_dir, "train"), load_split(dataset_dir, "val"),
                             tiny_doc, seed=0)
        assert attempts == 1
        assert np.isfinite(result.best_val_loss)
        assert result.exposed_parameters is None


class TestInitialisation:
    def test_unstable_draws_are_resampled(self, tiny_doc, monkeypatch):
        calls = []
        real = trainer_module.operator_stability

        def flaky(ops, dt, **kwargs):
            calls.append(dt)
            if len(calls) < 3:
                raise InstabilityError("too stiff", step_index=0)
            return real(ops, dt, **kwargs)

        monkeypatch.setattr(trainer_module, "operator_stability", flaky)
        model, attempts = initialize_model("phnn", tiny_doc, 4)
        assert attempts == 3
        reference = StringPHNN.create(tiny_doc, 4, attempt=2)
        np.testing.assert_array_equal(model.energy.kernel.data, reference.energy.kernel.data)

    def test_gives_up_after_repeated_failures(self, tiny_doc, monkeypatch):
        def always(ops, dt, **kwargs):
            raise InstabilityError("too stiff", step_index=0)

        monkeypatch.setattr(trainer_module, "operator_stability", always)
        with pytest.raises(InstabilityError):
            initialize_model("phnn", tiny_doc, 0)

    def test_seed_streams_and_sampling(self, dataset_dir):
        a, _ = seed_streams(3)
        b, _ = seed_streams(3)
        assert a.integers(1 << 30) == b.integers(1 << 30)
        val = load_split(dataset_dir, "val")
        first = sample_pairs(val, 16, np.random.default_rng(0))
        second = sample_pairs(val, 16, np.random.default_rng(0))
        np.testing.assert_array_equal(first.q, second.q)
        assert len(sample_pairs(val, 10 ** 6, np.random.default_rng(0))) == val[0].step_count - 1


class TestMultiSeed:
    def test_summary(self, tiny_doc, dataset_dir, tmp_path):
        summary = multi_seed("baseline", tiny_doc, dataset_dir, tmp_path, seeds=[0, 1])
        assert [r.seed for r in summary.results] == [0, 1]
        stats = summary.statistics()
        assert stats["min"] <= stats["median"] <= stats["max"]
        assert summary.best.test_relative_mse == stats["min"]
        written = json.loads((tmp_path / "baseline" / SUMMARY_NAME).read_text(encoding="utf-8"))
        assert written["best_seed"] == summary.best.seed
        assert (tmp_path / "baseline" / "seed_1" / CHECKPOINT_NAME).exists()

    def test_requires_seeds(self, tiny_doc, dataset_dir):
        with pytest.raises(ValueError):
            multi_seed("phnn", tiny_doc, dataset_dir, seeds=[])
