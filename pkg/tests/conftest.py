"""测试公共夹具"""

import numpy as np
import pytest

from stringphnn.modules.config.schema import ExperimentDocument
from stringphnn.modules.core.types import GridSpec, PhysicalParams, SavConfig
from stringphnn.modules.physics.components import GroundTruthComponents


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="运行标记为 slow 的验收测试")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="需要 --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def params():
    return PhysicalParams()


@pytest.fixture
def small_grid():
    return GridSpec(n=8)


@pytest.fixture
def small_components(params, small_grid):
    return GroundTruthComponents.build(params, small_grid)


@pytest.fixture
def sav16k():
    return SavConfig(c0=1e-12, lambda_dr=1e-3, dt=1.0 / 16000.0)


def tiny_document(**sections) -> ExperimentDocument:
    """N=8 的小规模实验文档，供数据生成、训练与 CLI 测试使用"""
    data = {
        "grid": {"n": 8},
        "time": {"fs": 16000.0, "ts": 0.01},
        "excitation": {"f_amp": 1.0, "t_e": 0.005, "node_e": 4},
        "dataset": {"n_train": 2, "n_val": 1, "n_test": 1, "t_e_min": 0.002, "t_e_max": 0.004, "seed": 7},
        "energy_net": {"hidden": 8, "depth": 2},
        "baseline": {"hidden": 16, "depth": 2},
        "train": {"batch_size": 8, "steps": 4, "val_interval": 2, "val_pairs": 16, "seeds": [0]},
        "eval": {"spectrogram": {"window_length": 64, "hop": 16, "n_fft": 64}},
    }
    for key, value in sections.items():
        data[key] = {**data.get(key, {}), **value}
    return ExperimentDocument.model_validate(data)


@pytest.fixture
def tiny_doc():
    return tiny_document()
