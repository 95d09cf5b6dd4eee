"""配置文档加载与校验"""

import json
import sys

import pytest

from stringphnn.modules.config.loader import ConfigLoader
from stringphnn.modules.config.schema import DatasetSpec, ExperimentDocument
from stringphnn.modules.core.errors import ConfigurationError
from stringphnn.modules.core.types import GridSpec
from stringphnn.utils.hashing import canonical_json, config_hash
from stringphnn.utils.paths import APPLICATION_ROOT, CONFIG_DIR, get_application_root

loader = ConfigLoader()


def test_shipped_configs_load():
    desk = loader.load(CONFIG_DIR / "desk.toml")
    assert desk.grid.n == 32
    assert desk.time.step_count == 4000
    assert desk.observation_node() == 22
    assert desk.train.grad_clip == pytest.approx(1000.0)

    full = loader.load(CONFIG_DIR / "full.toml")
    assert full.grid.n == 202
    assert full.observation_node() == 142
    assert full.train.grad_clip is None


def test_formats_are_equivalent(tmp_path):
    data = {"grid": {"n": 16}, "excitation": {"node_e": 8}, "train": {"grad_clip": False}}
    (tmp_path / "c.json").write_text(json.dumps(data), encoding="utf-8")
    (tmp_path / "c.yaml").write_text("grid:\n  n: 16\nexcitation:\n  node_e: 8\ntrain:\n  grad_clip: false\n",
                                     encoding="utf-8")
    (tmp_path / "c.toml").write_text("[grid]\nn = 16\n[excitation]\nnode_e = 8\n[train]\ngrad_clip = false\n",
                                     encoding="utf-8")
    documents = [loader.load(tmp_path / name) for name in ("c.json", "c.yaml", "c.toml")]
    hashes = {config_hash(d) for d in documents}
    assert len(hashes) == 1
    assert documents[0].train.grad_clip is None


def test_unknown_key_is_rejected(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[grid]\nn = 16\nnodes = 3\n", encoding="utf-8")
    with pytest.raises(ConfigurationError) as info:
        loader.load(path)
    assert "grid.nodes" in str(info.value)
    assert info.value.errors


def test_missing_and_unsupported_files(tmp_path):
    with pytest.raises(ConfigurationError):
        loader.load(tmp_path / "missing.toml")
    path = tmp_path / "c.ini"
    path.write_text("[grid]\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        loader.load(path)


def test_malformed_file(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("[grid\n", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        loader.load(path)


def test_excitation_node_must_fit_grid():
    with pytest.raises(ValueError):
        ExperimentDocument.model_validate({"grid": {"n": 8}, "excitation": {"node_e": 16}})


def test_dataset_ranges():
    with pytest.raises(ValueError):
        DatasetSpec(t_e_min=0.05, t_e_max=0.01)
    spec = DatasetSpec()
    lo, hi = spec.node_range(GridSpec(n=32))
    assert (lo, hi) == (3, 29)


def test_duplicate_seeds_rejected():
    with pytest.raises(ValueError):
        ExperimentDocument.model_validate({"train": {"seeds": [1, 1]}})


def test_save_round_trip(tmp_path, tiny_doc):
    path = tmp_path / "doc.json"
    loader.save(tiny_doc, path)
    assert config_hash(loader.load(path)) == config_hash(tiny_doc)


def test_canonical_json_is_order_independent():
    assert canonical_json({"b": 1, "a": [1, 2]}) == canonical_json({"a": [1, 2], "b": 1})
    assert config_hash({"b": 1, "a": 2}) == config_hash({"a": 2, "b": 1})


def test_paths_resolve_from_package_location(monkeypatch):
    monkeypatch.setattr(sys, "frozen", True, raising=False)
    monkeypatch.setattr(sys, "executable", "/nonexistent/bin/python")
    root = get_application_root()
    assert root == APPLICATION_ROOT
    assert (root / "stringphnn" / "__init__.py").exists()
    assert CONFIG_DIR == root / "configs"
