"""桌面规模辨识验收（耗时数小时，需 --runslow）"""

import pytest

from stringphnn.modules.config.loader import config_loader
from stringphnn.modules.config.settings import get_settings
from stringphnn.modules.datagen.generator import generate_dataset
from stringphnn.modules.eval.report import evaluate_checkpoint
from stringphnn.modules.train.multi_seed import multi_seed
from stringphnn.utils.paths import CONFIG_DIR

IDENTIFIABLE = ("mu", "tension", "eta0", "eta1")


@pytest.mark.slow
def test_desk_scale_identification(tmp_path):
    document = config_loader.load(CONFIG_DIR / "desk.toml")
    threads = get_settings().threads
    data = tmp_path / "data"
    manifest = generate_dataset(document, data, threads=threads)
    assert max(r.audit_max_relative_residual for r in manifest.records) < 1e-9

    phnn = multi_seed("phnn", document, data, tmp_path / "train", threads=threads)
    baseline = multi_seed("baseline", document, data, tmp_path / "train", threads=threads)
    assert 100.0 * phnn.best.test_relative_mse <= baseline.best.test_relative_mse

    report = evaluate_checkpoint(phnn.best.checkpoint_path, data, tmp_path / "eval", threads=threads)
    errors = report.parameters["relative_errors"]
    for name in IDENTIFIABLE:
        assert errors[name] < 0.05, name
