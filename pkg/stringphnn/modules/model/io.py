"""模型的构建、保存与恢复"""

from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from stringphnn.modules.config.schema import ExperimentDocument
from stringphnn.modules.core.errors import ConfigurationError, DataFormatError
from stringphnn.modules.model.baseline import BaselineModel
from stringphnn.modules.model.learnable import LearnablePhysical
from stringphnn.modules.model.phnn import StringPHNN
from stringphnn.modules.nn.checkpoint import load_checkpoint, save_checkpoint
from stringphnn.modules.nn.energy import build_energy_network
from stringphnn.modules.nn.optim import Adam
from stringphnn.utils.hashing import config_hash

Model = Union[StringPHNN, BaselineModel]
MODEL_KINDS = (StringPHNN.kind, BaselineModel.kind)


def build_model(kind: str, document: ExperimentDocument, seed: int) -> Model:
    """按类型与种子构建随机初始化的模型"""
    if kind == StringPHNN.kind:
        return StringPHNN.create(document, seed)
    if kind == BaselineModel.kind:
        return BaselineModel.create(document, seed)
    raise ConfigurationError(f"未知模型类型: {kind}（可选 {', '.join(MODEL_KINDS)}）")


def save_model(
    path: Path,
    model: Model,
    document: ExperimentDocument,
    optimizer: Optional[Adam] = None,
    extra: Optional[dict[str, Any]] = None,
) -> Path:
    """写入检查点与 JSON 旁注"""
    params = {name: t.data for name, t in model.parameters().items()}
    buffers = model.buffers() if hasattr(model, "buffers") else {}
    metadata = {
        "kind": model.kind,
        "document": document.model_dump(mode="json"),
        "model": model.config(),
        **(extra or {}),
    }
    sidecar: dict[str, Any] = {
        "kind": model.kind,
        "config_hash": config_hash(document),
        **{k: v for k, v in (extra or {}).items() if k in ("seed", "dataset_hash", "step")},
    }
    if isinstance(model, StringPHNN):
        sidecar["exposed_parameters"] = model.physical.values()
    return save_checkpoint(
        path,
        kind=model.kind,
        params=params,
        optimizer=optimizer.state if optimizer else None,
        hyperparameters=optimizer.hyperparameters() if optimizer else None,
        buffers=buffers,
        metadata=metadata,
        sidecar=sidecar,
    )


def load_model(path: Path) -> tuple[Model, ExperimentDocument, dict[str, Any]]:
    """从检查点恢复模型，返回 (模型, 配置文档, 元数据)"""
    checkpoint = load_checkpoint(path)
    metadata = checkpoint.metadata
    try:
        document = ExperimentDocument.model_validate(metadata["document"])
    except (KeyError, ValueError) as e:
        raise DataFormatError(f"检查点缺少有效的配置文档: {path}: {e}") from e

    if checkpoint.kind == StringPHNN.kind:
        physical = LearnablePhysical.from_params(document.string)
        energy = build_energy_network(metadata["model"]["energy"], document.grid.h)
        model: Model = StringPHNN(physical, energy, document.grid, document.sav_config())
    elif checkpoint.kind == BaselineModel.kind:
        model = BaselineModel.create(document, seed=0)
        model.net.load_buffers(checkpoint.buffers)
    else:
        raise DataFormatError(f"未知的检查点模型类型: {checkpoint.kind}")

    params = model.parameters()
    missing = set(params) - set(checkpoint.params)
    if missing:
        raise DataFormatError(f"检查点缺少参数: {sorted(missing)}")
    for name, tensor in params.items():
        value = checkpoint.params[name]
        if value.shape != tensor.shape:
            raise DataFormatError(f"参数 {name} 形状不符: {value.shape} != {tensor.shape}")
        tensor.data = np.array(value, dtype=np.float64)
    return model, document, metadata
