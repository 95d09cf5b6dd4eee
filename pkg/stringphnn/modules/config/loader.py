"""配置加载器"""

import json

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any

import yaml
from loguru import logger
from pydantic import ValidationError

from stringphnn.modules.config.schema import ExperimentDocument
from stringphnn.modules.core.errors import ConfigurationError
from stringphnn.utils.hashing import config_hash


class ConfigLoader:
    """配置加载器（.toml / .json / .yaml）"""

    SUFFIXES = (".toml", ".json", ".yaml", ".yml")

    def read(self, path: Path) -> dict[str, Any]:
        """读取原始键值文档"""
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"配置文件不存在: {path}")
        suffix = path.suffix.lower()
        try:
            if suffix == ".toml":
                with open(path, "rb") as f:
                    return tomllib.load(f)
            if suffix == ".json":
                return json.loads(path.read_text(encoding="utf-8"))
            if suffix in (".yaml", ".yml"):
                return yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except (tomllib.TOMLDecodeError, json.JSONDecodeError, yaml.YAMLError) as e:
            raise ConfigurationError(f"配置文件解析失败 {path}: {e}") from e
        raise ConfigurationError(f"不支持的配置格式: {suffix}（支持 {', '.join(self.SUFFIXES)}）")

    def validate(self, data: dict[str, Any]) -> ExperimentDocument:
        """校验并构造文档，未知键视为错误"""
        try:
            return ExperimentDocument.model_validate(data)
        except ValidationError as e:
            errors = e.errors(include_url=False)
            summary = "; ".join(
                f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in errors
            )
            raise ConfigurationError(f"配置校验失败: {summary}", errors=errors) from e

    def load(self, path: Path) -> ExperimentDocument:
        """加载并校验配置文件"""
        document = self.validate(self.read(path))
        logger.info(f"配置加载完成: {path} (hash={config_hash(document)[:12]})")
        logger.debug(f"解析后的配置: {document.model_dump(mode='json')}")
        return document

    def save(self, document: ExperimentDocument, path: Path) -> None:
        """保存为 JSON（用于运行清单）"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(document.model_dump(mode="json"), indent=2, sort_keys=True, ensure_ascii=False),
            encoding="utf-8",
        )


# 全局配置加载器实例
config_loader = ConfigLoader()
