"""运行时设置（环境变量 / .env）"""

from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from stringphnn.utils.paths import DATA_DIR


class RuntimeSettings(BaseSettings):
    """STRINGPHNN_* 环境变量"""

    model_config = SettingsConfigDict(
        env_prefix="STRINGPHNN_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    output_root: Path = Field(default=DATA_DIR / "runs", description="默认输出根目录")
    threads: int = Field(default=1, ge=1, description="最大并行进程数")
    log_level: str = Field(default="INFO", description="控制台日志级别")
    log_dir: Optional[Path] = Field(default=None, description="文件日志目录，缺省 data/logs")


@lru_cache(maxsize=1)
def get_settings() -> RuntimeSettings:
    return RuntimeSettings()
