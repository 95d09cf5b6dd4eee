"""异常定义

所有业务异常都继承 StringLabError，CLI 边界按类型映射退出码。
"""

from typing import Any, Optional


class StringLabError(Exception):
    """基础异常"""

    exit_code: int = 1


class ConfigurationError(StringLabError, ValueError):
    """配置非法：未知键、取值越界、形状不匹配"""

    exit_code = 2

    def __init__(self, message: str, errors: Optional[list[dict[str, Any]]] = None):
        super().__init__(message)
        self.errors = errors or []


class InstabilityError(StringLabError, FloatingPointError):
    """数值不稳定：状态出现 NaN/Inf"""

    exit_code = 3

    def __init__(
        self,
        message: str,
        step_index: Optional[int] = None,
        provenance: Optional[dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.step_index = step_index
        self.provenance = provenance or {}

    def __str__(self) -> str:
        base = super().__str__()
        if self.step_index is not None:
            base = f"{base} (step {self.step_index})"
        return base


class TapeError(StringLabError, RuntimeError):
    """自动微分磁带使用错误"""

    exit_code = 1


class DataFormatError(StringLabError, OSError):
    """轨迹或检查点文件格式错误"""

    exit_code = 4


class AnalysisError(StringLabError, ValueError):
    """信号分析失败（例如零信号没有谱峰）"""

    exit_code = 1
