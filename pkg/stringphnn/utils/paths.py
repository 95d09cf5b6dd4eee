"""统一路径管理"""

from pathlib import Path


def get_application_root() -> Path:
    """项目根目录（stringphnn 包的上一级）"""
    return Path(__file__).resolve().parent.parent.parent


def get_data_dir() -> Path:
    """获取数据目录（日志、默认运行输出）"""
    data_dir = get_application_root() / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    return data_dir


def get_config_dir() -> Path:
    """获取随仓库发布的配置目录"""
    return get_application_root() / "configs"


# 导出路径常量
APPLICATION_ROOT = get_application_root()
DATA_DIR = get_data_dir()
CONFIG_DIR = get_config_dir()


if __name__ == "__main__":
    print("=" * 70)
    print("StringPHNN 路径配置")
    print("=" * 70)
    print(f"应用程序根目录: {APPLICATION_ROOT}")
    print(f"数据目录: {DATA_DIR}")
    print(f"配置目录: {CONFIG_DIR}")
    print("=" * 70)
