#!/usr/bin/env python3
"""
stringphnn 命令行启动脚本
示例:
    python start_cli.py simulate --config configs/desk.toml --output runs/sim
    python start_cli.py gen-data --config configs/desk.toml --output runs/data
    python start_cli.py train --config configs/desk.toml --data runs/data --model both --output runs/train
"""

import os
import sys
from pathlib import Path

# Windows UTF-8 编码
if sys.platform == "win32":
    os.environ["PYTHONIOENCODING"] = "utf-8"

# 项目根目录
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))


if __name__ == "__main__":
    from stringphnn.cli import main

    sys.exit(main())
