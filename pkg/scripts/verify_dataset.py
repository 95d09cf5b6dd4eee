#!/usr/bin/env python3
"""数据集校验脚本

用法:
    python scripts/verify_dataset.py runs/data
    python scripts/verify_dataset.py runs/data --resimulate
"""

import argparse
import sys
import tempfile
from pathlib import Path

# 添加项目根目录到 Python 路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))


def verify(dataset_dir: Path, resimulate: bool) -> bool:
    """核对树哈希与每条轨迹；resimulate 时按记录的种子重新仿真并逐字节比较"""
    import numpy as np

    from stringphnn.modules.config.schema import ExperimentDocument
    from stringphnn.modules.datagen.generator import AUDIT_TOLERANCE, read_manifest, simulate_trajectory
    from stringphnn.modules.datagen.trajectory import load_trajectory, write_trajectory
    from stringphnn.utils.hashing import blob_hash, tree_hash

    manifest = read_manifest(dataset_dir)
    files = [dataset_dir / r.file for r in manifest.records]
    ok = True

    missing = [f for f in files if not f.exists()]
    if missing:
        print(f"✗ 缺少 {len(missing)} 个轨迹文件: {', '.join(str(f) for f in missing[:5])}")
        return False

    digest = tree_hash(files, dataset_dir)
    if digest == manifest.dataset_hash:
        print(f"✓ 树哈希一致 ({digest[:12]})")
    else:
        print(f"✗ 树哈希不符: 清单 {manifest.dataset_hash[:12]}, 实际 {digest[:12]}")
        ok = False

    document = ExperimentDocument.model_validate(manifest.document) if resimulate else None
    for record, path in zip(manifest.records, files):
        trajectory = load_trajectory(path)
        if not trajectory.is_finite():
            print(f"✗ {record.file}: 含非有限值")
            ok = False
            continue
        if document is None:
            continue
        seq = np.random.SeedSequence(record.seed["entropy"], spawn_key=tuple(record.seed["spawn_key"]))
        fresh, residual = simulate_trajectory(document, seq, record.split)
        with tempfile.TemporaryDirectory() as tmp:
            copy = write_trajectory(Path(tmp) / path.name, fresh)
            same = blob_hash(copy) == blob_hash(path)
        if not same:
            print(f"✗ {record.file}: 重新仿真结果与文件不一致")
            ok = False
        elif residual > AUDIT_TOLERANCE:
            print(f"✗ {record.file}: 能量审计残差 {residual:.3e}")
            ok = False

    print(f"{'✓' if ok else '✗'} 共检查 {len(files)} 条轨迹")
    return ok


def main():
    """主函数"""
    parser = argparse.ArgumentParser(description="校验数据集的哈希与可复现性")
    parser.add_argument("dataset", help="数据集目录")
    parser.add_argument("--resimulate", action="store_true", help="按记录的种子重新仿真并比较")
    args = parser.parse_args()

    from stringphnn.modules.core.errors import StringLabError

    try:
        success = verify(Path(args.dataset), args.resimulate)
    except StringLabError as e:
        print(f"✗ 校验失败: {e}")
        success = False
    sys.exit(0 if success else 1)


if __name__ == "__main__":
    main()
