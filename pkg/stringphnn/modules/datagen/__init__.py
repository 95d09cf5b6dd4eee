"""数据集生成与轨迹文件"""
