"""评估：递推仿真、误差指标、频谱分析与图表"""
