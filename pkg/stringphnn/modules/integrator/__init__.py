"""交错时间 SAV 积分器"""
