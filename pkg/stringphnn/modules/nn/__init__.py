"""最小张量库与反向模式自动微分"""
