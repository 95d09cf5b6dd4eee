"""真值弦模型：离散哈密顿量、力、耗散与激励"""
