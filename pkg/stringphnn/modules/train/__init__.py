"""训练：损失、训练循环与多种子协议"""
