"""核心模块 - 网格、差分算子、配置类型与异常"""
