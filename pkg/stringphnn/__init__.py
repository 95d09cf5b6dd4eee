"""StringPHNN - 非线性弦的保结构仿真与灰盒辨识工具包"""

__version__ = "0.3.0"
