"""可训练系统：StringPHNN 与黑盒基线"""
