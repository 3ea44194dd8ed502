"""
Core包初始化文件
数值核心：正问题、插值、展开映射、Prony、求解器与权重恢复
"""
