"""
启动脚本
命令行入口：python run.py {synth,continue,eval} ...
"""

import sys
from pathlib import Path

# 添加项目根目录到Python路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from cli import main

if __name__ == "__main__":
    sys.exit(main())
