import sys
from typing import Optional, Sequence

from .app import KitVop


def run(argv: Optional[Sequence[str]] = None) -> int:
    """以默认配置执行一次命令行调用，返回退出码"""
    return KitVop().run(argv)


def main() -> None:
    sys.exit(run())
