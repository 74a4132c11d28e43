import argparse
import inspect
import re
from typing import Any, Callable, Dict, Sequence, Tuple

from .errors import UsageError

Option = Tuple[Tuple[str, ...], Dict[str, Any]]


def argument(*flags: str, **kwargs) -> Option:
    """一个命令行参数的声明，参数同 ``ArgumentParser.add_argument``"""
    return flags, kwargs


def options(*specs: Option):
    """给子命令方法附加命令行参数"""

    def decorator(func):
        func._cli_options = list(specs)  # 给函数添加一个自定义属性
        return func

    return decorator


class ArgumentParser(argparse.ArgumentParser):
    """出错时抛出 UsageError 而不是直接退出进程"""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


class CommandRouter(ArgumentParser):
    """基于方法命名约定注册子命令

    - solveCommand: 注册为 ``solve`` 子命令
    - xxxCommand: 注册为 ``xxx`` 子命令
    - 方法名中的下划线转换为连字符，例如 kernel_gridCommand 对应 ``kernel-grid``

    方法上由 ``@options`` 声明的参数加到对应子命令上，方法文档的第一行作为帮助。
    """

    def __init__(self, cls, prog: str = "kitvop") -> None:
        """初始化路由

        Args:
            cls: 包含子命令方法的类实例
            prog: 程序名
        """
        super().__init__(prog=prog, description="常数变易法线性常微分方程求解工具")
        self.add_argument("-v", "--verbose", action="store_true", help="输出调试日志")
        self.commands: Dict[str, Callable] = {}
        self._register_commands(cls)

    def _register_commands(self, cls) -> None:
        subparsers = self.add_subparsers(
            dest="command", metavar="COMMAND", parser_class=ArgumentParser
        )
        subparsers.required = True
        regex = re.compile("Command$")

        for name, method in inspect.getmembers(cls, predicate=inspect.ismethod):
            if regex.search(name) is None:
                continue
            command = regex.sub("", name).replace("_", "-")
            doc = inspect.getdoc(method) or ""
            parser = subparsers.add_parser(
                command,
                help=doc.splitlines()[0] if doc else None,
                description=doc,
                formatter_class=argparse.RawDescriptionHelpFormatter,
            )
            for flags, kwargs in getattr(method, "_cli_options", []):
                parser.add_argument(*flags, **kwargs)
            self.commands[command] = method

    def resolve(self, argv: Sequence[str]) -> Tuple[Callable, Dict[str, Any]]:
        """解析命令行，返回子命令方法和参数字典"""
        namespace = self.parse_args(list(argv))
        kwargs = vars(namespace)
        return self.commands[kwargs.pop("command")], kwargs
