import inspect
import logging
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import IO, Any, Callable, Dict, List, Optional, Sequence, Tuple

import kit_vop

from .errors import (
    ExprDomainError,
    ExprError,
    KitVopError,
    ProblemFormatError,
    SolverError,
    UsageError,
)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


@dataclass(frozen=True)
class CliConfig:
    """一次命令行调用的完整配置"""

    command: str
    problem: str
    gauge: str = "0"
    N: int = 2000
    output: Optional[str] = None
    mode: Optional[str] = None
    gauges: Tuple[str, ...] = ()
    y1: Optional[str] = None
    y2: Optional[str] = None
    verbose: bool = False


@dataclass
class CommandOutput:
    """子命令的结果：完整的输出文本和退出码"""

    text: str
    exit_code: int = EXIT_OK


@dataclass
class CliRequest:
    argv: List[str]
    stdout: IO[str]
    stderr: IO[str]
    handler: Optional[Callable] = None
    config: Optional[CliConfig] = None
    kwargs: Dict[str, Any] = field(default_factory=dict)


Handler = Callable[[CliRequest], int]


def get_params(func: Callable, kwargs: Dict[str, Any]) -> Dict[str, Any]:
    """按函数签名筛选参数，函数接受 ``**kwargs`` 时原样返回"""
    parameters = inspect.signature(func).parameters
    if any(p.kind is inspect.Parameter.VAR_KEYWORD for p in parameters.values()):
        return dict(kwargs)
    return {k: v for k, v in kwargs.items() if k in parameters}


def split_gauges(text: Optional[str]) -> Tuple[str, ...]:
    """``"0;x^2"`` -> ("0", "x^2")"""
    if not text:
        return ()
    return tuple(part.strip() for part in text.split(";") if part.strip())


def compose(middlewares: Sequence[Callable], handler: Handler) -> Handler:
    """按 aiohttp 的方式串联中间件，列表中靠前的在外层"""
    for middleware in reversed(middlewares):
        handler = partial(middleware, handler=handler)
    return handler


def middleware_factory(self: "kit_vop.KitVop"):
    """
    创建中间件

    Args:
        self: KitVop实例

    Returns:
        中间件列表
    """

    def guard(request: CliRequest, handler: Handler) -> int:
        """
        异常转退出码中间件

        - 用法错误、问题文件格式错误、表达式语法错误: 1
        - 求解失败、求值超出定义域、非法取值: 2
        - 其他异常记录堆栈后返回 2
        """
        try:
            return handler(request)
        except SystemExit as e:
            # --help
            return e.code if isinstance(e.code, int) else EXIT_OK
        except UsageError as e:
            print(f"error: {e}", file=request.stderr)
            return EXIT_USAGE
        except ProblemFormatError as e:
            where = request.config.problem if request.config else "problem"
            print(f"error: {where}: {e}", file=request.stderr)
            return EXIT_USAGE
        except ExprDomainError as e:
            log.error(e)
            print(f"error: {e}", file=request.stderr)
            return EXIT_FAILURE
        except ExprError as e:
            print(f"error: invalid expression: {e}", file=request.stderr)
            return EXIT_USAGE
        except (SolverError, KitVopError) as e:
            log.error(e)
            print(f"error: {e}", file=request.stderr)
            return EXIT_FAILURE
        except ValueError as e:
            log.error(e)
            print(f"error: invalid value: {e}", file=request.stderr)
            return EXIT_FAILURE
        except Exception as e:
            log.exception(e)
            print(f"error: {type(e).__name__}: {e}", file=request.stderr)
            return EXIT_FAILURE

    def merge_params(request: CliRequest, handler: Handler) -> int:
        """
        合并参数中间件

        解析命令行，命令行未给出的值取 KitVop 的构造参数，结果存入 request.config
        """
        method, kwargs = self.router.resolve(request.argv)
        logging.basicConfig(
            level=logging.DEBUG if kwargs.get("verbose") else logging.WARNING,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        defaults = {"gauge": self.gauge, "N": self.N}
        merged = {**defaults, **{k: v for k, v in kwargs.items() if v is not None}}
        merged["command"] = method.__name__[: -len("Command")].replace("_", "-")
        merged["gauges"] = split_gauges(merged.get("gauges"))
        request.handler = method
        request.config = CliConfig(**get_params(CliConfig, merged))
        log.debug(f"配置: {request.config}")
        return handler(request)

    def check_config(request: CliRequest, handler: Handler) -> int:
        """
        配置校验中间件
        """
        config = request.config
        if config.N < 16 or config.N % 2:
            raise UsageError(f"-N must be even and at least 16, got {config.N}")
        if config.command == "greens" and config.mode is None:
            raise UsageError("greens requires --mode ivp or --mode bvp")
        if config.command == "check" and len(config.gauges) < 2:
            raise UsageError("check requires at least two gauges in --gauges, e.g. \"0;x^2\"")
        if config.y2 is not None and config.y1 is None:
            raise UsageError("--y2 requires --y1")
        request.kwargs = asdict(config)
        return handler(request)

    return [guard, merge_params, check_config]


__all__ = ["middleware_factory", "compose", "get_params", "CliConfig", "CommandOutput", "CliRequest"]
