from typing import Iterable, Optional, Sequence


class KitVopError(Exception):
    """kitVop 所有异常的基类"""


class UsageError(KitVopError):
    """命令行用法错误（参数缺失、文件无法打开等）"""


class ExprError(KitVopError):
    """表达式相关错误的基类"""


class ExprSyntaxError(ExprError):
    """表达式语法错误

    Args:
        message: 错误描述
        offset: 出错位置（UTF-8 字节偏移）
        expected: 该位置期望的记号集合
    """

    def __init__(
        self, message: str, offset: int = 0, expected: Iterable[str] = ()
    ) -> None:
        self.offset = offset
        self.expected = frozenset(expected)
        if self.expected:
            message = f"{message} at offset {offset}, expected one of: {', '.join(sorted(self.expected))}"
        else:
            message = f"{message} at offset {offset}"
        super().__init__(message)


class UnknownFunctionError(ExprSyntaxError):
    """未知函数名"""


class MalformedNumberError(ExprSyntaxError):
    """数字字面量格式错误"""


class ExprDomainError(ExprError):
    """求值时超出定义域（对数非正、开方为负、除零等）

    Args:
        message: 错误描述
        x: 出错的自变量取值
    """

    def __init__(self, message: str, x: float) -> None:
        self.x = float(x)
        super().__init__(f"{message} at x={self.x!r}")


class ProblemFormatError(KitVopError):
    """问题文件格式错误

    Args:
        message: 错误描述
        key: 出错的键名
        line: 出错的行号（如果可知）
    """

    def __init__(
        self, message: str, key: Optional[str] = None, line: Optional[int] = None
    ) -> None:
        self.key = key
        self.line = line
        where = []
        if key:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class SolverError(KitVopError):
    """求解失败的基类"""


class SingularIntervalError(SolverError):
    """区间内含有系数的奇点"""

    def __init__(self, points: Sequence[float]) -> None:
        self.points = tuple(points)
        shown = ", ".join(f"{p:.6g}" for p in self.points[:5])
        super().__init__(f"interval contains singular points of the coefficients: {shown}")


class DegenerateBasisError(SolverError):
    """基解线性相关（朗斯基行列式过小）"""


class ResonantProblemError(SolverError):
    """边值问题共振：齐次问题存在非平凡解"""


class SingularMatrixError(SolverError):
    """矩阵数值奇异"""


class ResidualCheckError(SolverError):
    """给定函数不满足齐次方程"""


__all__ = [
    "KitVopError",
    "UsageError",
    "ExprError",
    "ExprSyntaxError",
    "UnknownFunctionError",
    "MalformedNumberError",
    "ExprDomainError",
    "ProblemFormatError",
    "SolverError",
    "SingularIntervalError",
    "DegenerateBasisError",
    "ResonantProblemError",
    "SingularMatrixError",
    "ResidualCheckError",
]
