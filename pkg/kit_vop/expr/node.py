import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import ExprDomainError

log = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# 支持的函数名
FUNCTIONS = ("exp", "ln", "sin", "cos", "tan", "sinh", "cosh", "sqrt", "abs")
OPERATORS = ("+", "-", "*", "/", "^")


@dataclass(frozen=True)
class Expr:
    """单变量实函数的不可变语法树节点

    所有节点都是冻结的 dataclass，结构相等即 ``==``，可以跨线程共享。
    ``expr(x)`` 等价于 ``evaluate(expr, x)``。
    """

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return evaluate(self, x)

    def __str__(self) -> str:
        return render(self)


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.value):
            raise ValueError(f"constant must be finite, got {self.value!r}")
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Var(Expr):
    """自变量（x，或方程组中的 t）"""


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self) -> None:
        if self.op not in OPERATORS:
            raise ValueError(f"unknown operator {self.op!r}")


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr

    def __post_init__(self) -> None:
        if self.func not in FUNCTIONS:
            raise ValueError(f"unknown function {self.func!r}")


def free_of_variable(e: Expr) -> bool:
    """判断表达式是否不含自变量"""
    if isinstance(e, Const):
        return True
    if isinstance(e, Var):
        return False
    if isinstance(e, (Neg, Call)):
        return free_of_variable(e.arg)
    if isinstance(e, BinOp):
        return free_of_variable(e.left) and free_of_variable(e.right)
    raise TypeError(f"not an Expr node: {e!r}")


def _render_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e16:
        text = str(int(value))
    else:
        text = repr(value)
    return f"({text})" if value < 0 else text


def render(e: Expr, variable: str = "x") -> str:
    """把语法树渲染为全括号文本

    渲染结果经 ``parse`` 解析后与原树结构相等（负常数只会出现在求导结果中，
    渲染为 ``(-c)``，解析后是 ``Neg(Const(c))``，数值相同）。

    Args:
        e: 语法树
        variable: 自变量名

    Returns:
        表达式文本
    """
    if isinstance(e, Const):
        return _render_number(e.value)
    if isinstance(e, Var):
        return variable
    if isinstance(e, Neg):
        return f"(-{render(e.arg, variable)})"
    if isinstance(e, BinOp):
        return f"({render(e.left, variable)} {e.op} {render(e.right, variable)})"
    if isinstance(e, Call):
        return f"{e.func}({render(e.arg, variable)})"
    raise TypeError(f"not an Expr node: {e!r}")


def _check(mask: np.ndarray, x: np.ndarray, message: str) -> None:
    if np.any(mask):
        bad = np.broadcast_to(x, np.shape(mask))[mask]
        raise ExprDomainError(message, np.ravel(bad)[0])


def _finite(value: np.ndarray, x: np.ndarray, message: str) -> np.ndarray:
    _check(~np.isfinite(value), x, message)
    return value


def _eval_call(func: str, a: np.ndarray, x: np.ndarray) -> np.ndarray:
    if func == "ln":
        _check(a <= 0, x, "ln of non-positive value")
        return np.log(a)
    if func == "sqrt":
        _check(a < 0, x, "sqrt of negative value")
        return np.sqrt(a)
    if func == "exp":
        return _finite(np.exp(a), x, "overflow in exp")
    if func == "sin":
        return np.sin(a)
    if func == "cos":
        return np.cos(a)
    if func == "tan":
        return _finite(np.tan(a), x, "tan at a pole")
    if func == "sinh":
        return _finite(np.sinh(a), x, "overflow in sinh")
    if func == "cosh":
        return _finite(np.cosh(a), x, "overflow in cosh")
    return np.abs(a)


def _eval(e: Expr, x: np.ndarray) -> np.ndarray:
    if isinstance(e, Const):
        return np.full(x.shape, e.value)
    if isinstance(e, Var):
        return x
    if isinstance(e, Neg):
        return -_eval(e.arg, x)
    if isinstance(e, Call):
        return _eval_call(e.func, _eval(e.arg, x), x)
    if isinstance(e, BinOp):
        left = _eval(e.left, x)
        right = _eval(e.right, x)
        if e.op == "+":
            return _finite(left + right, x, "overflow in '+'")
        if e.op == "-":
            return _finite(left - right, x, "overflow in '-'")
        if e.op == "*":
            return _finite(left * right, x, "overflow in '*'")
        if e.op == "/":
            _check(right == 0, x, "division by zero")
            return _finite(left / right, x, "overflow in '/'")
        _check((left == 0) & (right < 0), x, "zero raised to a negative power")
        _check(
            (left < 0) & (right != np.round(right)),
            x,
            "negative base raised to a fractional power",
        )
        return _finite(np.power(left, right), x, "overflow in '^'")
    raise TypeError(f"not an Expr node: {e!r}")


def evaluate(e: Expr, x: ArrayLike) -> ArrayLike:
    """以 IEEE 双精度对表达式求值

    支持标量和 numpy 数组（逐点求值，返回同形状数组）。定义域之外不会返回
    NaN，而是抛出 ``ExprDomainError``，其中携带第一个出错的 x。

    Args:
        e: 语法树
        x: 自变量取值，标量或数组

    Returns:
        与 x 同形状的结果

    Raises:
        ExprDomainError: 对数非正、开方为负、除零、0 的负数次幂、溢出
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ExprDomainError("non-finite argument", np.ravel(arr[~np.isfinite(arr)])[0])
    with np.errstate(all="ignore"):
        out = _eval(e, arr)
    if arr.ndim == 0:
        return float(out)
    return np.array(out, dtype=float)
