import math

from .node import BinOp, Call, Const, Expr, Neg, Var, free_of_variable

ZERO = Const(0.0)
ONE = Const(1.0)


def _folded(value: float, fallback: Expr) -> Expr:
    return Const(value) if math.isfinite(value) else fallback


def _neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return _folded(a.value + b.value, BinOp("+", a, b))
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return BinOp("+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return _folded(a.value - b.value, BinOp("-", a, b))
    if b == ZERO:
        return a
    if a == ZERO:
        return _neg(b)
    return BinOp("-", a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return _folded(a.value * b.value, BinOp("*", a, b))
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return BinOp("*", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return _folded(a.value / b.value, BinOp("/", a, b))
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    return BinOp("/", a, b)


def _pow(a: Expr, b: Expr) -> Expr:
    if b == ONE:
        return a
    return BinOp("^", a, b)


def _derive_call(e: Call) -> Expr:
    u = e.arg
    du = differentiate(u)
    if e.func == "exp":
        outer = e
    elif e.func == "ln":
        return _div(du, u)
    elif e.func == "sin":
        outer = Call("cos", u)
    elif e.func == "cos":
        outer = _neg(Call("sin", u))
    elif e.func == "tan":
        return _div(du, _pow(Call("cos", u), Const(2.0)))
    elif e.func == "sinh":
        outer = Call("cosh", u)
    elif e.func == "cosh":
        outer = Call("sinh", u)
    elif e.func == "sqrt":
        return _div(du, _mul(Const(2.0), e))
    else:
        # abs: 符号函数 u/|u|，在 u=0 处无定义（求值时报除零）
        outer = _div(u, e)
    return _mul(outer, du)


def _derive_pow(e: BinOp) -> Expr:
    u, g = e.left, e.right
    du, dg = differentiate(u), differentiate(g)
    if free_of_variable(g):
        return _mul(_mul(g, _pow(u, _sub(g, ONE))), du)
    if free_of_variable(u):
        return _mul(_mul(e, Call("ln", u)), dg)
    # u^g = exp(g·ln u)，要求 u > 0
    ln_u = Call("ln", u)
    return _mul(
        Call("exp", _mul(g, ln_u)),
        _add(_mul(dg, ln_u), _div(_mul(g, du), u)),
    )


def differentiate(e: Expr) -> Expr:
    """精确符号求导

    按和、积、商、链式法则递归求导；指数含自变量的幂先改写为
    ``exp(g*ln(f))`` 再求导（要求 f > 0）。只做常量折叠与 0/1 消去，
    不做其他化简。

    Args:
        e: 语法树

    Returns:
        导函数的语法树
    """
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return _neg(differentiate(e.arg))
    if isinstance(e, Call):
        return _derive_call(e)
    if isinstance(e, BinOp):
        if e.op == "^":
            return _derive_pow(e)
        da, db = differentiate(e.left), differentiate(e.right)
        if e.op == "+":
            return _add(da, db)
        if e.op == "-":
            return _sub(da, db)
        if e.op == "*":
            return _add(_mul(da, e.right), _mul(e.left, db))
        return _div(
            _sub(_mul(da, e.right), _mul(e.left, db)),
            _pow(e.right, Const(2.0)),
        )
    raise TypeError(f"not an Expr node: {e!r}")
