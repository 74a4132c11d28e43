import configparser
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .errors import ExprDomainError, ExprError, ProblemFormatError, SingularIntervalError
from .expr import BinOp, Call, Expr, Neg, differentiate, evaluate, parse, render

log = logging.getLogger(__name__)

ExprLike = Union[str, Expr]

# 奇点检测的均匀采样点数
SINGULAR_SAMPLES = 1024
MAX_SYSTEM_DIMENSION = 8


@dataclass(frozen=True)
class IvpConditions:
    """初值条件 y(a)=y0, y'(a)=y0'（一阶问题只使用 y0）"""

    y0: float
    y0_prime: float = 0.0


@dataclass(frozen=True)
class DirichletZero:
    """齐次 Dirichlet 边界条件 y(a)=y(b)=0"""


Conditions = Union[IvpConditions, DirichletZero]


@dataclass(frozen=True)
class Gauge:
    """规范函数 A(x) 及其精确导数 A'(x)

    经典的常数变易法对应 A ≡ 0。
    """

    A: Expr
    Aprime: Expr
    label: str = ""

    @classmethod
    def classical(cls) -> "Gauge":
        return make_gauge("0")


def make_gauge(source: ExprLike) -> Gauge:
    """由文本或语法树构造规范，导数通过符号求导一次算出"""
    A = parse(source) if isinstance(source, str) else source
    label = source.strip() if isinstance(source, str) else render(A)
    return Gauge(A=A, Aprime=differentiate(A), label=label)


def _check_interval(interval: Sequence[float]) -> Tuple[float, float]:
    if len(interval) != 2:
        raise ProblemFormatError("interval needs exactly two numbers", key="interval")
    a, b = float(interval[0]), float(interval[1])
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ProblemFormatError("interval bounds must be finite", key="interval")
    if a >= b:
        raise ProblemFormatError(f"interval must satisfy a < b, got {a!r} >= {b!r}", key="interval")
    return a, b


@dataclass(frozen=True)
class Ode1Problem:
    """一阶线性方程 y' + p(x) y = q(x), y(a) = y0"""

    p: Expr
    q: Expr
    interval: Tuple[float, float]
    initial: IvpConditions
    singular_points: Tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "interval", _check_interval(self.interval))
        if not np.isfinite(self.initial.y0):
            raise ProblemFormatError("initial value must be finite", key="ivp")

    @property
    def a(self) -> float:
        return self.interval[0]

    @property
    def b(self) -> float:
        return self.interval[1]

    def require_regular(self) -> None:
        if self.singular_points:
            raise SingularIntervalError(self.singular_points)


@dataclass(frozen=True)
class Ode2Problem:
    """标准形式的二阶线性方程 y'' + p1(x) y' + p2(x) y = q(x)

    读入时若给出首项系数 lead，则 p1、p2、q 均已除以 lead。
    """

    p1: Expr
    p2: Expr
    q: Expr
    interval: Tuple[float, float]
    conditions: Conditions
    singular_points: Tuple[float, ...] = ()
    lead: Optional[Expr] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "interval", _check_interval(self.interval))
        if isinstance(self.conditions, IvpConditions):
            if not (np.isfinite(self.conditions.y0) and np.isfinite(self.conditions.y0_prime)):
                raise ProblemFormatError("initial values must be finite", key="ivp")

    @property
    def a(self) -> float:
        return self.interval[0]

    @property
    def b(self) -> float:
        return self.interval[1]

    @property
    def is_ivp(self) -> bool:
        return isinstance(self.conditions, IvpConditions)

    def require_regular(self) -> None:
        if self.singular_points:
            raise SingularIntervalError(self.singular_points)


@dataclass(frozen=True)
class SystemProblem:
    """n 维线性方程组 x'(t) = P(t) x(t) + b(t), x(t0) = x0"""

    n: int
    P: Tuple[Tuple[Expr, ...], ...]
    b: Tuple[Expr, ...]
    interval: Tuple[float, float]
    x0: Tuple[float, ...]
    singular_points: Tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "interval", _check_interval(self.interval))
        if not 1 <= self.n <= MAX_SYSTEM_DIMENSION:
            raise ProblemFormatError(
                f"dimension must be between 1 and {MAX_SYSTEM_DIMENSION}", key="n"
            )
        if len(self.P) != self.n or any(len(row) != self.n for row in self.P):
            raise ProblemFormatError(f"P must be {self.n}x{self.n}", key="P")
        if len(self.b) != self.n:
            raise ProblemFormatError(f"b must have {self.n} entries", key="b")
        if len(self.x0) != self.n:
            raise ProblemFormatError(f"x0 must have {self.n} entries", key="x0")

    @property
    def t0(self) -> float:
        return self.interval[0]

    @property
    def t_end(self) -> float:
        return self.interval[1]

    def matrix(self, t: np.ndarray) -> np.ndarray:
        """在一组时刻上求 P(t)，形状 (len(t), n, n)"""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t.size, self.n, self.n))
        for i, row in enumerate(self.P):
            for j, entry in enumerate(row):
                out[:, i, j] = evaluate(entry, t)
        return out

    def forcing(self, t: np.ndarray) -> np.ndarray:
        """在一组时刻上求 b(t)，形状 (len(t), n)"""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((t.size, self.n))
        for i, entry in enumerate(self.b):
            out[:, i] = evaluate(entry, t)
        return out

    def require_regular(self) -> None:
        if self.singular_points:
            raise SingularIntervalError(self.singular_points)


def as_expr(value: ExprLike, key: str, variable: str = "x") -> Expr:
    if isinstance(value, Expr):
        return value
    try:
        return parse(value, variable)
    except ExprError as e:
        raise ProblemFormatError(f"invalid expression: {e}", key=key) from e


def _failing_points(e: Expr, xs: np.ndarray) -> List[float]:
    try:
        evaluate(e, xs)
        return []
    except ExprDomainError:
        pass
    bad = []
    for x in xs:
        try:
            evaluate(e, x)
        except ExprDomainError:
            bad.append(float(x))
    return bad


def _lead_zeros(lead: Expr, xs: np.ndarray) -> List[float]:
    try:
        values = np.broadcast_to(np.asarray(evaluate(lead, xs), dtype=float), xs.shape)
    except ExprDomainError:
        values = []
        for x in xs:
            try:
                values.append(evaluate(lead, x))
            except ExprDomainError:
                values.append(np.nan)
        values = np.asarray(values, dtype=float)
    zeros = [float(x) for x, v in zip(xs, values) if v == 0]
    for i in range(len(xs) - 1):
        lo, hi = values[i], values[i + 1]
        if np.isfinite(lo) and np.isfinite(hi) and lo * hi < 0:
            try:
                zeros.append(float(brentq(lambda x: evaluate(lead, x), xs[i], xs[i + 1])))
            except ExprDomainError:
                zeros.append(float(xs[i]))
    return zeros


def _guarded_arguments(e: Expr):
    """遍历语法树，给出所有除法的分母以及 ln、sqrt 的参数"""
    if isinstance(e, BinOp):
        if e.op == "/":
            yield e.right
        yield from _guarded_arguments(e.left)
        yield from _guarded_arguments(e.right)
    elif isinstance(e, Call):
        if e.func in ("ln", "sqrt"):
            yield e.arg
        yield from _guarded_arguments(e.arg)
    elif isinstance(e, Neg):
        yield from _guarded_arguments(e.arg)


def find_singular_points(
    exprs: Sequence[Expr],
    interval: Tuple[float, float],
    lead: Optional[Expr] = None,
    samples: int = SINGULAR_SAMPLES,
) -> Tuple[float, ...]:
    """在区间上检测系数的奇点

    在 ``samples`` 个均匀点上逐个求值，求值失败的点记为奇点。除法的分母、
    ln 与 sqrt 的参数以及首项系数在相邻采样点之间变号时，用 Brent 法求出零点，
    这样落在两个采样点之间的极点也不会漏掉。

    Args:
        exprs: 需要检测的系数
        interval: 区间 [a, b]
        lead: 首项系数（可选）
        samples: 采样点数

    Returns:
        排好序的奇点元组
    """
    xs = np.linspace(interval[0], interval[1], samples)
    points: List[float] = []
    for e in exprs:
        points.extend(_failing_points(e, xs))
        for guarded in _guarded_arguments(e):
            points.extend(_lead_zeros(guarded, xs))
    if lead is not None:
        points.extend(_lead_zeros(lead, xs))
    spacing = (interval[1] - interval[0]) / (samples - 1)
    merged: List[float] = []
    for p in sorted(points):
        if not merged or p - merged[-1] > 0.5 * spacing:
            merged.append(p)
    if merged:
        log.debug(f"检测到奇点: {merged}")
    return tuple(merged)


def make_ode1(
    p: ExprLike, q: ExprLike, interval: Sequence[float], y0: float
) -> Ode1Problem:
    """构造一阶问题"""
    p_expr, q_expr = as_expr(p, "p"), as_expr(q, "q")
    interval = _check_interval(interval)
    return Ode1Problem(
        p=p_expr,
        q=q_expr,
        interval=interval,
        initial=IvpConditions(float(y0)),
        singular_points=find_singular_points([p_expr], interval),
    )


def make_ode2(
    p1: ExprLike,
    p2: ExprLike,
    q: ExprLike,
    interval: Sequence[float],
    ivp: Optional[Sequence[float]] = None,
    bvp: bool = False,
    lead: Optional[ExprLike] = None,
) -> Ode2Problem:
    """构造二阶问题并化为首项系数为 1 的标准形式

    Args:
        p1: y' 的系数
        p2: y 的系数
        q: 右端项
        interval: 区间 [a, b]
        ivp: 初值 (y0, y0')，与 bvp 二选一
        bvp: 是否为齐次 Dirichlet 边值问题
        lead: 首项系数（可选），读入时除掉

    Returns:
        Ode2Problem
    """
    if (ivp is None) == (not bvp):
        raise ProblemFormatError("exactly one of 'ivp' or 'bvp' is required", key="ivp")
    p1_expr, p2_expr, q_expr = as_expr(p1, "p1"), as_expr(p2, "p2"), as_expr(q, "q")
    lead_expr = None
    if lead is not None:
        lead_expr = as_expr(lead, "lead")
        p1_expr = BinOp("/", p1_expr, lead_expr)
        p2_expr = BinOp("/", p2_expr, lead_expr)
        q_expr = BinOp("/", q_expr, lead_expr)
    interval = _check_interval(interval)
    if ivp is not None:
        if len(ivp) != 2:
            raise ProblemFormatError("ivp needs two numbers: y0 y0'", key="ivp")
        conditions: Conditions = IvpConditions(float(ivp[0]), float(ivp[1]))
    else:
        conditions = DirichletZero()
    return Ode2Problem(
        p1=p1_expr,
        p2=p2_expr,
        q=q_expr,
        interval=interval,
        conditions=conditions,
        singular_points=find_singular_points([p1_expr, p2_expr], interval, lead_expr),
        lead=lead_expr,
    )


def make_system(
    P: Sequence[Sequence[ExprLike]],
    b: Sequence[ExprLike],
    interval: Sequence[float],
    x0: Sequence[float],
) -> SystemProblem:
    """构造 n 维方程组，表达式以 t 为自变量"""
    n = len(P)
    P_expr = tuple(
        tuple(as_expr(entry, f"P[{i}][{j}]", "t") for j, entry in enumerate(row))
        for i, row in enumerate(P)
    )
    b_expr = tuple(as_expr(entry, f"b[{i}]", "t") for i, entry in enumerate(b))
    interval = _check_interval(interval)
    return SystemProblem(
        n=n,
        P=P_expr,
        b=b_expr,
        interval=interval,
        x0=tuple(float(v) for v in x0),
        singular_points=find_singular_points([e for row in P_expr for e in row] + list(b_expr), interval),
    )


_MATRIX_KEY = re.compile(r"P\[(\d+)\]\[(\d+)\]")
_VECTOR_KEY = re.compile(r"b\[(\d+)\]")
_ALLOWED_KEYS = {
    "ode1": {"kind", "interval", "p", "q", "ivp"},
    "ode2": {"kind", "interval", "lead", "p1", "p2", "q", "ivp", "bvp"},
    "system": {"kind", "interval", "n", "x0"},
}


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == value[-1] == '"':
        return value[1:-1]
    return value


def _numbers(entries: Dict[str, str], key: str, count: Optional[int] = None) -> List[float]:
    raw = _require(entries, key)
    try:
        values = [float(v) for v in raw.split()]
    except ValueError:
        raise ProblemFormatError(f"expected numbers, got '{raw}'", key=key) from None
    if count is not None and len(values) != count:
        raise ProblemFormatError(f"expected {count} numbers, got {len(values)}", key=key)
    if not all(np.isfinite(values)):
        raise ProblemFormatError("numbers must be finite", key=key)
    return values


def _require(entries: Dict[str, str], key: str) -> str:
    if key not in entries:
        raise ProblemFormatError("missing key", key=key)
    return entries[key]


def _read_sections(text: str) -> Dict[str, str]:
    parser = configparser.ConfigParser(
        interpolation=None,
        delimiters=("=",),
        comment_prefixes=("#", ";"),
        inline_comment_prefixes=None,
        strict=True,
        default_section="\x00defaults",
    )
    parser.optionxform = str  # 键名区分大小写（P 与 b）
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as e:
        raise ProblemFormatError("missing section [problem]", line=e.lineno) from None
    except configparser.DuplicateOptionError as e:
        raise ProblemFormatError("duplicate key", key=e.option, line=e.lineno) from None
    except configparser.DuplicateSectionError as e:
        raise ProblemFormatError(f"duplicate section [{e.section}]", line=e.lineno) from None
    except configparser.Error as e:
        raise ProblemFormatError(f"cannot parse problem file: {e.message}") from None
    if not parser.has_section("problem"):
        raise ProblemFormatError("missing section [problem]")
    for section in parser.sections():
        if section != "problem":
            raise ProblemFormatError(f"unknown section [{section}]")
    return {k: _unquote(v) for k, v in parser.items("problem")}


def _load_system(entries: Dict[str, str], interval: Tuple[float, float]) -> SystemProblem:
    raw_n = _require(entries, "n")
    try:
        n = int(raw_n)
    except ValueError:
        raise ProblemFormatError(f"expected an integer, got '{raw_n}'", key="n") from None
    if not 1 <= n <= MAX_SYSTEM_DIMENSION:
        raise ProblemFormatError(f"dimension must be between 1 and {MAX_SYSTEM_DIMENSION}", key="n")
    P: List[List[Optional[str]]] = [[None] * n for _ in range(n)]
    b = ["0"] * n
    for key, value in entries.items():
        if key in _ALLOWED_KEYS["system"]:
            continue
        m = _MATRIX_KEY.fullmatch(key)
        if m:
            i, j = int(m.group(1)), int(m.group(2))
            if i >= n or j >= n:
                raise ProblemFormatError(f"index out of range for n={n}", key=key)
            P[i][j] = value
            continue
        m = _VECTOR_KEY.fullmatch(key)
        if m:
            i = int(m.group(1))
            if i >= n:
                raise ProblemFormatError(f"index out of range for n={n}", key=key)
            b[i] = value
            continue
        raise ProblemFormatError("unknown key", key=key)
    for i in range(n):
        for j in range(n):
            if P[i][j] is None:
                raise ProblemFormatError("missing key", key=f"P[{i}][{j}]")
    x0 = _numbers(entries, "x0", n)
    return make_system(P, b, interval, x0)


def load_problem(text: str) -> Union[Ode1Problem, Ode2Problem, SystemProblem]:
    """解析问题文件内容

    文件为按行组织的 UTF-8 文本：``[problem]`` 段内写 ``key = value``，表达式用
    双引号括起。同样的字节总是得到结构相等的问题对象。

    Args:
        text: 文件内容

    Returns:
        Ode1Problem、Ode2Problem 或 SystemProblem

    Raises:
        ProblemFormatError: 缺少键、未知键、形状不匹配、表达式错误、区间非法
    """
    entries = _read_sections(text)
    kind = _require(entries, "kind")
    if kind not in _ALLOWED_KEYS:
        raise ProblemFormatError(f"unknown kind '{kind}', expected ode1, ode2 or system", key="kind")
    interval = _check_interval(_numbers(entries, "interval", 2))

    if kind == "system":
        return _load_system(entries, interval)

    for key in entries:
        if key not in _ALLOWED_KEYS[kind]:
            raise ProblemFormatError("unknown key", key=key)

    if kind == "ode1":
        return make_ode1(
            _require(entries, "p"),
            _require(entries, "q"),
            interval,
            _numbers(entries, "ivp", 1)[0],
        )

    ivp = None
    bvp = False
    if "ivp" in entries and "bvp" in entries:
        raise ProblemFormatError("'ivp' and 'bvp' are mutually exclusive", key="bvp")
    if "bvp" in entries:
        if entries["bvp"] != "dirichlet0":
            raise ProblemFormatError(
                f"unsupported boundary condition '{entries['bvp']}', only dirichlet0", key="bvp"
            )
        bvp = True
    else:
        ivp = _numbers(entries, "ivp", 2)
    return make_ode2(
        _require(entries, "p1"),
        _require(entries, "p2"),
        _require(entries, "q"),
        interval,
        ivp=ivp,
        bvp=bvp,
        lead=entries.get("lead"),
    )


def load_problem_file(path: Union[str, Path]) -> Union[Ode1Problem, Ode2Problem, SystemProblem]:
    """读取并解析问题文件"""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ProblemFormatError(f"file is not valid UTF-8 (byte {e.start})") from None
    log.debug(f"读取问题文件 {path}")
    return load_problem(text)
