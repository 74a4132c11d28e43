import logging
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import DegenerateBasisError, ResidualCheckError
from .expr import Expr, differentiate, evaluate
from .numeric import DenseTrajectory, cumulative, node_grid, rk4_linear
from .problem import ExprLike, Ode2Problem, as_expr

log = logging.getLogger(__name__)

# 朗斯基行列式的相对下限，低于该值视为线性相关
DEGENERATE_RATIO = 1e-12
RESIDUAL_SAMPLES = 64
RESIDUAL_TOLERANCE = 1e-8
ABEL_SAMPLES = 256
MIN_STEPS = 16

Function = Callable[[np.ndarray], np.ndarray]


class BasisSolution:
    """齐次方程的一对线性无关解 y1、y2 及其导数

    数值构造时在 a 点按单位矩阵取初值：y1=1, y1'=0, y2=0, y2'=1，因此 W(a)=1。

    Args:
        interval: 区间 [a, b]
        y1, y1p, y2, y2p: 可在数组上求值的函数
        nodes: 用于线性无关性校验的节点
        source: 构造方式（rk4 / analytic / reduction）
        trajectory: 数值构造时的稠密输出
    """

    def __init__(
        self,
        interval: Tuple[float, float],
        y1: Function,
        y1p: Function,
        y2: Function,
        y2p: Function,
        nodes: np.ndarray,
        source: str,
        trajectory: Optional[DenseTrajectory] = None,
    ) -> None:
        self.interval = interval
        self.anchor = interval[0]
        self._y1, self._y1p, self._y2, self._y2p = y1, y1p, y2, y2p
        self.nodes = np.asarray(nodes, dtype=float)
        self.source = source
        self.trajectory = trajectory

        values = np.array([f(self.nodes) for f in (y1, y1p, y2, y2p)])
        node_w = values[0] * values[3] - values[1] * values[2]
        scale = float(np.max(np.abs(values)))
        self.wronskian_floor = DEGENERATE_RATIO * scale**2
        if not np.min(np.abs(node_w)) > self.wronskian_floor:
            raise DegenerateBasisError(
                f"basis is linearly dependent: min |W| = {np.min(np.abs(node_w)):.3e} "
                f"on [{interval[0]}, {interval[1]}]"
            )
        self.wronskian_at_anchor = float(node_w[0])

    def y1(self, x):
        return self._y1(x)

    def y1p(self, x):
        return self._y1p(x)

    def y2(self, x):
        return self._y2(x)

    def y2p(self, x):
        return self._y2p(x)

    def __repr__(self) -> str:
        return f"BasisSolution(source={self.source!r}, interval={self.interval}, nodes={len(self.nodes)})"


def wronskian(basis: BasisSolution, x):
    """W(y1, y2) = y1·y2' − y1'·y2"""
    return basis.y1(x) * basis.y2p(x) - basis.y1p(x) * basis.y2(x)


def _expr_function(e: Expr) -> Function:
    return lambda x: evaluate(e, x)


def _check_homogeneous(problem: Ode2Problem, label: str, y: Expr, samples: int) -> Tuple[Expr, Expr]:
    """校验 y 满足齐次方程，返回 (y', y'')"""
    dy = differentiate(y)
    ddy = differentiate(dy)
    xs = np.linspace(problem.a, problem.b, samples)
    terms = (evaluate(ddy, xs), evaluate(problem.p1, xs) * evaluate(dy, xs), evaluate(problem.p2, xs) * evaluate(y, xs))
    residual = float(np.max(np.abs(terms[0] + terms[1] + terms[2])))
    scale = 1.0 + max(float(np.max(np.abs(t))) for t in terms)
    if residual > RESIDUAL_TOLERANCE * scale:
        raise ResidualCheckError(
            f"{label} is not a solution of the homogeneous equation: residual {residual:.3e}"
        )
    return dy, ddy


def solve_basis(problem: Ode2Problem, N: int) -> BasisSolution:
    """用定步长 RK4 数值构造齐次基解

    把 y'' + p1 y' + p2 y = 0 写成关于 (y, y') 的一阶方程组，从 a 出发以
    (1, 0)、(0, 1) 两组初值同时积分，节点上用方程本身给出二阶导数，构成
    三次 Hermite 稠密输出。

    Args:
        problem: 二阶问题
        N: 步数，步长为 (b-a)/N

    Returns:
        BasisSolution

    Raises:
        SingularIntervalError: 区间内有奇点
        DegenerateBasisError: 朗斯基行列式过小
    """
    if N < MIN_STEPS:
        raise ValueError(f"step count must be at least {MIN_STEPS}, got {N}")
    problem.require_regular()
    a, b = problem.interval
    nodes = node_grid(a, b, N)
    xs = np.empty(2 * N + 1)
    xs[::2] = nodes
    xs[1::2] = 0.5 * (nodes[:-1] + nodes[1:])
    p1 = evaluate(problem.p1, xs)
    p2 = evaluate(problem.p2, xs)

    M = np.zeros((2 * N + 1, 2, 2))
    M[:, 0, 1] = 1.0
    M[:, 1, 0] = -p2
    M[:, 1, 1] = -p1
    Y = rk4_linear(M, np.eye(2), (b - a) / N)

    y1, y2 = Y[:, 0, 0], Y[:, 0, 1]
    y1p, y2p = Y[:, 1, 0], Y[:, 1, 1]
    p1n, p2n = p1[::2], p2[::2]
    trajectory = DenseTrajectory(
        nodes,
        {
            "y1": (y1, y1p),
            "y1p": (y1p, -p1n * y1p - p2n * y1),
            "y2": (y2, y2p),
            "y2p": (y2p, -p1n * y2p - p2n * y2),
        },
    )
    log.debug(f"RK4 基解构造完成: N={N}, 区间=[{a}, {b}]")
    return BasisSolution(
        (a, b),
        lambda x: trajectory("y1", x),
        lambda x: trajectory("y1p", x),
        lambda x: trajectory("y2", x),
        lambda x: trajectory("y2p", x),
        nodes,
        "rk4",
        trajectory,
    )


def adopt_analytic_basis(problem: Ode2Problem, y1: ExprLike, y2: ExprLike) -> BasisSolution:
    """采用已知的解析基解

    导数由符号求导得到；在 64 个采样点上校验两者都满足齐次方程，
    并校验朗斯基行列式在区间上不为零。

    Raises:
        ResidualCheckError: 给定函数不是齐次解
        DegenerateBasisError: 两个函数线性相关
    """
    problem.require_regular()
    e1, e2 = as_expr(y1, "y1"), as_expr(y2, "y2")
    d1, _ = _check_homogeneous(problem, "y1", e1, RESIDUAL_SAMPLES)
    d2, _ = _check_homogeneous(problem, "y2", e2, RESIDUAL_SAMPLES)
    return BasisSolution(
        problem.interval,
        _expr_function(e1),
        _expr_function(d1),
        _expr_function(e2),
        _expr_function(d2),
        np.linspace(problem.a, problem.b, RESIDUAL_SAMPLES),
        "analytic",
    )


def reduce_order(problem: Ode2Problem, y1: ExprLike, N: int) -> BasisSolution:
    """降阶法：由一个已知齐次解构造第二个解

    y2 = y1·v，其中 v' = exp(−∫ₐˣ p1)/y1²，v(a) = 0。于是 W(y1, y2) = exp(−∫ₐˣ p1)，
    W(a) = 1。

    Args:
        problem: 二阶问题
        y1: 已知的齐次解
        N: 求积的区间数（偶数）

    Returns:
        BasisSolution，其中 y2 为数值稠密输出

    Raises:
        DegenerateBasisError: 已知解在区间内取零
    """
    if N < MIN_STEPS:
        raise ValueError(f"panel count must be at least {MIN_STEPS}, got {N}")
    problem.require_regular()
    e1 = as_expr(y1, "y1")
    d1, _ = _check_homogeneous(problem, "y1", e1, RESIDUAL_SAMPLES)
    nodes = node_grid(problem.a, problem.b, N)
    y1n, y1pn = evaluate(e1, nodes), evaluate(d1, nodes)
    if np.any(y1n == 0) or np.any(np.sign(y1n) != np.sign(y1n[0])):
        raise DegenerateBasisError("known solution vanishes on the interval, reduction of order fails")
    p1n, p2n = evaluate(problem.p1, nodes), evaluate(problem.p2, nodes)

    w = np.exp(-cumulative(p1n, nodes))
    vp = w / y1n**2
    v = cumulative(vp, nodes)
    y2 = y1n * v
    y2p = y1pn * v + y1n * vp
    trajectory = DenseTrajectory(
        nodes,
        {"y2": (y2, y2p), "y2p": (y2p, -p1n * y2p - p2n * y2)},
    )
    return BasisSolution(
        problem.interval,
        _expr_function(e1),
        _expr_function(d1),
        lambda x: trajectory("y2", x),
        lambda x: trajectory("y2p", x),
        nodes,
        "reduction",
        trajectory,
    )


def abel_check(basis: BasisSolution, problem: Ode2Problem, samples: int = ABEL_SAMPLES) -> float:
    """用 Abel 恒等式校验朗斯基行列式

    Returns:
        256 个采样点上 |W(x) − W(a)·exp(−∫ₐˣ p1)| / |W(a)·exp(−∫ₐˣ p1)| 的最大值，
        内层积分用同一组采样点上的复合 Simpson 公式
    """
    xs = np.linspace(problem.a, problem.b, samples)
    w = wronskian(basis, xs)
    reference = w[0] * np.exp(-cumulative(evaluate(problem.p1, xs), xs))
    return float(np.max(np.abs(w - reference) / np.abs(reference)))
