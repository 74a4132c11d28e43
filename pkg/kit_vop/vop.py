import logging
from typing import Tuple

import numpy as np

from .basis import BasisSolution
from .errors import DegenerateBasisError, SingularMatrixError
from .expr import evaluate
from .numeric import DenseTrajectory, cumulative, node_grid
from .problem import Gauge, IvpConditions, Ode1Problem, Ode2Problem

log = logging.getLogger(__name__)

MIN_PANELS = 16


def _check_panels(N: int) -> None:
    if N < MIN_PANELS or N % 2:
        raise ValueError(f"panel count must be even and at least {MIN_PANELS}, got {N}")


class FirstOrderSolution:
    """一阶问题的解 y(x) 及 y'(x) = q − p·y"""

    def __init__(self, problem: Ode1Problem, nodes: np.ndarray, values: np.ndarray) -> None:
        self.problem = problem
        self.nodes = nodes
        slopes = evaluate(problem.q, nodes) - evaluate(problem.p, nodes) * values
        self._trajectory = DenseTrajectory(nodes, {"y": (values, slopes)})

    def y(self, x):
        return self._trajectory("y", x)

    def yprime(self, x):
        return evaluate(self.problem.q, x) - evaluate(self.problem.p, x) * self.y(x)

    __call__ = y


def solve_first_order(problem: Ode1Problem, N: int) -> FirstOrderSolution:
    """一阶方程的常数变易解

    y_c(x) = exp(−∫ₐˣ p)，d1(x) = ∫ₐˣ q/y_c，y = y0·y_c + y_c·d1，满足 y(a) = y0。
    两个积分都用 N 个区间上的累积复合 Simpson 公式。

    Args:
        problem: 一阶问题
        N: 区间数

    Returns:
        FirstOrderSolution
    """
    if N < 2:
        raise ValueError(f"panel count must be at least 2, got {N}")
    problem.require_regular()
    nodes = node_grid(problem.a, problem.b, N)
    yc = np.exp(-cumulative(evaluate(problem.p, nodes), nodes))
    d1 = cumulative(evaluate(problem.q, nodes) / yc, nodes)
    values = problem.initial.y0 * yc + yc * d1
    return FirstOrderSolution(problem, nodes, values)


class GaugeDerivatives:
    """规范 A(x) 下的 c1'(x)、c2'(x)

    在每个 x 处求解

        [y1  y2 ] [c1']   [A                ]
        [y1' y2'] [c2'] = [q − A' − p1·A    ]

    分母为朗斯基行列式 W(x)（Cramer 法则）。A ≡ 0 时退化为经典的
    c1' = −y2·q/W，c2' = y1·q/W。
    """

    def __init__(self, problem: Ode2Problem, basis: BasisSolution, gauge: Gauge) -> None:
        self.problem = problem
        self.basis = basis
        self.gauge = gauge

    def rhs(self, x) -> Tuple[np.ndarray, np.ndarray]:
        """线性方程组右端 (A, q − A' − p1·A)"""
        A = evaluate(self.gauge.A, x)
        r = evaluate(self.problem.q, x) - evaluate(self.gauge.Aprime, x) - evaluate(self.problem.p1, x) * A
        return A, r

    def __call__(self, x) -> Tuple[np.ndarray, np.ndarray]:
        b = self.basis
        y1, y1p, y2, y2p = b.y1(x), b.y1p(x), b.y2(x), b.y2p(x)
        w = y1 * y2p - y1p * y2
        if np.any(np.abs(w) <= b.wronskian_floor):
            raise DegenerateBasisError(f"Wronskian vanishes below {b.wronskian_floor:.3e}")
        A, r = self.rhs(x)
        return (A * y2p - y2 * r) / w, (y1 * r - y1p * A) / w

    def c1prime(self, x):
        return self(x)[0]

    def c2prime(self, x):
        return self(x)[1]


def gauge_coefficient_derivatives(
    problem: Ode2Problem, basis: BasisSolution, gauge: Gauge
) -> GaugeDerivatives:
    return GaugeDerivatives(problem, basis, gauge)


class ParticularSolution:
    """特解 y_p = c1·y1 + c2·y2，其中 c1(a) = c2(a) = 0

    y_p' = c1·y1' + c2·y2' + A（由约束 c1'y1 + c2'y2 = A 得到）。
    """

    def __init__(
        self,
        basis: BasisSolution,
        gauge: Gauge,
        nodes: np.ndarray,
        coefficients: DenseTrajectory,
    ) -> None:
        self.basis = basis
        self.gauge = gauge
        self.nodes = nodes
        self.coefficients = coefficients

    def c1(self, x):
        return self.coefficients("c1", x)

    def c2(self, x):
        return self.coefficients("c2", x)

    def yp(self, x):
        return self.c1(x) * self.basis.y1(x) + self.c2(x) * self.basis.y2(x)

    def yp_prime(self, x):
        return (
            self.c1(x) * self.basis.y1p(x)
            + self.c2(x) * self.basis.y2p(x)
            + evaluate(self.gauge.A, x)
        )

    __call__ = yp


def particular_integral(
    problem: Ode2Problem, basis: BasisSolution, gauge: Gauge, N: int
) -> ParticularSolution:
    """规范 A(x) 下的特解

    c1、c2 为 c1'、c2' 从 a 起的定积分（累积复合 Simpson，N 个区间），
    节点间用以 c' 为导数的三次 Hermite 插值。

    Args:
        problem: 二阶问题
        basis: 齐次基解
        gauge: 规范
        N: 区间数，偶数且不小于 16

    Returns:
        ParticularSolution
    """
    _check_panels(N)
    nodes = node_grid(problem.a, problem.b, N)
    c1p, c2p = gauge_coefficient_derivatives(problem, basis, gauge)(nodes)
    coefficients = DenseTrajectory(
        nodes,
        {"c1": (cumulative(c1p, nodes), c1p), "c2": (cumulative(c2p, nodes), c2p)},
    )
    log.debug(f"特解构造完成: gauge={gauge.label!r}, N={N}")
    return ParticularSolution(basis, gauge, nodes, coefficients)


class IvpSolution:
    """初值问题的完整解 y = k1·y1 + k2·y2 + y_p"""

    def __init__(self, particular: ParticularSolution, k1: float, k2: float) -> None:
        self.particular = particular
        self.basis = particular.basis
        self.nodes = particular.nodes
        self.k1 = k1
        self.k2 = k2

    def y(self, x):
        return self.k1 * self.basis.y1(x) + self.k2 * self.basis.y2(x) + self.particular.yp(x)

    def yprime(self, x):
        return self.k1 * self.basis.y1p(x) + self.k2 * self.basis.y2p(x) + self.particular.yp_prime(x)

    __call__ = y


def _solve_initial_block(basis: BasisSolution, a: float, rhs0: float, rhs1: float) -> Tuple[float, float]:
    """求解 [y1(a) y2(a); y1'(a) y2'(a)]·k = rhs"""
    y1, y2, y1p, y2p = basis.y1(a), basis.y2(a), basis.y1p(a), basis.y2p(a)
    det = y1 * y2p - y2 * y1p
    if abs(det) <= basis.wronskian_floor:
        raise SingularMatrixError("initial-value matrix is singular at x=a")
    return (rhs0 * y2p - y2 * rhs1) / det, (y1 * rhs1 - y1p * rhs0) / det


def solve_ivp(problem: Ode2Problem, basis: BasisSolution, gauge: Gauge, N: int) -> IvpSolution:
    """求解初值问题 y(a)=y0, y'(a)=y0'

    解分为余函数与特解两部分。特解自身的初值 (y_p(a), y_p'(a)) = (0, A(a))
    通过同一个 2×2 方程组扣除，因而对任意规范都满足初值条件。

    Raises:
        ValueError: 问题没有初值条件
    """
    if not isinstance(problem.conditions, IvpConditions):
        raise ValueError("problem has no initial conditions")
    particular = particular_integral(problem, basis, gauge, N)
    a = problem.a
    k1, k2 = _solve_initial_block(
        basis,
        a,
        problem.conditions.y0 - particular.yp(a),
        problem.conditions.y0_prime - particular.yp_prime(a),
    )
    return IvpSolution(particular, k1, k2)
