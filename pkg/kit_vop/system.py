import logging
import warnings

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import SingularMatrixError
from .numeric import DenseTrajectory, cumulative, node_grid, rk4_linear, stage_grid
from .problem import SystemProblem

log = logging.getLogger(__name__)

MIN_STEPS = 16
# 主元相对于原矩阵对应行最大元的下限
PIVOT_RATIO = 1e-14
# Liouville 校验：|det Φ| 相对于 (max|Φ|)^n 的下限
DETERMINANT_RATIO = 1e-12


def invert(mat) -> np.ndarray:
    """部分选主元 LU 分解求逆

    Args:
        mat: n×n 实矩阵

    Returns:
        逆矩阵

    Raises:
        SingularMatrixError: 某个主元小于 1e-14 倍的行尺度
    """
    m = np.asarray(mat, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {m.shape}")
    n = m.shape[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(m)
    order = np.arange(n)
    for i, p in enumerate(piv):
        order[i], order[p] = order[p], order[i]
    row_scale = np.max(np.abs(m[order]), axis=1)
    pivots = np.abs(np.diag(lu))
    bad = np.flatnonzero(pivots <= PIVOT_RATIO * row_scale)
    if bad.size:
        raise SingularMatrixError(f"matrix is numerically singular: pivot {bad[0]} is {pivots[bad[0]]:.3e}")
    return lu_solve((lu, piv), np.eye(n))


class FundamentalMatrix:
    """基本解矩阵 Φ(t)，Φ' = P(t)Φ，Φ(t0) = I

    节点上保存 Φ 与 PΦ，节点之间逐元素三次 Hermite 插值。
    """

    def __init__(self, problem: SystemProblem, nodes: np.ndarray, trajectory: DenseTrajectory) -> None:
        self.problem = problem
        self.n = problem.n
        self.anchor = problem.t0
        self.nodes = nodes
        self.trajectory = trajectory

    def __call__(self, t) -> np.ndarray:
        return self.trajectory("phi", t)

    def derivative(self, t) -> np.ndarray:
        return self.trajectory.derivative("phi", t)

    def node_values(self) -> np.ndarray:
        return self.trajectory.node_values("phi")

    def inverse(self, t) -> np.ndarray:
        return invert(self(t))


class SolutionOperator:
    """解算子 S(t, τ) = Φ(t)·Φ(τ)⁻¹，把 τ 时刻的状态推进到 t"""

    def __init__(self, fundamental: FundamentalMatrix) -> None:
        self.fundamental = fundamental

    def __call__(self, t: float, tau: float) -> np.ndarray:
        return self.fundamental(t) @ self.fundamental.inverse(tau)


def solve_fundamental(problem: SystemProblem, N: int) -> FundamentalMatrix:
    """从单位矩阵出发用 RK4 积分 Φ' = PΦ

    Args:
        problem: 方程组
        N: 步数，不小于 16

    Returns:
        FundamentalMatrix

    Raises:
        SingularMatrixError: 某个节点上 Φ 数值奇异
    """
    if N < MIN_STEPS:
        raise ValueError(f"step count must be at least {MIN_STEPS}, got {N}")
    problem.require_regular()
    t0, t1 = problem.interval
    nodes = node_grid(t0, t1, N)
    M = problem.matrix(stage_grid(t0, t1, N))
    phi = rk4_linear(M, np.eye(problem.n), (t1 - t0) / N)

    dets = np.linalg.det(phi)
    scale = np.max(np.abs(phi), axis=(1, 2)) ** problem.n
    bad = np.flatnonzero(~(np.abs(dets) > DETERMINANT_RATIO * scale))
    if bad.size:
        raise SingularMatrixError(
            f"fundamental matrix is singular at t={nodes[bad[0]]!r}; try a larger step count"
        )
    trajectory = DenseTrajectory(nodes, {"phi": (phi, M[::2] @ phi)})
    log.debug(f"基本解矩阵构造完成: n={problem.n}, N={N}")
    return FundamentalMatrix(problem, nodes, trajectory)


class SystemSolution:
    """x(t) = Φ(t)·(Φ(t0)⁻¹x0 + C(t))，C(t) = ∫_{t0}^{t} Φ(s)⁻¹ b(s) ds"""

    def __init__(self, fundamental: FundamentalMatrix, c0: np.ndarray, duhamel: DenseTrajectory) -> None:
        self.fundamental = fundamental
        self.problem = fundamental.problem
        self.nodes = fundamental.nodes
        self.c0 = c0
        self.duhamel = duhamel

    def homogeneous(self, t) -> np.ndarray:
        return self.fundamental(t) @ self.c0

    def particular(self, t) -> np.ndarray:
        phi = self.fundamental(t)
        return np.einsum("...ij,...j->...i", phi, self.duhamel("C", t))

    def __call__(self, t) -> np.ndarray:
        phi = self.fundamental(t)
        return np.einsum("...ij,...j->...i", phi, self.c0 + self.duhamel("C", t))

    def derivative(self, t) -> np.ndarray:
        """x'(t) = P(t)x(t) + b(t)"""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.atleast_2d(self(t_arr))
        out = np.einsum("kij,kj->ki", self.problem.matrix(t_arr), x) + self.problem.forcing(t_arr)
        return out[0] if np.ndim(t) == 0 else out


def solve_system_ivp(problem: SystemProblem, N: int) -> SystemSolution:
    """Duhamel 原理求解 x' = P(t)x + b(t), x(t0) = x0

    先在节点上对 Φ(s)⁻¹b(s) 做累积复合 Simpson 积分得到 C(t)，再左乘 Φ(t)。
    """
    fundamental = solve_fundamental(problem, N)
    nodes = fundamental.nodes
    phi = fundamental.node_values()
    inverses = np.array([invert(m) for m in phi])
    integrand = np.einsum("kij,kj->ki", inverses, problem.forcing(nodes))
    duhamel = DenseTrajectory(nodes, {"C": (cumulative(integrand, nodes), integrand)})
    c0 = inverses[0] @ np.asarray(problem.x0, dtype=float)
    return SystemSolution(fundamental, c0, duhamel)


def matrix_green(fund: FundamentalMatrix, t: float, s: float, causal: bool = True) -> np.ndarray:
    """方程组的 Green 函数 G(t, s) = Φ(t)·Φ(s)⁻¹

    causal 为真时，s > t 返回零矩阵。
    """
    if causal and s > t:
        return np.zeros((fund.n, fund.n))
    return fund(t) @ fund.inverse(s)
