import logging
from typing import Callable, Tuple

import numpy as np

from .basis import BasisSolution, wronskian
from .errors import DegenerateBasisError, ResonantProblemError
from .expr import Expr, evaluate
from .numeric import DenseTrajectory, cumulative, node_grid
from .problem import DirichletZero, Ode2Problem

log = logging.getLogger(__name__)

IVP_CAUSAL = "ivp-causal"
BVP_DIRICHLET = "bvp-dirichlet"
MIN_PANELS = 16
# 边界矩阵行列式的相对下限，低于该值视为共振
RESONANCE_RATIO = 1e-8

Branch = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


class GreensKernel:
    """Green 函数 G(x, s)

    两种核在对角线 x = s 的两侧都可以分离为

        G(x, s) = y1(x)·α(s) + y2(x)·β(s)

    下支 (s ≤ x) 与上支 (s > x) 各有一组系数 (α, β)。因果核的上支恒为零，
    边值核的两支由满足边界条件的组合 u、v 给出。

    Args:
        kind: ``ivp-causal`` 或 ``bvp-dirichlet``
        basis: 齐次基解
        lower: s -> (α, β)，用于 s ≤ x
        upper: s -> (α, β)，用于 s > x；None 表示恒为零（因果核）
    """

    def __init__(self, kind: str, basis: BasisSolution, lower: Branch, upper: Branch = None) -> None:
        if kind not in (IVP_CAUSAL, BVP_DIRICHLET):
            raise ValueError(f"unknown kernel kind '{kind}'")
        self.kind = kind
        self.basis = basis
        self.interval = basis.interval
        self._lower = lower
        self._upper = upper

    @property
    def causal(self) -> bool:
        return self._upper is None

    def coefficients(self, s, side: str = "lower") -> Tuple[np.ndarray, np.ndarray]:
        """某一支在 s 处的系数 (α(s), β(s))"""
        if side == "lower":
            return self._lower(s)
        if side != "upper":
            raise ValueError(f"side must be 'lower' or 'upper', got '{side}'")
        if self._upper is None:
            zero = np.zeros_like(np.asarray(s, dtype=float))
            return zero, zero
        return self._upper(s)

    def _combine(self, x, s, f1, f2):
        x, s = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(s, dtype=float))
        below = s <= x
        la, lb = self.coefficients(s, "lower")
        if self._upper is None:
            out = np.where(below, f1(x) * la + f2(x) * lb, 0.0)
        else:
            ua, ub = self._upper(s)
            out = f1(x) * np.where(below, la, ua) + f2(x) * np.where(below, lb, ub)
        return float(out) if out.ndim == 0 else out

    def __call__(self, x, s):
        return self._combine(x, s, self.basis.y1, self.basis.y2)

    def derivative(self, x, s):
        """∂G/∂x，由基解导数解析给出；对角线上取下支（x = s⁺）的值"""
        return self._combine(x, s, self.basis.y1p, self.basis.y2p)

    def __repr__(self) -> str:
        return f"GreensKernel(kind={self.kind!r}, interval={self.interval})"


def _checked_wronskian(basis: BasisSolution, s) -> np.ndarray:
    w = wronskian(basis, s)
    if np.any(np.abs(w) <= basis.wronskian_floor):
        raise DegenerateBasisError(f"Wronskian vanishes below {basis.wronskian_floor:.3e}")
    return w


def build_ivp_kernel(basis: BasisSolution) -> GreensKernel:
    """初值问题的因果核

    G(x, s) = (y1(s)·y2(x) − y1(x)·y2(s)) / W(s)，s ≤ x；s > x 时严格为 0。
    """

    def lower(s):
        w = _checked_wronskian(basis, s)
        return -basis.y2(s) / w, basis.y1(s) / w

    return GreensKernel(IVP_CAUSAL, basis, lower)


def build_bvp_kernel(basis: BasisSolution, problem: Ode2Problem) -> GreensKernel:
    """齐次 Dirichlet 边值问题 y(a) = y(b) = 0 的核

    取 u = y2(a)·y1 − y1(a)·y2（u(a) = 0）与 v = y2(b)·y1 − y1(b)·y2（v(b) = 0），
    G(x, s) = u(min(x, s))·v(max(x, s)) / W(u, v)(s)，其中 W(u, v) = det·W，
    det = y1(a)·y2(b) − y2(a)·y1(b) 为边界矩阵的行列式。

    Args:
        basis: 齐次基解
        problem: 边值问题

    Returns:
        GreensKernel

    Raises:
        ResonantProblemError: 边界矩阵奇异，齐次边值问题有非平凡解
    """
    if not isinstance(problem.conditions, DirichletZero):
        raise ValueError("problem is not a Dirichlet boundary value problem")
    a, b = problem.interval
    ya = (basis.y1(a), basis.y2(a))
    yb = (basis.y1(b), basis.y2(b))
    det = ya[0] * yb[1] - ya[1] * yb[0]
    scale = max(abs(v) for v in ya + yb)
    if abs(det) <= RESONANCE_RATIO * scale**2:
        raise ResonantProblemError(
            f"boundary matrix is singular (det={det:.3e}): the homogeneous problem "
            f"has a nontrivial solution on [{a}, {b}]"
        )
    # u = u1·y1 + u2·y2, v = v1·y1 + v2·y2
    u1, u2 = ya[1], -ya[0]
    v1, v2 = yb[1], -yb[0]

    def lower(s):
        scaled = (u1 * basis.y1(s) + u2 * basis.y2(s)) / (det * _checked_wronskian(basis, s))
        return v1 * scaled, v2 * scaled

    def upper(s):
        scaled = (v1 * basis.y1(s) + v2 * basis.y2(s)) / (det * _checked_wronskian(basis, s))
        return u1 * scaled, u2 * scaled

    log.debug(f"边值核构造完成: det={det:.6g}")
    return GreensKernel(BVP_DIRICHLET, basis, lower, upper)


class KernelSolution:
    """y(x) = ∫ₐᵇ G(x, s) q(s) ds 及 y'(x) = ∫ₐᵇ ∂ₓG(x, s) q(s) ds

    按分离形式，y = y1·(Iα⁻ + Iα⁺) + y2·(Iβ⁻ + Iβ⁺)，其中带 ⁻ 的是下支系数在
    [a, x] 上的积分，带 ⁺ 的是上支系数在 [x, b] 上的积分。
    """

    def __init__(self, kernel: GreensKernel, nodes: np.ndarray, integrals: DenseTrajectory) -> None:
        self.kernel = kernel
        self.nodes = nodes
        self.integrals = integrals

    def _weights(self, x):
        return self.integrals("alpha", x), self.integrals("beta", x)

    def y(self, x):
        alpha, beta = self._weights(x)
        return self.kernel.basis.y1(x) * alpha + self.kernel.basis.y2(x) * beta

    def yprime(self, x):
        alpha, beta = self._weights(x)
        return self.kernel.basis.y1p(x) * alpha + self.kernel.basis.y2p(x) * beta

    __call__ = y


def apply_kernel(kernel: GreensKernel, q: Expr, N: int) -> KernelSolution:
    """用核求解 y(x) = ∫ₐᵇ G(x, s) q(s) ds

    积分在 s = x 处分成 [a, x] 与 [x, b] 两段，每段只含一支光滑的被积函数，
    因此复合 Simpson 公式不会跨越对角线上的导数间断。两段积分都在 N 个区间的
    节点网格上累积求出，节点之间用三次 Hermite 插值。

    Args:
        kernel: Green 函数
        q: 右端项
        N: 区间数，偶数且不小于 16

    Returns:
        KernelSolution
    """
    if N < MIN_PANELS or N % 2:
        raise ValueError(f"panel count must be even and at least {MIN_PANELS}, got {N}")
    a, b = kernel.interval
    nodes = node_grid(a, b, N)
    qn = evaluate(q, nodes) * np.ones_like(nodes)
    components = {}
    la, lb = kernel.coefficients(nodes, "lower")
    ua, ub = kernel.coefficients(nodes, "upper")
    for label, lower, upper in (("alpha", la, ua), ("beta", lb, ub)):
        below = cumulative(lower * qn, nodes)
        above = cumulative(upper * qn, nodes)
        values = below + (above[-1] - above)
        components[label] = (values, (lower - upper) * qn)
    log.debug(f"核积分完成: kind={kernel.kind}, N={N}")
    return KernelSolution(kernel, nodes, DenseTrajectory(nodes, components))


def sample_kernel(kernel: GreensKernel, nx: int, ns: int) -> np.ndarray:
    """在 [a, b]² 的均匀网格上采样核

    Returns:
        形状 (nx·ns, 3) 的数组，每行 (x, s, G)，先按 x 再按 s 排列
    """
    if nx < 2 or ns < 2:
        raise ValueError(f"grid needs at least 2 points per axis, got {nx}x{ns}")
    a, b = kernel.interval
    X, S = np.meshgrid(np.linspace(a, b, nx), np.linspace(a, b, ns), indexing="ij")
    G = kernel(X, S)
    return np.column_stack([X.ravel(), S.ravel(), np.asarray(G).ravel()])
