import logging
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline

log = logging.getLogger(__name__)


def node_grid(a: float, b: float, N: int) -> np.ndarray:
    """N 步等距网格，共 N+1 个节点"""
    return np.linspace(a, b, N + 1)


def stage_grid(a: float, b: float, N: int) -> np.ndarray:
    """RK4 各级所需的半步网格，共 2N+1 个点（偶数下标即节点）"""
    return np.linspace(a, b, 2 * N + 1)


def rk4_linear(
    M: np.ndarray, Y0: np.ndarray, h: float, g: Optional[np.ndarray] = None
) -> np.ndarray:
    """定步长经典四阶 Runge–Kutta 积分线性方程 Y' = M(x) Y + g(x)

    系数事先在半步网格上求好，积分过程不再调用表达式求值。

    Args:
        M: 半步网格上的系数矩阵，形状 (2N+1, n, n)
        Y0: 初值，形状 (n,) 或 (n, k)（按列同时积分 k 个解）
        h: 步长
        g: 半步网格上的非齐次项，形状 (2N+1, n)，None 表示齐次

    Returns:
        各节点上的解，形状 (N+1,) + Y0.shape
    """
    N = (len(M) - 1) // 2
    Y0 = np.asarray(Y0, dtype=float)
    if g is not None and Y0.ndim == 2:
        g = g[:, :, None]

    def f(j: int, y: np.ndarray) -> np.ndarray:
        r = M[j] @ y
        return r if g is None else r + g[j]

    Y = np.empty((N + 1,) + Y0.shape)
    Y[0] = Y0
    for i in range(N):
        j = 2 * i
        y = Y[i]
        k1 = f(j, y)
        k2 = f(j + 1, y + 0.5 * h * k1)
        k3 = f(j + 1, y + 0.5 * h * k2)
        k4 = f(j + 2, y + h * k3)
        Y[i + 1] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Y


def cumulative(values: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """从左端点起的累积复合 Simpson 积分，首项为 0"""
    return cumulative_simpson(values, x=nodes, axis=0, initial=0)


class DenseTrajectory:
    """分段三次 Hermite 稠密输出

    每个分量保存节点上的值和导数，区间内部用三次 Hermite 插值（C¹ 连续），
    在节点处直接返回保存的值。

    Args:
        nodes: 严格递增的节点
        components: 分量名 -> (节点值, 节点导数)，第 0 维对应节点
    """

    def __init__(
        self,
        nodes: np.ndarray,
        components: Dict[str, Tuple[np.ndarray, np.ndarray]],
    ) -> None:
        self.nodes = np.asarray(nodes, dtype=float)
        self._values: Dict[str, np.ndarray] = {}
        self._derivatives: Dict[str, np.ndarray] = {}
        self._splines: Dict[str, CubicHermiteSpline] = {}
        for label, (values, derivatives) in components.items():
            values = np.asarray(values, dtype=float)
            derivatives = np.asarray(derivatives, dtype=float)
            self._values[label] = values
            self._derivatives[label] = derivatives
            self._splines[label] = CubicHermiteSpline(self.nodes, values, derivatives, axis=0)

    @property
    def interval(self) -> Tuple[float, float]:
        return float(self.nodes[0]), float(self.nodes[-1])

    def _locate(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        a, b = self.interval
        slack = 1e-12 * max(1.0, abs(a), abs(b))
        if np.any(x < a - slack) or np.any(x > b + slack):
            raise ValueError(f"evaluation outside the trajectory range [{a}, {b}]")
        idx = np.clip(np.searchsorted(self.nodes, x), 0, len(self.nodes) - 1)
        return idx, self.nodes[idx] == x

    def _evaluate(self, label: str, x, stored: np.ndarray, nu: int):
        arr = np.asarray(x, dtype=float)
        idx, hit = self._locate(arr)
        out = np.asarray(self._splines[label](arr, nu))
        if np.any(hit):
            out = np.array(out)
            out[hit] = stored[idx[hit]]
        return float(out) if out.ndim == 0 else out

    def __call__(self, label: str, x):
        """分量在 x 处的插值"""
        return self._evaluate(label, x, self._values[label], 0)

    def derivative(self, label: str, x):
        """分量导数在 x 处的插值（插值多项式的导数）"""
        return self._evaluate(label, x, self._derivatives[label], 1)

    def node_values(self, label: str) -> np.ndarray:
        return self._values[label]
