import csv
import io
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, List, Optional, Sequence

import numpy as np

from .basis import ABEL_SAMPLES, BasisSolution, abel_check, solve_basis
from .errors import SingularMatrixError
from .expr import evaluate
from .greens import GreensKernel
from .numeric import DenseTrajectory, node_grid, rk4_linear, stage_grid
from .problem import Gauge, Ode2Problem, SystemProblem
from .vop import IvpSolution, solve_ivp

log = logging.getLogger(__name__)

Function = Callable[[np.ndarray], np.ndarray]

GAUGE_TOLERANCE = 1e-5
SHIFT_TOLERANCE = 1e-5
RESIDUAL_TOLERANCE = 1e-5
ABEL_TOLERANCE = 1e-5
CHECK_GRID = 256
SHIFT_ANCHORS = ((1 / 3, 2 / 3), (1 / 4, 3 / 4))


@dataclass(frozen=True)
class CheckRecord:
    name: str
    deviation: float
    tolerance: float
    grid: int

    @property
    def passed(self) -> bool:
        # NaN 偏差视为失败
        return bool(self.deviation <= self.tolerance)


@dataclass
class VerificationReport:
    """一组校验结果，全部通过时 overall 为真"""

    records: List[CheckRecord] = field(default_factory=list)

    def add(self, name: str, deviation: float, tolerance: float, grid: int) -> CheckRecord:
        record = CheckRecord(name, float(deviation), float(tolerance), int(grid))
        self.records.append(record)
        log.debug(f"{name}: deviation={record.deviation:.3e} tolerance={record.tolerance:.3e}")
        return record

    @property
    def overall(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def failures(self) -> List[CheckRecord]:
        return [r for r in self.records if not r.passed]

    def render_text(self) -> str:
        width = max([len("check")] + [len(r.name) for r in self.records])
        lines = [f"{'check':<{width}}  {'deviation':>12}  {'tolerance':>12}  {'grid':>6}  result"]
        for r in self.records:
            lines.append(
                f"{r.name:<{width}}  {r.deviation:>12.4e}  {r.tolerance:>12.4e}  {r.grid:>6d}  "
                f"{'PASS' if r.passed else 'FAIL'}"
            )
        lines.append(f"overall: {'PASS' if self.overall else 'FAIL'}")
        return "\n".join(lines) + "\n"

    def render_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["check", "deviation", "tolerance", "pass"])
        for r in self.records:
            writer.writerow(
                [r.name, format(r.deviation, ".17g"), format(r.tolerance, ".17g"), str(r.passed).lower()]
            )
        return buf.getvalue()


def residual(problem: Ode2Problem, y: Function, yprime: Function, grid: int) -> float:
    """max |y'' + p1·y' + p2·y − q|

    y'' 由 y' 的四阶中心差分得到，步长 h = (b−a)/(8·grid)，只取 grid 个均匀点中的内点。

    Args:
        problem: 二阶问题
        y: 解
        yprime: 解的导数
        grid: 采样点数，不小于 3

    Returns:
        最大偏差
    """
    if grid < 3:
        raise ValueError(f"grid must be at least 3, got {grid}")
    a, b = problem.interval
    xs = np.linspace(a, b, grid)[1:-1]
    h = (b - a) / (8 * grid)
    ypp = (-yprime(xs + 2 * h) + 8 * yprime(xs + h) - 8 * yprime(xs - h) + yprime(xs - 2 * h)) / (12 * h)
    lhs = ypp + evaluate(problem.p1, xs) * yprime(xs) + evaluate(problem.p2, xs) * y(xs)
    return float(np.max(np.abs(lhs - evaluate(problem.q, xs))))


def _solve_gauges(problem: Ode2Problem, gauges: Sequence[Gauge], N: int, basis: Optional[BasisSolution]):
    if len(gauges) < 2:
        raise ValueError("gauge sweep needs at least two gauges")
    if not problem.is_ivp:
        raise ValueError("gauge sweep needs initial conditions")
    basis = basis if basis is not None else solve_basis(problem, N)
    return basis, [solve_ivp(problem, basis, g, N) for g in gauges]


def _sweep_records(gauges: Sequence[Gauge], solutions: Sequence[IvpSolution]) -> VerificationReport:
    nodes = solutions[0].nodes
    values = [s.y(nodes) for s in solutions]
    tolerance = GAUGE_TOLERANCE * (1.0 + max(float(np.max(np.abs(v))) for v in values))
    report = VerificationReport()
    for i, j in combinations(range(len(gauges)), 2):
        report.add(
            f"gauge {gauges[i].label} vs {gauges[j].label}",
            np.max(np.abs(values[i] - values[j])),
            tolerance,
            len(nodes),
        )
    return report


def gauge_invariance_sweep(
    problem: Ode2Problem,
    gauges: Sequence[Gauge],
    N: int,
    basis: Optional[BasisSolution] = None,
) -> VerificationReport:
    """在多个规范下求解初值问题，比较两两之间节点上的最大差

    容差为 1e-5·(1 + max|y|)。不给出 basis 时用 RK4 数值构造。
    """
    _, solutions = _solve_gauges(problem, gauges, N, basis)
    return _sweep_records(gauges, solutions)


@dataclass(frozen=True)
class ShiftFit:
    alpha: float
    beta: float
    misfit: float


def complementary_shift_fit(
    ypA: Function, yp0: Function, basis: BasisSolution, grid: int = CHECK_GRID
) -> ShiftFit:
    """把两个特解之差拟合为余函数 α·y1 + β·y2

    α、β 由区间 1/3、2/3 处两个锚点确定；锚点矩阵奇异时改用 1/4、3/4 再试一次。

    Returns:
        ShiftFit，misfit 为 grid 个均匀点上 |d − α·y1 − β·y2| 的最大值

    Raises:
        SingularMatrixError: 两组锚点矩阵都奇异
    """
    a, b = basis.interval
    xs = np.linspace(a, b, grid)
    d = ypA(xs) - yp0(xs)
    for f1, f2 in SHIFT_ANCHORS:
        x1, x2 = a + f1 * (b - a), a + f2 * (b - a)
        m11, m12 = basis.y1(x1), basis.y2(x1)
        m21, m22 = basis.y1(x2), basis.y2(x2)
        det = m11 * m22 - m12 * m21
        scale = max(abs(m11), abs(m12), abs(m21), abs(m22))
        if abs(det) <= 1e-12 * scale**2:
            log.warning(f"锚点 ({x1:.6g}, {x2:.6g}) 处矩阵奇异，重新选取锚点")
            continue
        r1, r2 = ypA(x1) - yp0(x1), ypA(x2) - yp0(x2)
        alpha = (r1 * m22 - m12 * r2) / det
        beta = (m11 * r2 - m21 * r1) / det
        misfit = float(np.max(np.abs(d - alpha * basis.y1(xs) - beta * basis.y2(xs))))
        return ShiftFit(float(alpha), float(beta), misfit)
    raise SingularMatrixError("anchor matrix is singular at both anchor pairs")


def integrate_system_direct(problem: SystemProblem, N: int) -> DenseTrajectory:
    """直接用 RK4 积分 x' = P x + b，作为 Duhamel 解的独立对照

    Returns:
        DenseTrajectory，分量 ``x``
    """
    t0, t1 = problem.interval
    ts = stage_grid(t0, t1, N)
    M, g = problem.matrix(ts), problem.forcing(ts)
    states = rk4_linear(M, np.asarray(problem.x0, dtype=float), (t1 - t0) / N, g)
    nodes = node_grid(t0, t1, N)
    slopes = np.einsum("kij,kj->ki", M[::2], states) + g[::2]
    return DenseTrajectory(nodes, {"x": (states, slopes)})


def kernel_jump(kernel: GreensKernel, s: float, h: float = 1e-4) -> float:
    """∂G/∂x 在 x = s 处的跃度，两侧各用二阶单侧差分"""
    a, b = kernel.interval
    if not (a + 2 * h <= s <= b - 2 * h):
        raise ValueError(f"s={s} too close to the interval ends for step {h}")
    g0 = kernel(s, s)
    right = (-3 * g0 + 4 * kernel(s + h, s) - kernel(s + 2 * h, s)) / (2 * h)
    left = (3 * g0 - 4 * kernel(s - h, s) + kernel(s - 2 * h, s)) / (2 * h)
    return float(right - left)


def verify_problem(
    problem: Ode2Problem,
    gauges: Sequence[Gauge],
    N: int,
    basis: Optional[BasisSolution] = None,
    grid: int = CHECK_GRID,
) -> VerificationReport:
    """初值问题的完整校验报告

    包括：两两规范一致性；每个规范下解的残差；每个规范的特解相对第一个规范的
    余函数偏移拟合；基解的 Abel 恒等式偏差。
    """
    basis, solutions = _solve_gauges(problem, gauges, N, basis)
    report = _sweep_records(gauges, solutions)
    # 残差容差按右端项的量级放大
    scale = 1.0 + float(np.max(np.abs(evaluate(problem.q, np.linspace(problem.a, problem.b, grid)))))
    for g, s in zip(gauges, solutions):
        report.add(f"residual {g.label}", residual(problem, s.y, s.yprime, grid), RESIDUAL_TOLERANCE * scale, grid)
    base = solutions[0].particular
    for g, s in zip(gauges[1:], solutions[1:]):
        fit = complementary_shift_fit(s.particular.yp, base.yp, basis, grid)
        report.add(f"shift {g.label} vs {gauges[0].label}", fit.misfit, SHIFT_TOLERANCE, grid)
    report.add("abel", abel_check(basis, problem), ABEL_TOLERANCE, ABEL_SAMPLES)
    return report
