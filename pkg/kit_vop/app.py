import contextlib
import csv
import io
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from .basis import BasisSolution, abel_check, adopt_analytic_basis, reduce_order, solve_basis, wronskian
from .errors import ExprError, UsageError
from .expr import Expr, parse
from .greens import apply_kernel, build_bvp_kernel, build_ivp_kernel, sample_kernel
from .middleware import CliRequest, CommandOutput, EXIT_FAILURE, compose, get_params, middleware_factory
from .problem import Gauge, Ode1Problem, Ode2Problem, SystemProblem, load_problem_file, make_gauge
from .router import CommandRouter, argument, options
from .system import solve_system_ivp
from .verify import verify_problem
from .vop import solve_first_order, solve_ivp

log = logging.getLogger(__name__)

Problem = Union[Ode1Problem, Ode2Problem, SystemProblem]

PROBLEM = argument("problem", help="问题文件（UTF-8 文本）")
STEPS = argument("-N", type=int, help="区间数/步数，偶数且不小于 16")
OUTPUT = argument("-o", "--output", dest="output", help="输出文件，缺省写到标准输出")
Y1 = argument("--y1", help="解析基解 y1(x)；单独给出时用降阶法求 y2")
Y2 = argument("--y2", help="解析基解 y2(x)，需同时给出 --y1")
WRONSKIAN_POINTS = 9


class KitVop:
    """常数变易法求解工具的命令行应用

    Args:
        N: 默认的区间数/步数
        gauge: 默认规范 A(x)，"0" 即经典常数变易法
        kernel_grid: greens 子命令每个方向的采样点数
        precision: CSV 输出的有效数字位数


    子命令通过方法命名约定注册：``xxxCommand`` 即 ``xxx`` 子命令，参数由
    ``@options`` 声明。命令行先经过中间件（异常转退出码、参数合并、配置校验），
    再交给子命令方法。子命令返回完整的输出文本，最后一次性写出。
    """

    def __init__(
        self,
        N: int = 2000,
        gauge: str = "0",
        kernel_grid: int = 65,
        precision: int = 17,
    ) -> None:
        self.N = N
        self.gauge = gauge
        self.kernel_grid = kernel_grid
        self.precision = precision

        # 创建路由
        self.router = CommandRouter(self)
        self.middlewares = middleware_factory(self)
        self._handle = compose(self.middlewares, self._dispatch)

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """执行一次命令行调用

        Args:
            argv: 参数列表，缺省取 sys.argv[1:]

        Returns:
            退出码：0 成功，1 用法或输入错误，2 求解或校验失败
        """
        request = CliRequest(
            argv=list(sys.argv[1:] if argv is None else argv),
            stdout=sys.stdout,
            stderr=sys.stderr,
        )
        return self._handle(request)

    def _dispatch(self, request: CliRequest) -> int:
        params = get_params(request.handler, request.kwargs)
        result: CommandOutput = request.handler(request, **params)
        self.write_output(result.text, request.config.output, request.stdout)
        return result.exit_code

    def load(self, path: str) -> Problem:
        try:
            return load_problem_file(path)
        except OSError as e:
            raise UsageError(f"cannot open '{path}': {e.strerror or e}") from e

    def basis_for(
        self, problem: Ode2Problem, N: int, y1: Optional[str] = None, y2: Optional[str] = None
    ) -> BasisSolution:
        """按命令行选择基解：数值 RK4、降阶法或解析基解"""
        if y1 is None:
            return solve_basis(problem, N)
        e1 = self.flag_expr("--y1", y1)
        if y2 is None:
            return reduce_order(problem, e1, N)
        return adopt_analytic_basis(problem, e1, self.flag_expr("--y2", y2))

    @staticmethod
    def flag_expr(flag: str, source: str) -> Expr:
        try:
            return parse(source)
        except ExprError as e:
            raise UsageError(f"{flag}: invalid expression: {e}") from e

    @staticmethod
    def flag_gauge(flag: str, source: str) -> Gauge:
        """解析命令行给出的规范，出错时报告对应的选项名"""
        try:
            return make_gauge(source)
        except ExprError as e:
            raise UsageError(f"{flag}: invalid expression: {e}") from e

    def format_number(self, value: float) -> str:
        return format(float(value), f".{self.precision}g")

    def csv_text(self, header: Sequence[str], columns: Iterable[np.ndarray]) -> str:
        """把若干等长列写成 CSV 文本"""
        table = np.column_stack([np.asarray(c, dtype=float) for c in columns])
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in table:
            writer.writerow([self.format_number(v) for v in row])
        return buf.getvalue()

    def write_output(self, text: str, output: Optional[str], stdout) -> None:
        """写出完整结果；写文件时先写临时文件再原子替换"""
        if output is None or output == "-":
            stdout.write(text)
            return
        target = Path(output)
        try:
            fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
        except OSError as e:
            raise UsageError(f"cannot write '{output}': {e.strerror or e}") from e
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp, target)
        except BaseException:
            with contextlib.suppress(OSError):
                os.unlink(tmp)
            raise
        log.debug(f"已写出 {target}")

    @staticmethod
    def _require(problem: Problem, kinds: tuple, command: str) -> None:
        if not isinstance(problem, kinds):
            names = {Ode1Problem: "ode1", Ode2Problem: "ode2", SystemProblem: "system"}
            allowed = " or ".join(names[k] for k in kinds)
            raise UsageError(f"'{command}' needs a problem of kind {allowed}")

    @options(PROBLEM, argument("--gauge", help="规范函数 A(x)，缺省为 0"), STEPS, OUTPUT, Y1, Y2)
    def solveCommand(
        self,
        _,
        problem: str,
        gauge: str,
        N: int,
        output: Optional[str] = None,
        y1: Optional[str] = None,
        y2: Optional[str] = None,
    ) -> CommandOutput:
        """求解一阶或二阶问题，输出 x,y,yprime

        初值问题用常数变易法（可指定规范 A(x)）；齐次 Dirichlet 边值问题用 Green 函数。
        """
        loaded = self.load(problem)
        self._require(loaded, (Ode1Problem, Ode2Problem), "solve")
        if isinstance(loaded, Ode1Problem):
            solution = solve_first_order(loaded, N)
        elif loaded.is_ivp:
            g = self.flag_gauge("--gauge", gauge)
            basis = self.basis_for(loaded, N, y1, y2)
            solution = solve_ivp(loaded, basis, g, N)
        else:
            basis = self.basis_for(loaded, N, y1, y2)
            solution = apply_kernel(build_bvp_kernel(basis, loaded), loaded.q, N)
        nodes = solution.nodes
        return CommandOutput(
            self.csv_text(["x", "y", "yprime"], [nodes, solution.y(nodes), solution.yprime(nodes)])
        )

    @options(
        PROBLEM,
        argument("--mode", choices=("ivp", "bvp"), help="ivp: 因果核；bvp: 齐次 Dirichlet 核"),
        STEPS,
        OUTPUT,
        Y1,
        Y2,
    )
    def greensCommand(
        self,
        _,
        problem: str,
        mode: str,
        N: int,
        y1: Optional[str] = None,
        y2: Optional[str] = None,
    ) -> CommandOutput:
        """在 [a,b]² 网格上采样 Green 函数，输出 x,s,G"""
        loaded = self.load(problem)
        self._require(loaded, (Ode2Problem,), "greens")
        if mode == "bvp" and loaded.is_ivp:
            raise UsageError("--mode bvp needs a problem with 'bvp = dirichlet0'")
        basis = self.basis_for(loaded, N, y1, y2)
        kernel = build_ivp_kernel(basis) if mode == "ivp" else build_bvp_kernel(basis, loaded)
        grid = sample_kernel(kernel, self.kernel_grid, self.kernel_grid)
        return CommandOutput(self.csv_text(["x", "s", "G"], grid.T))

    @options(PROBLEM, STEPS, OUTPUT)
    def systemCommand(self, _, problem: str, N: int) -> CommandOutput:
        """用基本解矩阵和 Duhamel 原理求解方程组，输出 t,x0,x1,..."""
        loaded = self.load(problem)
        self._require(loaded, (SystemProblem,), "system")
        solution = solve_system_ivp(loaded, N)
        nodes = solution.nodes
        header = ["t"] + [f"x{i}" for i in range(loaded.n)]
        return CommandOutput(self.csv_text(header, [nodes, *solution(nodes).T]))

    @options(
        PROBLEM,
        argument("--gauges", help='以分号分隔的规范列表，例如 "0;x^2"'),
        STEPS,
        OUTPUT,
        Y1,
        Y2,
    )
    def checkCommand(
        self,
        _,
        problem: str,
        gauges: List[str],
        N: int,
        output: Optional[str] = None,
        y1: Optional[str] = None,
        y2: Optional[str] = None,
    ) -> CommandOutput:
        """校验规范无关性、残差、余函数偏移与 Abel 恒等式

        报告写到标准输出时为对齐的文本，写到文件 (-o) 时为 CSV。任一项失败时退出码为 2。
        """
        loaded = self.load(problem)
        self._require(loaded, (Ode2Problem,), "check")
        if not loaded.is_ivp:
            raise UsageError("'check' needs an initial value problem")
        parsed = [self.flag_gauge("--gauges", g) for g in gauges]
        basis = self.basis_for(loaded, N, y1, y2)
        report = verify_problem(loaded, parsed, N, basis)
        for record in report.failures:
            log.warning(f"校验未通过: {record.name} deviation={record.deviation:.3e}")
        text = report.render_text() if output is None else report.render_csv()
        return CommandOutput(text, 0 if report.overall else EXIT_FAILURE)

    @options(PROBLEM, STEPS, OUTPUT, Y1, Y2)
    def wronskianCommand(
        self,
        _,
        problem: str,
        N: int,
        y1: Optional[str] = None,
        y2: Optional[str] = None,
    ) -> CommandOutput:
        """输出 9 个等距点上的朗斯基行列式和 Abel 恒等式偏差"""
        loaded = self.load(problem)
        self._require(loaded, (Ode2Problem,), "wronskian")
        basis = self.basis_for(loaded, N, y1, y2)
        xs = np.linspace(loaded.a, loaded.b, WRONSKIAN_POINTS)
        text = self.csv_text(["x", "W"], [xs, wronskian(basis, xs)])
        text += f"abel_deviation,{self.format_number(abel_check(basis, loaded))}\n"
        return CommandOutput(text)
