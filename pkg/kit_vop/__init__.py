from .app import KitVop
from .basis import BasisSolution, abel_check, adopt_analytic_basis, reduce_order, solve_basis, wronskian
from .errors import *  # noqa: F401,F403
from .expr import differentiate, evaluate, parse, render
from .greens import GreensKernel, KernelSolution, apply_kernel, build_bvp_kernel, build_ivp_kernel, sample_kernel
from .problem import (
    Gauge,
    Ode1Problem,
    Ode2Problem,
    SystemProblem,
    load_problem,
    load_problem_file,
    make_gauge,
    make_ode1,
    make_ode2,
    make_system,
)
from .router import options
from .system import (
    FundamentalMatrix,
    SolutionOperator,
    invert,
    matrix_green,
    solve_fundamental,
    solve_system_ivp,
)
from .verify import (
    VerificationReport,
    complementary_shift_fit,
    gauge_invariance_sweep,
    integrate_system_direct,
    kernel_jump,
    residual,
    verify_problem,
)
from .vop import gauge_coefficient_derivatives, particular_integral, solve_first_order, solve_ivp
