import numpy as np
import pytest

from kit_vop.basis import adopt_analytic_basis, solve_basis
from kit_vop.errors import ResonantProblemError
from kit_vop.expr import parse
from kit_vop.greens import (
    BVP_DIRICHLET,
    IVP_CAUSAL,
    apply_kernel,
    build_bvp_kernel,
    build_ivp_kernel,
    sample_kernel,
)
from kit_vop.problem import Gauge, make_ode2
from kit_vop.verify import kernel_jump
from kit_vop.vop import particular_integral

rng = np.random.default_rng(20240611)


@pytest.fixture
def free_ivp():
    """y'' = q 的初值问题，基解 {1, x}"""
    problem = make_ode2("0", "0", "1", (0, 1), ivp=(0, 0))
    return problem, adopt_analytic_basis(problem, "1", "x")


@pytest.fixture
def free_bvp():
    problem = make_ode2("0", "0", "1", (0, 1), bvp=True)
    return problem, adopt_analytic_basis(problem, "1", "x")


def test_ivp_kernel_of_free_particle(free_ivp):
    _, basis = free_ivp
    kernel = build_ivp_kernel(basis)
    assert kernel.kind == IVP_CAUSAL and kernel.causal
    assert kernel(0.7, 0.2) == pytest.approx(0.5, abs=1e-15)
    assert kernel(0.2, 0.7) == 0.0


def test_causality_is_exact(example1):
    kernel = build_ivp_kernel(solve_basis(example1, 400))
    x = rng.uniform(0, 2, 64)
    s = x + rng.uniform(1e-9, 1, 64)
    s = np.minimum(s, 2.0)
    values = kernel(x, s)
    assert np.all(values[s > x] == 0.0)


def test_example1_kernel_spot_value(example1):
    x, s = 1.0, 0.5
    expected = (np.exp(2 * s) * np.exp(-x) - np.exp(2 * x) * np.exp(-s)) / (-3 * np.exp(s))
    numerical = build_ivp_kernel(solve_basis(example1, 2000))
    analytic = build_ivp_kernel(adopt_analytic_basis(example1, "exp(2*x)", "exp(-x)"))
    assert numerical(x, s) == pytest.approx(expected, abs=1e-8)
    assert analytic(x, s) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("build", ["ivp", "bvp"])
def test_diagonal_continuity_and_unit_jump(build):
    problem = make_ode2("-1", "-2", "2*exp(-x)", (0, 2), bvp=True)
    basis = solve_basis(problem, 2000)
    kernel = build_ivp_kernel(basis) if build == "ivp" else build_bvp_kernel(basis, problem)
    for s in rng.uniform(0.01, 1.99, 64):
        assert abs(kernel(s + 1e-9, s) - kernel(s - 1e-9, s)) <= 1e-6
        assert kernel_jump(kernel, s) == pytest.approx(1.0, abs=1e-5)


def test_analytic_derivative_jump(example1):
    kernel = build_ivp_kernel(solve_basis(example1, 400))
    for s in (0.3, 1.1, 1.7):
        assert kernel.derivative(s, s) - kernel.derivative(s - 1e-12, s) == pytest.approx(1.0, abs=1e-9)


def test_textbook_dirichlet_kernel(free_bvp):
    problem, basis = free_bvp
    kernel = build_bvp_kernel(basis, problem)
    assert kernel.kind == BVP_DIRICHLET and not kernel.causal
    assert kernel(0.25, 0.5) == pytest.approx(0.25 * (0.5 - 1), abs=1e-15)
    assert kernel(0.75, 0.5) == pytest.approx(0.5 * (0.75 - 1), abs=1e-15)


def test_boundary_annihilation(free_bvp):
    problem, basis = free_bvp
    for kernel in (build_bvp_kernel(basis, problem), build_bvp_kernel(solve_basis(problem, 200), problem)):
        s = rng.uniform(0, 1, 64)
        assert np.max(np.abs(kernel(np.zeros(64), s))) <= 1e-10
        assert np.max(np.abs(kernel(np.ones(64), s))) <= 1e-10


def test_bvp_closed_form():
    problem = make_ode2("0", "0", "1", (0, 1), bvp=True)
    kernel = build_bvp_kernel(solve_basis(problem, 1000), problem)
    solution = apply_kernel(kernel, problem.q, 1000)
    xs = np.linspace(0, 1, 137)
    np.testing.assert_allclose(solution.y(xs), xs * (xs - 1) / 2, atol=1e-8)
    np.testing.assert_allclose(solution.yprime(xs), xs - 0.5, atol=1e-8)


def test_bvp_with_variable_coefficients():
    # y'' + y = x on [0,1], y(0)=y(1)=0 => y = x - sin(x)/sin(1)
    problem = make_ode2("0", "1", "x", (0, 1), bvp=True)
    kernel = build_bvp_kernel(solve_basis(problem, 1000), problem)
    solution = apply_kernel(kernel, problem.q, 1000)
    xs = np.linspace(0, 1, 41)
    np.testing.assert_allclose(solution(xs), xs - np.sin(xs) / np.sin(1), atol=1e-8)


@pytest.mark.parametrize("analytic", [True, False])
def test_resonant_problem(analytic):
    problem = make_ode2("0", "1", "1", (0, np.pi), bvp=True)
    basis = adopt_analytic_basis(problem, "cos(x)", "sin(x)") if analytic else solve_basis(problem, 2000)
    with pytest.raises(ResonantProblemError):
        build_bvp_kernel(basis, problem)


def test_bvp_kernel_needs_dirichlet_problem(free_ivp):
    problem, basis = free_ivp
    with pytest.raises(ValueError):
        build_bvp_kernel(basis, problem)


def test_zero_forcing(free_bvp):
    problem, basis = free_bvp
    solution = apply_kernel(build_bvp_kernel(basis, problem), parse("0"), 64)
    assert np.all(solution.y(np.linspace(0, 1, 9)) == 0.0)


def test_kernel_matches_classical_particular_integral(example1):
    basis = solve_basis(example1, 2000)
    via_kernel = apply_kernel(build_ivp_kernel(basis), example1.q, 2000)
    via_vop = particular_integral(example1, basis, Gauge.classical(), 2000)
    xs = np.linspace(0, 2, 301)
    assert np.max(np.abs(via_kernel.y(xs) - via_vop.yp(xs))) <= 1e-6
    assert np.max(np.abs(via_kernel.yprime(xs) - via_vop.yp_prime(xs))) <= 1e-6


def test_apply_kernel_panel_count(free_bvp):
    problem, basis = free_bvp
    with pytest.raises(ValueError):
        apply_kernel(build_bvp_kernel(basis, problem), problem.q, 17)


def test_sample_kernel(free_ivp):
    _, basis = free_ivp
    kernel = build_ivp_kernel(basis)
    grid = sample_kernel(kernel, 2, 2)
    np.testing.assert_array_equal(grid[:, :2], [[0, 0], [0, 1], [1, 0], [1, 1]])
    assert grid[1, 2] == 0.0

    grid = sample_kernel(kernel, 5, 7)
    assert grid.shape == (35, 3)
    for x, s, g in grid:
        assert g == kernel(x, s)
    with pytest.raises(ValueError):
        sample_kernel(kernel, 1, 5)
