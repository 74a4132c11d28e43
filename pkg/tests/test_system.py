import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kit_vop.basis import solve_basis
from kit_vop.errors import SingularMatrixError
from kit_vop.problem import make_gauge, make_system
from kit_vop.system import (
    SolutionOperator,
    invert,
    matrix_green,
    solve_fundamental,
    solve_system_ivp,
)
from kit_vop.verify import integrate_system_direct
from kit_vop.vop import solve_ivp

from .conftest import example1_exact


def _rotation_matrix(t):
    return np.array([[np.cos(t), np.sin(t)], [-np.sin(t), np.cos(t)]])


def test_zero_matrix_gives_identity():
    fund = solve_fundamental(make_system([["0", "0"], ["0", "0"]], ["0", "0"], (0, 1), (0, 0)), 64)
    for t in (0.0, 0.37, 1.0):
        np.testing.assert_array_equal(fund(t), np.eye(2))


def test_scalar_exponential():
    fund = solve_fundamental(make_system([["-2*t"]], ["0"], (0, 1), (1,)), 1000)
    ts = np.linspace(0, 1, 23)
    np.testing.assert_allclose(fund(ts)[:, 0, 0], np.exp(-(ts**2)), atol=1e-8)


def test_rotation_fundamental_matrix(rotation):
    fund = solve_fundamental(rotation, 2000)
    for t in np.linspace(0, 3, 13):
        phi = fund(t)
        np.testing.assert_allclose(phi, _rotation_matrix(t), atol=1e-8)
        np.testing.assert_allclose(phi @ phi.T, np.eye(2), atol=1e-8)
        np.testing.assert_allclose(fund.derivative(t), rotation.matrix(t)[0] @ phi, atol=1e-8)
    assert fund.anchor == 0.0 and fund.n == 2


def test_rotation_green_function(rotation):
    fund = solve_fundamental(rotation, 2000)
    np.testing.assert_allclose(matrix_green(fund, 2.5, 1.0), _rotation_matrix(1.5), atol=1e-8)
    np.testing.assert_array_equal(matrix_green(fund, 1.0, 2.5), np.zeros((2, 2)))
    np.testing.assert_allclose(
        matrix_green(fund, 1.0, 2.5, causal=False), _rotation_matrix(-1.5), atol=1e-8
    )


def test_invert():
    np.testing.assert_array_equal(invert(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(invert(np.diag([2.0, 4.0, -8.0])), np.diag([0.5, 0.25, -0.125]), rtol=1e-15)
    m = np.random.default_rng(7).normal(size=(5, 5))
    assert np.max(np.abs(invert(m) @ m - np.eye(5))) <= 1e-10


def test_invert_rejects_singular_matrices():
    with pytest.raises(SingularMatrixError):
        invert([[1.0, 2.0], [2.0, 4.0]])
    with pytest.raises(SingularMatrixError):
        invert(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        invert(np.ones((2, 3)))


def test_scalar_duhamel():
    solution = solve_system_ivp(make_system([["-1"]], ["1"], (0, 2), (0,)), 1000)
    ts = np.linspace(0, 2, 31)
    np.testing.assert_allclose(solution(ts)[:, 0], 1 - np.exp(-ts), atol=1e-8)
    np.testing.assert_allclose(solution.derivative(ts)[:, 0], np.exp(-ts), atol=1e-8)


def test_companion_matches_scalar_solution(companion, example1):
    system = solve_system_ivp(companion, 2000)
    scalar = solve_ivp(example1, solve_basis(example1, 2000), make_gauge("0"), 2000)
    ts = np.linspace(0, 2, 101)
    states = system(ts)
    assert np.max(np.abs(states[:, 0] - scalar.y(ts))) <= 1e-6
    assert np.max(np.abs(states[:, 1] - scalar.yprime(ts))) <= 1e-6
    assert np.max(np.abs(states[:, 0] - example1_exact(ts))) <= 1e-6


def test_initial_state_is_reproduced(companion):
    solution = solve_system_ivp(companion, 200)
    np.testing.assert_allclose(solution(0.0), companion.x0, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(solution.particular(0.0), [0.0, 0.0])
    np.testing.assert_allclose(solution.homogeneous(0.0), companion.x0, rtol=0, atol=1e-15)
    ts = np.linspace(0, 2, 9)
    np.testing.assert_allclose(
        np.stack([solution.homogeneous(t) + solution.particular(t) for t in ts]), solution(ts), rtol=0, atol=1e-12
    )


@pytest.fixture(scope="module")
def oscillator_operator():
    problem = make_system([["0", "1"], ["-1-t", "-0.1"]], ["0", "0"], (0, 2), (1, 0))
    return SolutionOperator(solve_fundamental(problem, 2000))


@given(st.floats(min_value=0, max_value=2), st.floats(min_value=0, max_value=2), st.floats(min_value=0, max_value=2))
@settings(max_examples=64, deadline=None)
def test_solution_operator_identities(oscillator_operator, t, s, r):
    np.testing.assert_allclose(oscillator_operator(t, t), np.eye(2), rtol=0, atol=1e-10)
    np.testing.assert_allclose(
        oscillator_operator(t, s) @ oscillator_operator(s, r), oscillator_operator(t, r), rtol=0, atol=1e-8
    )


def test_superposition():
    # x' = x + b1 + b2 的解等于分别求解后相加
    parts = [
        solve_system_ivp(make_system([["1"]], [b], (0, 1), (x0,)), 500)
        for b, x0 in (("sin(t)", 1.0), ("t^2", -0.5), ("sin(t)+t^2", 0.5))
    ]
    ts = np.linspace(0, 1, 17)
    np.testing.assert_allclose(parts[0](ts) + parts[1](ts), parts[2](ts), rtol=0, atol=1e-10)


def test_duhamel_matches_direct_integration():
    problem = make_system([["0", "1"], ["-4", "-t"]], ["cos(t)", "exp(-t)"], (0, 2), (1, -1))
    duhamel = solve_system_ivp(problem, 2000)
    direct = integrate_system_direct(problem, 2000)
    ts = np.linspace(0, 2, 64)
    assert np.max(np.abs(duhamel(ts) - direct("x", ts))) <= 1e-6


def test_step_count_lower_bound(rotation):
    with pytest.raises(ValueError):
        solve_fundamental(rotation, 8)
