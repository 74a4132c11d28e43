import numpy as np

from kit_vop import make_gauge, make_ode2, solve_basis, solve_ivp


def exact(x):
    return -(2 / 9) * np.exp(-x) - (2 / 3) * x * np.exp(-x)


if __name__ == "__main__":
    problem = make_ode2("-1", "-2", "2*exp(-x)", (0, 2), ivp=(-2 / 9, -4 / 9))
    basis = solve_basis(problem, 2000)
    xs = np.linspace(0, 2, 9)
    for label in ("0", "x^2", "sin(x)"):
        solution = solve_ivp(problem, basis, make_gauge(label), 2000)
        error = np.max(np.abs(solution.y(xs) - exact(xs)))
        print(f"A(x) = {label:<8} max error = {error:.3e}")
