from pathlib import Path

import numpy as np
import pytest

from kit_vop import make_ode2, make_system

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def example1_exact(x):
    return -(2 / 9) * np.exp(-x) - (2 / 3) * x * np.exp(-x)


def example1_exact_prime(x):
    return (2 / 9) * np.exp(-x) - (2 / 3) * np.exp(-x) + (2 / 3) * x * np.exp(-x)


def example2_exact(x):
    return -(x**2 + 2 * x + 2)


@pytest.fixture
def example1():
    """y'' - y' - 2y = 2e^{-x}，[0, 2]"""
    return make_ode2("-1", "-2", "2*exp(-x)", (0, 2), ivp=(-2 / 9, -4 / 9))


@pytest.fixture
def example2():
    """x y'' - (x+1) y' + y = x^2，[1, 2]"""
    return make_ode2("-(x+1)", "1", "x^2", (1, 2), ivp=(-5, -4), lead="x")


@pytest.fixture
def companion():
    return make_system([["0", "1"], ["2", "1"]], ["0", "2*exp(-t)"], (0, 2), (-2 / 9, -4 / 9))


@pytest.fixture
def rotation():
    return make_system([["0", "1"], ["-1", "0"]], ["0", "0"], (0, 3), (1, 0))


@pytest.fixture
def problem_file(tmp_path):
    """把问题文本写入临时文件，返回路径"""

    def write(text: str, name: str = "problem.prob") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
