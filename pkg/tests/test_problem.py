import pytest

from kit_vop.basis import solve_basis
from kit_vop.errors import ExprSyntaxError, ProblemFormatError, SingularIntervalError
from kit_vop.expr import BinOp, Const, Var, parse
from kit_vop.problem import (
    DirichletZero,
    IvpConditions,
    Ode1Problem,
    Ode2Problem,
    SystemProblem,
    find_singular_points,
    load_problem,
    load_problem_file,
    make_gauge,
    make_ode1,
    make_ode2,
    make_system,
)

from .conftest import PROBLEMS

ODE2 = """
[problem]
kind = ode2
interval = 0 1
p1 = "x"
p2 = "1"
q = "sin(x)"
ivp = 1 0
"""


def test_load_ode2():
    problem = load_problem(ODE2)
    assert isinstance(problem, Ode2Problem)
    assert problem.interval == (0.0, 1.0)
    assert problem.p1 == Var()
    assert problem.q == parse("sin(x)")
    assert problem.conditions == IvpConditions(1.0, 0.0)
    assert problem.singular_points == ()


def test_same_text_gives_equal_problems():
    assert load_problem(ODE2) == load_problem(ODE2)


def test_load_fixture_files():
    example1 = load_problem_file(PROBLEMS / "example1.prob")
    assert example1.conditions.y0 == pytest.approx(-2 / 9, rel=1e-16)
    example2 = load_problem_file(PROBLEMS / "example2.prob")
    assert example2.lead == Var()
    assert example2.p1 == BinOp("/", parse("-(x+1)"), Var())
    assert isinstance(load_problem_file(PROBLEMS / "beam.prob").conditions, DirichletZero)
    assert isinstance(load_problem_file(PROBLEMS / "decay.prob"), Ode1Problem)
    system = load_problem_file(PROBLEMS / "companion.prob")
    assert isinstance(system, SystemProblem)
    assert system.b[0] == Const(0.0)
    assert system.P[1][0] == Const(2.0)


def test_load_ode1_and_system():
    ode1 = load_problem('[problem]\nkind = ode1\ninterval = 0 1\np = "1"\nq = "1"\nivp = 0\n')
    assert ode1.initial == IvpConditions(0.0)
    system = load_problem(
        "[problem]\nkind = system\ninterval = 0 1\nn = 1\nP[0][0] = \"-t\"\nx0 = 2\n"
    )
    assert system.n == 1
    assert system.P[0][0] == parse("-t", "t")
    assert system.x0 == (2.0,)


@pytest.mark.parametrize(
    "text, key",
    [
        (ODE2.replace('p2 = "1"\n', ""), "p2"),
        (ODE2.replace("ivp = 1 0", "ivp = 1"), "ivp"),
        (ODE2.replace("ivp = 1 0", "ivp = 1 zero"), "ivp"),
        (ODE2.replace("interval = 0 1", "interval = 1 0"), "interval"),
        (ODE2.replace("interval = 0 1", "interval = 0 inf"), "interval"),
        (ODE2 + "speed = 3\n", "speed"),
        (ODE2 + "bvp = dirichlet0\n", "bvp"),
        (ODE2.replace("ivp = 1 0", "bvp = neumann"), "bvp"),
        (ODE2.replace('q = "sin(x)"', 'q = "sin(x"'), "q"),
        (ODE2.replace('q = "sin(x)"', 'q = "foo(x)"'), "q"),
        (ODE2.replace("kind = ode2", "kind = pde"), "kind"),
    ],
)
def test_format_errors_name_the_key(text, key):
    with pytest.raises(ProblemFormatError) as info:
        load_problem(text)
    assert info.value.key == key
    assert key in str(info.value)


def test_structural_errors():
    with pytest.raises(ProblemFormatError, match=r"missing section \[problem\]"):
        load_problem("")
    with pytest.raises(ProblemFormatError, match=r"missing section \[problem\]"):
        load_problem("kind = ode2\n")
    with pytest.raises(ProblemFormatError, match="unknown section"):
        load_problem(ODE2 + "[extra]\n")
    with pytest.raises(ProblemFormatError, match="duplicate key"):
        load_problem(ODE2 + "p1 = \"0\"\n")


def test_system_shape_errors():
    base = "[problem]\nkind = system\ninterval = 0 1\nn = 2\nP[0][0] = \"0\"\nP[0][1] = \"1\"\nP[1][0] = \"0\"\n"
    with pytest.raises(ProblemFormatError) as info:
        load_problem(base + "x0 = 0 0\n")
    assert info.value.key == "P[1][1]"
    with pytest.raises(ProblemFormatError) as info:
        load_problem(base + 'P[1][1] = "0"\nx0 = 0\n')
    assert info.value.key == "x0"
    with pytest.raises(ProblemFormatError) as info:
        load_problem(base + 'P[1][1] = "0"\nP[2][0] = "0"\nx0 = 0 0\n')
    assert info.value.key == "P[2][0]"
    with pytest.raises(ProblemFormatError) as info:
        load_problem("[problem]\nkind = system\ninterval = 0 1\nn = 9\nx0 = 0\n")
    assert info.value.key == "n"


def test_missing_file():
    with pytest.raises(OSError):
        load_problem_file(PROBLEMS / "missing.prob")


def test_invalid_utf8(tmp_path):
    path = tmp_path / "bad.prob"
    path.write_bytes(b"[problem]\nkind = \xff\n")
    with pytest.raises(ProblemFormatError, match="UTF-8"):
        load_problem_file(path)


def test_lead_coefficient_normalises():
    problem = make_ode2("0", "1", "x", (1, 2), ivp=(0, 0), lead="2")
    assert problem.p2(1.5) == 0.5
    assert problem.q(1.5) == 0.75


def test_singular_points():
    assert find_singular_points([parse("1/x")], (0, 1)) == (0.0,)
    assert find_singular_points([parse("ln(x)")], (1, 2)) == ()
    # 零点落在采样点之间时由 Brent 法找到
    points = find_singular_points([], (-1, 1), lead=parse("x-0.0001"))
    assert points == (pytest.approx(1e-4, abs=1e-10),)


def test_singular_problem_is_rejected_at_solve_time():
    problem = make_ode2("1", "0", "0", (-1, 1), ivp=(0, 0), lead="x")
    assert problem.singular_points == (pytest.approx(0.0, abs=1e-10),)
    with pytest.raises(SingularIntervalError):
        problem.require_regular()


def test_pole_between_samples_is_detected():
    # 1024 个采样点都不落在 x=0 上，分母 x 在两点之间变号
    problem = make_ode2("-(x+1)/x", "1/x", "x", (-1, 1.3), ivp=(1, 0))
    assert problem.singular_points == (pytest.approx(0.0, abs=1e-10),)
    with pytest.raises(SingularIntervalError):
        solve_basis(problem, 400)


@pytest.mark.parametrize(
    "source, root",
    [
        ("1/(x^2-0.25)", 0.5),
        ("exp(x)/sin(3*x-1)", 1 / 3),
        ("sqrt(x-0.3)", 0.3),
        ("ln(0.7-x)", 0.7),
    ],
)
def test_guarded_argument_zeros(source, root):
    points = find_singular_points([parse(source)], (0, 1))
    assert any(p == pytest.approx(root, abs=1e-10) for p in points)


def test_builders_validate():
    with pytest.raises(ProblemFormatError):
        make_ode2("0", "0", "0", (0, 1))
    with pytest.raises(ProblemFormatError):
        make_ode2("0", "0", "0", (0, 1), ivp=(0, 0), bvp=True)
    with pytest.raises(ProblemFormatError) as info:
        make_ode1("1/", "0", (0, 1), 0)
    assert info.value.key == "p"
    with pytest.raises(ProblemFormatError):
        make_system([["0"]], ["0", "1"], (0, 1), [0])
    ode1 = make_ode1("1", "1", (0, 1), 0)
    assert ode1.a == 0 and ode1.b == 1


def test_system_evaluation_shapes(rotation):
    assert rotation.matrix([0.0, 1.0]).shape == (2, 2, 2)
    assert rotation.forcing([0.0, 1.0, 2.0]).shape == (3, 2)


def test_make_gauge():
    gauge = make_gauge(" x^2 ")
    assert gauge.label == "x^2"
    assert gauge.Aprime(3.0) == 6.0
    assert make_gauge("sin(x)").Aprime(0.0) == 1.0
    assert make_gauge("0").Aprime == Const(0.0)
    with pytest.raises(ExprSyntaxError):
        make_gauge("x^")
