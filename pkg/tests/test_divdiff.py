import numpy as np
import pytest
from hypothesis import given, strategies as st

from mosteff.divdiff import (
    divided_difference,
    evaluate,
    numeric_jacobian,
    problem_jacobian,
    secant_defect,
)
from mosteff.errors import DomainViolation, NonFiniteEvaluation
from mosteff.linalg import max_norm_mat, max_norm_vec
from mosteff.problems import NonlinearProblem, REGISTRY, build

PROBLEMS = [build(name, epsilon=3.0) if name == "academic" else build(name) for name in REGISTRY]


@pytest.mark.parametrize("problem", PROBLEMS, ids=[p.name for p in PROBLEMS])
def test_secant_identity_random_pairs(problem):
    rng = np.random.default_rng(3)
    for _ in range(300):
        u = rng.uniform(-0.5, 0.5, problem.dimension)
        v = rng.uniform(-0.5, 0.5, problem.dimension)
        assert secant_defect(problem, u, v) <= 1e-10


def test_secant_identity_exact_telescoping():
    # the staircase construction satisfies the identity to rounding, even for
    # wildly nonlinear components
    problem = build("example3d")
    u = np.array([0.3, -0.2, 0.4])
    v = np.array([-0.1, 0.25, -0.3])
    dd = divided_difference(problem, u, v)
    lhs = dd @ (u - v)
    rhs = evaluate(problem, u) - evaluate(problem, v)
    assert max_norm_vec(lhs - rhs) <= 1e-14 * (1.0 + max_norm_vec(rhs))


def test_coincident_arguments_give_jacobian():
    problem = build("example3d")
    x = np.array([0.2, -0.3, 0.1])
    dd = divided_difference(problem, x, x.copy())
    jac = problem.analytic_jacobian(x)
    assert max_norm_mat(dd - jac) <= 1e-13 * max_norm_mat(jac)


def test_mixed_coincidence_single_component():
    # only one coordinate coincides; that column must still be finite and the
    # secant identity must survive
    problem = build("academic", epsilon=3.0)
    u = np.array([0.4, 0.2])
    v = np.array([0.4, -0.1])  # first components equal
    dd = divided_difference(problem, u, v)
    assert np.all(np.isfinite(dd))
    assert secant_defect(problem, u, v) <= 1e-10


@pytest.mark.parametrize("problem", PROBLEMS, ids=[p.name for p in PROBLEMS])
def test_numeric_jacobian_matches_analytic(problem):
    rng = np.random.default_rng(5)
    for _ in range(100):
        x = rng.uniform(-0.5, 0.5, problem.dimension)
        num = numeric_jacobian(problem, x)
        ana = problem.analytic_jacobian(x)
        assert max_norm_mat(num - ana) <= 1e-6 * (1.0 + max_norm_mat(ana))


def test_problem_jacobian_falls_back_to_numeric():
    base = build("academic", epsilon=3.0)
    stripped = NonlinearProblem(dimension=2, eval=base.eval, name="stripped")
    x = np.array([0.1, -0.2])
    assert max_norm_mat(problem_jacobian(stripped, x) - base.analytic_jacobian(x)) <= 1e-6


def test_domain_violation():
    problem = build("example3d")  # domain is the open unit max-norm ball
    with pytest.raises(DomainViolation):
        evaluate(problem, np.array([1.5, 0.0, 0.0]))
    with pytest.raises(DomainViolation):
        divided_difference(problem, np.array([0.9, 0.0, 0.0]), np.array([1.2, 0.0, 0.0]))


def test_nonfinite_evaluation():
    def blow_up(x):
        with np.errstate(over="ignore"):
            return np.exp(x * x)

    problem = NonlinearProblem(dimension=1, eval=blow_up, name="blow")
    with pytest.raises(NonFiniteEvaluation):
        evaluate(problem, np.array([1e6]))


def test_evaluation_count_is_m_plus_one():
    calls = []

    def counting_eval(x):
        calls.append(np.array(x))
        return np.array([x[0] ** 2, x[0] + x[1], np.sin(x[2])])

    problem = NonlinearProblem(dimension=3, eval=counting_eval, name="count")
    divided_difference(problem, np.array([0.1, 0.2, 0.3]), np.array([0.4, 0.5, 0.6]))
    assert len(calls) == 4  # m + 1 full-vector evaluations


@given(
    st.lists(st.floats(-0.5, 0.5), min_size=2, max_size=2),
    st.lists(st.floats(-0.5, 0.5), min_size=2, max_size=2),
)
def test_secant_identity_property(u_vals, v_vals):
    problem = PROBLEMS[1]  # academic, epsilon=3
    assert secant_defect(problem, np.array(u_vals), np.array(v_vals)) <= 1e-10
