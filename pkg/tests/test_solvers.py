import dataclasses

import numpy as np
import pytest

import mosteff.linalg as linalg
from mosteff.errors import SingularMatrix
from mosteff.linalg import invert, max_norm_mat
from mosteff.problems import build
from mosteff.solvers import (
    METHODS,
    B0Strategy,
    SolverConfig,
    make_b0,
    run,
    run_moser_steffensen,
    run_newton,
    run_steffensen,
)

AFFINE = build("affine")
ACADEMIC3 = build("academic", epsilon=3.0)


def test_methods_tuple():
    assert METHODS == ("newton", "steffensen", "moser", "hald", "moser_steffensen")


@pytest.mark.parametrize("method", METHODS)
def test_affine_one_step_exact(method):
    # with B0 = A^-1 every method lands on the root after one update
    config = SolverConfig(method=method)
    trace = run(AFFINE, np.zeros(2), config)
    assert trace.outcome == "converged"
    assert len(trace.records) == 2
    assert trace.final.residual <= 1e-12


def test_steffensen_equals_newton_on_affine():
    # the divided difference of an affine map is its matrix, so both methods
    # produce identical iterates
    x0 = np.array([3.0, -2.0])
    newton = run_newton(AFFINE, x0)
    steff = run_steffensen(AFFINE, x0)
    for rec_n, rec_s in zip(newton.records, steff.records):
        assert np.array_equal(rec_n.iterate, rec_s.iterate)


def test_error_floor_flag():
    trace = run_newton(AFFINE, np.zeros(2))
    final = trace.final
    assert final.error_at_floor
    assert final.error is not None and final.error <= 1e-16 * 2.0
    assert trace.errors(above_floor=True) == [trace.records[0].error]


def test_make_b0_defect_matches_target():
    x0 = np.array([-1.0, 1.0])
    jac = ACADEMIC3.analytic_jacobian(x0)
    for target in (1e-3, 1e-1, 0.999):
        b0 = make_b0(ACADEMIC3, x0, B0Strategy.approximate_inverse(target))
        defect = max_norm_mat(np.eye(2) - b0 @ jac)
        assert defect == pytest.approx(target, rel=1e-12)


def test_make_b0_exact_inverse_at_zero_target():
    x0 = np.array([-1.0, 1.0])
    b0 = make_b0(ACADEMIC3, x0, B0Strategy.approximate_inverse(0.0))
    jac = ACADEMIC3.analytic_jacobian(x0)
    assert max_norm_mat(np.eye(2) - b0 @ jac) <= 1e-14


def test_make_b0_singular_jacobian():
    problem = build("academic", epsilon=1.0)
    # the Jacobian at (1, 1) has a zero first row
    with pytest.raises(SingularMatrix):
        make_b0(problem, np.array([1.0, 1.0]), B0Strategy.approximate_inverse(1e-3))


def test_make_b0_scaled_identity_and_explicit():
    x0 = np.array([-1.0, 1.0])
    b_scaled = make_b0(ACADEMIC3, x0, B0Strategy.scaled_identity(0.01))
    assert np.allclose(b_scaled, 0.01 * np.eye(2))
    matrix = np.array([[0.5, 0.1], [0.0, 0.4]])
    b_explicit = make_b0(ACADEMIC3, x0, B0Strategy.explicit(matrix))
    assert np.array_equal(b_explicit, matrix)


def test_b0_diagnostics_recorded():
    trace = run_moser_steffensen(
        ACADEMIC3,
        np.array([-1.0, 1.0]),
        SolverConfig(b0_strategy=B0Strategy.approximate_inverse(1e-1)),
    )
    assert trace.b0_defect == pytest.approx(0.1, rel=1e-12)
    assert trace.b0_product <= 1.1 + 1e-12


def test_inverse_update_contracts_on_frozen_matrix():
    rng = np.random.default_rng(12345)
    a = rng.uniform(-1.0, 1.0, (5, 5)) + np.eye(5) * 5
    b = 0.5 * invert(a)  # ||I - B0 A|| = 0.5
    defect = max_norm_mat(np.eye(5) - b @ a)
    for _ in range(10):
        b = 2.0 * b - b @ a @ b
        new_defect = max_norm_mat(np.eye(5) - b @ a)
        assert new_defect <= defect**2 + 1e-10
        defect = new_defect


def test_no_linear_solves_after_explicit_b0(monkeypatch):
    # the defining structural property: with B0 given, the iteration is built
    # from products only
    b0 = invert(ACADEMIC3.analytic_jacobian(np.array([-1.0, 1.0])))
    calls = []

    def forbid(name, original):
        def wrapper(*args, **kwargs):
            calls.append(name)
            return original(*args, **kwargs)

        return wrapper

    monkeypatch.setattr(linalg, "lu_factor", forbid("lu_factor", linalg.lu_factor))
    monkeypatch.setattr(linalg, "invert", forbid("invert", linalg.invert))
    trace = run_moser_steffensen(
        ACADEMIC3,
        np.array([-1.0, 1.0]),
        SolverConfig(b0_strategy=B0Strategy.explicit(b0)),
    )
    assert trace.outcome == "converged"
    assert calls == []


def test_newton_does_solve(monkeypatch):
    calls = []
    original = linalg.lu_solve

    def wrapper(*args, **kwargs):
        calls.append("lu_solve")
        return original(*args, **kwargs)

    monkeypatch.setattr(linalg, "lu_solve", wrapper)
    run_newton(ACADEMIC3, np.array([-1.0, 1.0]))
    assert calls


def test_moser_steffensen_converges_quadratically():
    trace = run_moser_steffensen(
        ACADEMIC3,
        np.array([-1.0, 1.0]),
        SolverConfig(
            b0_strategy=B0Strategy.approximate_inverse(1e-3),
            residual_tolerance=1e-24,
            step_tolerance=1e-30,
            max_iterations=30,
        ),
    )
    assert trace.outcome == "converged"
    errors = trace.errors(above_floor=True)
    # once inside the quadratic regime each error is roughly the square of
    # the previous one
    assert errors[-1] <= 10.0 * errors[-2] ** 2


def test_condition_diagnostics_by_family():
    newton = run_newton(ACADEMIC3, np.array([-1.0, 1.0]))
    assert all(rec.solve_condition is not None for rec in newton.records[1:])
    assert all(rec.mult_condition_max is None for rec in newton.records)
    ms = run_moser_steffensen(ACADEMIC3, np.array([-1.0, 1.0]))
    assert all(rec.mult_condition_max is not None for rec in ms.records[1:])
    assert all(rec.solve_condition is None for rec in ms.records)


def test_outcome_max_iterations():
    trace = run_moser_steffensen(
        ACADEMIC3, np.array([-1.0, 1.0]), SolverConfig(max_iterations=1, residual_tolerance=1e-30)
    )
    assert trace.outcome == "max_iterations"
    assert len(trace.records) == 2


def test_outcome_diverged():
    # a huge scaled-identity B0 overshoots far past the divergence bound
    trace = run_moser_steffensen(
        AFFINE,
        np.array([2.0, 2.0]),
        SolverConfig(b0_strategy=B0Strategy.scaled_identity(1e9), max_iterations=5),
    )
    assert trace.outcome == "diverged"


def test_outcome_singular_linear_system():
    problem = build("academic", epsilon=1.0)
    trace = run_newton(problem, np.array([1.0, 1.0]))
    assert trace.outcome == "singular_linear_system"


def test_outcome_domain_violation():
    problem = build("example3d")
    # x + F(x) leaves the unit ball, so the divided difference cannot be formed
    trace = run_steffensen(problem, np.array([0.9, 0.0, 0.0]))
    assert trace.outcome == "domain_violation"


def test_store_approx_inverse():
    config = SolverConfig(store_approx_inverse=True, max_iterations=3, residual_tolerance=1e-30)
    trace = run_moser_steffensen(ACADEMIC3, np.array([-1.0, 1.0]), config)
    stored = [rec.approx_inverse for rec in trace.records]
    assert all(b is not None for b in stored)
    default = run_moser_steffensen(ACADEMIC3, np.array([-1.0, 1.0]))
    assert all(rec.approx_inverse is None for rec in default.records)


def test_b_defect_tracks_inverse_quality():
    trace = run_moser_steffensen(
        ACADEMIC3,
        np.array([-1.0, 1.0]),
        SolverConfig(b0_strategy=B0Strategy.approximate_inverse(1e-1)),
    )
    defects = [rec.b_defect for rec in trace.records if rec.b_defect is not None]
    assert defects[-1] < defects[0]
    assert defects[-1] <= 1e-8


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(method="gradient-descent")
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(residual_tolerance=-1.0)
    with pytest.raises(ValueError):
        B0Strategy.approximate_inverse(1.0)  # target must be below 1
    with pytest.raises(ValueError):
        B0Strategy.approximate_inverse(-0.1)
    with pytest.raises(ValueError):
        B0Strategy.scaled_identity(0.0)


def test_run_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        run(AFFINE, np.zeros(3), SolverConfig())


def test_method_runner_replaces_method():
    config = SolverConfig(method="newton", max_iterations=12)
    trace = run_moser_steffensen(ACADEMIC3, np.array([-1.0, 1.0]), config)
    assert trace.method == "moser_steffensen"
    assert len(trace.records) <= 13
