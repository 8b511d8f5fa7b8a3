"""The solver family: five locally convergent iterations under one driver.

Two of the methods solve a linear system each step (newton, steffensen);
the other three (moser, hald, moser_steffensen) carry an evolving
approximate inverse B_n and touch only matrix products after B_0:

    newton             x+ = x - F'(x)^-1 F(x)
    steffensen         x+ = x - [x, x+F(x); F]^-1 F(x)
    moser              x+ = x - B F(x);  B+ = 2B - B F'(x)  B
    hald               x+ = x - B F(x);  B+ = 2B - B F'(x+) B
    moser_steffensen   x+ = x - B F(x);  B+ = 2B - B [x+, x+ + F(x+); F] B

moser_steffensen is therefore derivative-free AND inversion-free: after the
initial B_0 it performs no solve, no inverse, and no Jacobian evaluation.
Traces record per-step condition diagnostics so the methods can be compared
on equal footing.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import linalg
from .divdiff import divided_difference, evaluate, problem_jacobian
from .errors import (
    DegenerateProduct,
    DomainViolation,
    NonFiniteEvaluation,
    SingularMatrix,
)
from .linalg import as_vector, max_norm_mat, max_norm_vec

METHODS = ("newton", "steffensen", "moser", "hald", "moser_steffensen")

# Errors smaller than ERROR_FLOOR_RTOL*(1+||x*||) are below what double
# precision can resolve; records keep the raw number but flag it.
ERROR_FLOOR_RTOL = 1e-16


@dataclass(frozen=True)
class B0Strategy:
    """How to build the initial approximate inverse B_0.

    approximate_inverse(t): inverse of the Jacobian at x0 plus a
       deterministic rank-one perturbation scaled so ||I - B0 J(x0)|| = t.
    scaled_identity(s): s * I (no Jacobian information at all).
    explicit(matrix): caller-supplied B0.
    """

    variant: str
    residual_target: Optional[float] = None
    scale: Optional[float] = None
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.variant == "approximate_inverse":
            t = self.residual_target
            if t is None or not 0.0 <= t < 1.0:
                raise ValueError("residual_target must lie in [0, 1)")
        elif self.variant == "scaled_identity":
            if self.scale is None or self.scale <= 0.0:
                raise ValueError("scale must be positive")
        elif self.variant == "explicit":
            if self.matrix is None:
                raise ValueError("explicit strategy needs a matrix")
        else:
            raise ValueError(f"unknown B0 variant {self.variant!r}")

    @staticmethod
    def approximate_inverse(residual_target):
        return B0Strategy("approximate_inverse", residual_target=float(residual_target))

    @staticmethod
    def scaled_identity(scale):
        return B0Strategy("scaled_identity", scale=float(scale))

    @staticmethod
    def explicit(matrix):
        return B0Strategy("explicit", matrix=linalg.as_matrix(matrix))


@dataclass(frozen=True)
class SolverConfig:
    method: str = "moser_steffensen"
    max_iterations: int = 50
    residual_tolerance: float = 1e-12
    step_tolerance: float = 1e-15
    divergence_bound: float = 1e8
    b0_strategy: B0Strategy = field(
        default_factory=lambda: B0Strategy.approximate_inverse(0.0)
    )
    store_approx_inverse: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.residual_tolerance <= 0 or self.step_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.divergence_bound <= 0:
            raise ValueError("divergence_bound must be positive")


@dataclass(frozen=True)
class IterationRecord:
    index: int
    iterate: np.ndarray
    residual: float
    error: Optional[float] = None
    error_at_floor: bool = False
    step_norm: Optional[float] = None
    solve_condition: Optional[float] = None
    mult_condition_max: Optional[float] = None
    b_defect: Optional[float] = None  # ||I - B_n F'(x*)|| when computable
    approx_inverse: Optional[np.ndarray] = None


@dataclass(frozen=True)
class IterationTrace:
    method: str
    problem_name: str
    records: tuple
    outcome: str  # converged | max_iterations | diverged |
    #               singular_linear_system | domain_violation
    b0_defect: Optional[float] = None  # ||I - B0 J(x0)||
    b0_product: Optional[float] = None  # ||B0 J(x0)||

    def errors(self, above_floor=False):
        out = []
        for rec in self.records:
            if rec.error is None:
                continue
            if above_floor and rec.error_at_floor:
                continue
            out.append(rec.error)
        return out

    def residuals(self):
        return [rec.residual for rec in self.records]

    @property
    def final(self):
        return self.records[-1]


def make_b0(problem, x0, strategy):
    """Materialize an initial approximate inverse at x0."""
    m = problem.dimension
    if strategy.variant == "explicit":
        return np.array(strategy.matrix, dtype=float)
    if strategy.variant == "scaled_identity":
        return strategy.scale * np.eye(m)
    # approximate_inverse
    jac = problem_jacobian(problem, x0)
    binv = linalg.invert(jac)
    t = strategy.residual_target
    if t == 0.0:
        return binv
    # Rank-one checkerboard perturbation, scaled to hit the target exactly:
    # ||I - (Binv + E) J|| = ||E J|| = t up to rounding.
    i, j = np.indices((m, m))
    pert = np.where((i + j) % 2 == 0, 1.0, -1.0)
    scale = max_norm_mat(pert @ jac)
    if scale == 0.0:
        pert = np.eye(m)
        scale = max_norm_mat(jac)
    return binv + (t / scale) * pert


def _finite(x):
    return bool(np.all(np.isfinite(x)))


def _norm_or_inf(value):
    v = float(value)
    return v if np.isfinite(v) else float("inf")


class _Run:
    """Mutable state shared by the five steppers; produces the trace."""

    def __init__(self, problem, x0, config):
        self.problem = problem
        self.config = config
        self.x = as_vector(x0).astype(float, copy=True)
        self.records = []
        self.outcome = "max_iterations"
        self.b0_defect = None
        self.b0_product = None
        root = problem.known_solution
        self.root = None if root is None else as_vector(root)
        self.floor = (
            None if self.root is None else ERROR_FLOOR_RTOL * (1.0 + max_norm_vec(self.root))
        )
        self.jac_at_root = (
            problem_jacobian(problem, self.root)
            if self.root is not None and problem.analytic_jacobian is not None
            else None
        )

    def error_of(self, x):
        if self.root is None:
            return None, False
        if not _finite(x):
            return float("inf"), False
        err = max_norm_vec(x - self.root)
        return err, err < self.floor

    def b_defect_of(self, b):
        if self.jac_at_root is None or b is None or not _finite(b):
            return None
        return max_norm_mat(np.eye(len(b)) - b @ self.jac_at_root)

    def record(self, index, x, residual, step_norm=None, solve_condition=None,
               mult_condition_max=None, b=None):
        error, at_floor = self.error_of(x)
        self.records.append(
            IterationRecord(
                index=index,
                iterate=np.array(x, dtype=float),
                residual=_norm_or_inf(residual),
                error=error,
                error_at_floor=at_floor,
                step_norm=step_norm,
                solve_condition=solve_condition,
                mult_condition_max=mult_condition_max,
                b_defect=self.b_defect_of(b),
                approx_inverse=(
                    np.array(b, dtype=float)
                    if b is not None and self.config.store_approx_inverse
                    else None
                ),
            )
        )

    def finish(self):
        return IterationTrace(
            method=self.config.method,
            problem_name=self.problem.name,
            records=tuple(self.records),
            outcome=self.outcome,
            b0_defect=self.b0_defect,
            b0_product=self.b0_product,
        )


def _mult_cond(a, b):
    try:
        return linalg.mult_condition(a, b)
    except DegenerateProduct:
        return float("inf")


def run(problem, x0, config):
    """Run the configured method and return its IterationTrace."""
    state = _Run(problem, x0, config)
    method = config.method
    uses_b = method in ("moser", "hald", "moser_steffensen")

    try:
        fx = evaluate(problem, state.x)
    except DomainViolation:
        state.outcome = "domain_violation"
        return state.finish()
    except NonFiniteEvaluation:
        state.outcome = "diverged"
        return state.finish()

    b = None
    if uses_b:
        try:
            b = make_b0(problem, state.x, config.b0_strategy)
        except SingularMatrix:
            state.outcome = "singular_linear_system"
            return state.finish()
        jac0 = problem_jacobian(problem, state.x)
        state.b0_defect = max_norm_mat(np.eye(len(b)) - b @ jac0)
        state.b0_product = max_norm_mat(b @ jac0)

    state.record(0, state.x, max_norm_vec(fx), b=b)

    for n in range(1, config.max_iterations + 1):
        try:
            if method == "newton":
                jac = problem_jacobian(problem, state.x)
                step = linalg.lu_solve(jac, fx)
                x_next = state.x - step
                cond = linalg.solve_condition(jac)
                f_next = evaluate(problem, x_next)
                state.record(n, x_next, max_norm_vec(f_next),
                             step_norm=max_norm_vec(step), solve_condition=cond)
            elif method == "steffensen":
                theta = divided_difference(problem, state.x, state.x + fx)
                step = linalg.lu_solve(theta, fx)
                x_next = state.x - step
                cond = linalg.solve_condition(theta)
                f_next = evaluate(problem, x_next)
                state.record(n, x_next, max_norm_vec(f_next),
                             step_norm=max_norm_vec(step), solve_condition=cond)
            else:
                step = b @ fx
                x_next = state.x - step
                if not _finite(x_next):
                    state.record(n, x_next, float("inf"),
                                 step_norm=float("inf"), b=b)
                    state.outcome = "diverged"
                    break
                f_next = evaluate(problem, x_next)
                if method == "moser":
                    middle = problem_jacobian(problem, state.x)
                elif method == "hald":
                    middle = problem_jacobian(problem, x_next)
                else:  # moser_steffensen: derivative-free middle matrix
                    middle = divided_difference(problem, x_next, x_next + f_next)
                left = b @ middle
                cond = max(_mult_cond(b, middle), _mult_cond(left, b))
                b = 2.0 * b - left @ b
                state.record(n, x_next, max_norm_vec(f_next),
                             step_norm=max_norm_vec(step),
                             mult_condition_max=cond, b=b)
        except SingularMatrix:
            state.outcome = "singular_linear_system"
            break
        except DomainViolation:
            state.outcome = "domain_violation"
            break
        except NonFiniteEvaluation:
            state.outcome = "diverged"
            break

        state.x = x_next
        fx = f_next
        residual = state.records[-1].residual
        step_norm = state.records[-1].step_norm
        if not _finite(state.x) or max_norm_vec(state.x) > config.divergence_bound:
            state.outcome = "diverged"
            break
        if residual <= config.residual_tolerance or step_norm <= config.step_tolerance:
            state.outcome = "converged"
            break

    return state.finish()


def _method_runner(name):
    def runner(problem, x0, config=None):
        config = SolverConfig(method=name) if config is None else replace(config, method=name)
        return run(problem, x0, config)

    runner.__name__ = f"run_{name}"
    runner.__doc__ = f"Run the {name} iteration; see module docstring for the scheme."
    return runner


run_newton = _method_runner("newton")
run_steffensen = _method_runner("steffensen")
run_moser = _method_runner("moser")
run_hald = _method_runner("hald")
run_moser_steffensen = _method_runner("moser_steffensen")
