"""Built-in nonlinear systems and the problem registry.

Each problem is a plain immutable record: an evaluation map on a domain,
an optional analytic Jacobian, and an optional known root used for error
reporting in traces.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .linalg import as_matrix, as_vector, lu_solve, max_norm_vec
from . import divdiff


@dataclass(frozen=True)
class NonlinearProblem:
    """A map F: Omega in R^m -> R^m with optional extras.

    eval must preserve dimension and be re-entrant.  domain_check returns
    True for points inside Omega (None means all of R^m).  known_solution,
    when present, is a root to full double precision.
    """

    dimension: int
    eval: Callable[[np.ndarray], np.ndarray]
    analytic_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    known_solution: Optional[np.ndarray] = None
    domain_check: Optional[Callable[[np.ndarray], bool]] = None
    name: str = ""


def example_3d(r_tilde=1.0):
    """Separable 3-d test map F(x,y,z) = (x, y^2+y, e^z-1) on the open
    max-norm ball of radius r_tilde around its root at the origin.

    The Jacobian at the root is the identity, which makes this the standard
    fixture for the convergence-radius machinery."""

    def f(w):
        x, y, z = w
        return np.array([x, y * y + y, np.expm1(z)])

    def jac(w):
        return np.diag([1.0, 2.0 * w[1] + 1.0, np.exp(w[2])])

    return NonlinearProblem(
        dimension=3,
        eval=f,
        analytic_jacobian=jac,
        known_solution=np.zeros(3),
        domain_check=lambda w: max_norm_vec(w) < r_tilde,
        name="example3d",
    )


def academic_system(epsilon):
    """Planar system (2x - x^2/eps + y - y^2/(2 eps), x + y) with root (0,0).

    Small eps sharpens the nonlinearity: the Jacobian is singular along the
    line 2x - y = eps, so iterates that wander near it are punished.  This is
    the stress test distinguishing the update-based methods from classical
    Steffensen.
    """
    if epsilon == 0:
        raise ValueError("epsilon must be nonzero")
    eps = float(epsilon)

    def f(w):
        x, y = w
        return np.array([2.0 * x - x * x / eps + y - y * y / (2.0 * eps), x + y])

    def jac(w):
        x, y = w
        return np.array([[2.0 - 2.0 * x / eps, 1.0 - y / eps], [1.0, 1.0]])

    return NonlinearProblem(
        dimension=2,
        eval=f,
        analytic_jacobian=jac,
        known_solution=np.zeros(2),
        name=f"academic(eps={eps:g})",
    )


def affine_problem(a, b):
    """F(x) = Ax - b for invertible A; exactness oracle for every method."""
    a = as_matrix(a)
    b = as_vector(b)
    root = lu_solve(a, b)  # raises SingularMatrix for bad A

    return NonlinearProblem(
        dimension=b.size,
        eval=lambda x: a @ x - b,
        analytic_jacobian=lambda x: a.copy(),
        known_solution=root,
        name="affine",
    )


_DEFAULT_AFFINE_A = ((2.0, 1.0), (1.0, 1.0))
_DEFAULT_AFFINE_B = (3.0, 2.0)


def build(name, **params):
    """Construct a registered problem by CLI name.

    example3d:  r_tilde (default 1.0)
    academic:   epsilon (required)
    affine:     a, b (default [[2,1],[1,1]], (3,2))
    """
    if name == "example3d":
        problem = example_3d(r_tilde=params.get("r_tilde", 1.0))
    elif name == "academic":
        if "epsilon" not in params:
            raise KeyError("academic problem needs epsilon")
        problem = academic_system(params["epsilon"])
    elif name == "affine":
        problem = affine_problem(
            params.get("a", _DEFAULT_AFFINE_A), params.get("b", _DEFAULT_AFFINE_B)
        )
    else:
        raise KeyError(f"unknown problem {name!r}")
    _check_registration(problem)
    return problem


REGISTRY = ("example3d", "academic", "affine")


def _check_registration(problem):
    # Known roots must actually be roots.
    if problem.known_solution is not None:
        residual = max_norm_vec(divdiff.evaluate(problem, problem.known_solution))
        if residual > 1e-12:
            raise AssertionError(
                f"registered problem {problem.name}: ||F(x*)|| = {residual:.3e}"
            )
