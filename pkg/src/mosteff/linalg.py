"""Minimal dense real linear algebra in the max-norm.

Vectors are 1-d float64 ndarrays, matrices 2-d square ones.  Everything the
solvers need lives here: the infinity norms, LU with partial pivoting (the
only place a linear system is ever solved), explicit inversion for building
initial approximate inverses, and the two condition-number diagnostics used
by the iteration traces.
"""

import numpy as np

from .errors import DegenerateProduct, SingularMatrix

# Pivot magnitudes below PIVOT_RTOL * ||A|| count as a singular matrix;
# the relative form keeps the test invariant under row scaling.
PIVOT_RTOL = 1e-14


def as_vector(x):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("expected a 1-d vector of dimension >= 1")
    return v


def as_matrix(a):
    m = np.asarray(a, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square 2-d matrix")
    return m


def max_norm_vec(v):
    """max_i |v_i|"""
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(v)))


def max_norm_mat(a):
    """Induced max-norm: largest absolute row sum."""
    a = np.asarray(a, dtype=float)
    return float(np.max(np.sum(np.abs(a), axis=1)))


def lu_factor(a):
    """PA = LU with partial pivoting, L and U packed into one array.

    Returns (lu, perm) where row i of the factorization corresponds to row
    perm[i] of the input.  Raises SingularMatrix when a pivot falls below
    PIVOT_RTOL * ||A||.
    """
    lu = as_matrix(a).copy()
    m = lu.shape[0]
    perm = np.arange(m)
    tol = PIVOT_RTOL * max_norm_mat(lu)
    if tol == 0.0 or not np.isfinite(tol):
        raise SingularMatrix("zero or non-finite matrix")
    for k in range(m):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) < tol:
            raise SingularMatrix(f"pivot {lu[p, k]:.3e} below tolerance {tol:.3e}")
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm


def lu_substitute(lu, perm, b):
    """Solve LUx = b[perm] given a packed factorization. b may be a matrix."""
    b = np.asarray(b, dtype=float)
    x = b[perm].astype(float, copy=True)
    m = lu.shape[0]
    for k in range(1, m):
        x[k] -= lu[k, :k] @ x[:k]
    for k in range(m - 1, -1, -1):
        x[k] -= lu[k, k + 1:] @ x[k + 1:]
        x[k] /= lu[k, k]
    return x


def lu_solve(a, b):
    """Solve Ax = b by LU with partial pivoting."""
    lu, perm = lu_factor(a)
    return lu_substitute(lu, perm, as_vector(b))


def invert(a):
    """Explicit inverse by solving against the identity, column block at once."""
    a = as_matrix(a)
    lu, perm = lu_factor(a)
    return lu_substitute(lu, perm, np.eye(a.shape[0]))


def solve_condition(a):
    """||A|| * ||A^-1|| in the max-norm.  Raises SingularMatrix."""
    a = as_matrix(a)
    return max_norm_mat(a) * max_norm_mat(invert(a))


def mult_condition(a, b):
    """||A|| * ||B|| / ||AB||, the conditioning of a matrix product."""
    a = as_matrix(a)
    b = as_matrix(b)
    denom = max_norm_mat(a @ b)
    if denom == 0.0:
        raise DegenerateProduct("product has zero norm")
    return max_norm_mat(a) * max_norm_mat(b) / denom
