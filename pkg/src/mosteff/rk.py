"""Implicit Runge-Kutta collocation with a pluggable nonlinear stage solver.

The tableau entries are integrals of the Lagrange basis over [0, c_i] and
[0, 1]; we integrate the polynomials termwise, so the coefficients are exact
up to rounding for any distinct node set.  Each step solves the stage system

    K_i = f(t + c_i h, y + h sum_j a_ij K_j),    i = 1..s

for the stacked slopes K with one of the solver-family methods.  Slope form
plus a per-step diagonal rescaling keeps the stage residual component-wise
relative, which is what lets one tolerance serve state components that are
six orders of magnitude apart.

For stiff steps the initial approximate inverse for the inverse-update
methods is built once from the linearization (I - h A (x) J)^-1 at the step
base point and then carried forward (rescaled) from step to step, so the
expensive construction happens only at the first step and after an inner
failure.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np

from . import solvers
from .errors import (
    DuplicateNodes,
    InnerSolverFailed,
    NonFiniteState,
    UnsupportedStageCount,
)
from .linalg import as_vector, invert
from .problems import NonlinearProblem
from .solvers import B0Strategy, SolverConfig

_FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)


@dataclass(frozen=True)
class RKTableau:
    s: int
    c: tuple
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        c = tuple(float(ci) for ci in self.c)
        if a.shape != (self.s, self.s) or b.shape != (self.s,) or len(c) != self.s:
            raise ValueError("tableau shapes inconsistent with stage count")
        for i in range(self.s):
            for j in range(i + 1, self.s):
                if abs(c[i] - c[j]) < 1e-12:
                    raise DuplicateNodes(f"nodes {i} and {j} coincide")
        if abs(float(np.sum(b)) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        if np.max(np.abs(a.sum(axis=1) - np.asarray(c))) > 1e-12:
            raise ValueError("row sums of A must equal the nodes")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class ODEProblem:
    dimension: int
    rhs: Callable[[float, np.ndarray], np.ndarray]
    y0: np.ndarray
    t_span: Tuple[float, float]


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray  # (n+1,)
    y: np.ndarray  # (n+1, m)
    inner_iterations: tuple  # iterations spent in each step's stage solve
    b0_rebuilds: int  # fresh linearized-inverse constructions


def gauss_nodes(s):
    """Shifted-Legendre roots on [0,1] for 1, 2 or 3 stages."""
    if s == 1:
        return (0.5,)
    if s == 2:
        d = math.sqrt(3.0) / 6.0
        return (0.5 - d, 0.5 + d)
    if s == 3:
        d = math.sqrt(15.0) / 10.0
        return (0.5 - d, 0.5, 0.5 + d)
    raise UnsupportedStageCount(f"gauss_nodes supports s in {{1,2,3}}, got {s}")


def collocation_tableau(c):
    """Collocation coefficients for distinct nodes in [0,1].

    Column j of A and entry j of b integrate the j-th Lagrange basis
    polynomial over [0, c_i] and [0, 1] respectively.
    """
    c = [float(ci) for ci in c]
    s = len(c)
    if s < 1:
        raise ValueError("need at least one node")
    for ci in c:
        if not 0.0 <= ci <= 1.0:
            raise ValueError(f"node {ci} outside [0, 1]")
    for i in range(s):
        for j in range(i + 1, s):
            if abs(c[i] - c[j]) < 1e-12:
                raise DuplicateNodes(f"nodes {c[i]} and {c[j]} coincide")

    a = np.zeros((s, s))
    b = np.zeros(s)
    for j in range(s):
        others = [c[l] for l in range(s) if l != j]
        # Monic polynomial with the other nodes as roots, then normalize.
        num = np.poly(others) if others else np.array([1.0])
        den = float(np.prod([c[j] - cl for cl in others])) if others else 1.0
        coeffs = num / den
        # Antiderivative evaluated at the upper limits (value 0 at u=0).
        anti = np.concatenate([coeffs / np.arange(len(coeffs), 0, -1), [0.0]])
        b[j] = float(np.polyval(anti, 1.0))
        for i in range(s):
            a[i, j] = float(np.polyval(anti, c[i]))
    return RKTableau(s=s, c=tuple(c), A=a, b=b)


def _rhs_checked(ode, t, y):
    f = np.asarray(ode.rhs(t, y), dtype=float)
    if not np.all(np.isfinite(f)):
        raise NonFiniteState(f"rhs non-finite at t={t}")
    return f


def stage_problem(ode, tab, t, y, h, scale=None):
    """The stacked stage residual G(K) = 0 as a NonlinearProblem.

    Unknowns are the s*m slopes divided component-wise by `scale`; the
    residual is scaled the same way, making the solver's max-norm stop a
    component-wise relative test.
    """
    s, m = tab.s, ode.dimension
    a, c = tab.A, tab.c
    if scale is None:
        scale = np.ones(s * m)
    scale = np.asarray(scale, dtype=float)

    def g(k_scaled):
        k = (k_scaled * scale).reshape(s, m)
        states = y + h * (a @ k)
        out = np.empty((s, m))
        for i in range(s):
            out[i] = k[i] - np.asarray(ode.rhs(t + c[i] * h, states[i]), dtype=float)
        return out.reshape(-1) / scale

    return NonlinearProblem(dimension=s * m, eval=g, name="irk-stage")


def _state_jacobian(ode, t, y):
    # Central-difference d(rhs)/dy at fixed t.
    m = y.size
    jac = np.empty((m, m))
    for j in range(m):
        step = _FD_STEP * (1.0 + abs(y[j]))
        yp = y.copy()
        ym = y.copy()
        yp[j] += step
        ym[j] -= step
        jac[:, j] = (_rhs_checked(ode, t, yp) - _rhs_checked(ode, t, ym)) / (2.0 * step)
    return jac


def _fresh_stage_inverse(ode, tab, t, y, h, scale):
    # Inverse of the linearized stage matrix I - h (A kron J), expressed in
    # the scaled variables.  The one place the driver ever inverts.
    jac = _state_jacobian(ode, t + 0.5 * h, y)
    big = np.eye(tab.s * ode.dimension) - h * np.kron(tab.A, jac)
    big = big / scale[:, None] * scale[None, :]
    return invert(big)


_B_METHODS = ("moser", "hald", "moser_steffensen")


def _advance(ode, tab, t, y, h, inner, b_carry, step_index):
    """One step; returns (y_next, carried physical-space B, iterations, rebuilds)."""
    s, m = tab.s, ode.dimension
    f0 = _rhs_checked(ode, t, y)
    k_guess = np.tile(f0, s)
    # Slope components are measured relative to max(slope magnitude,
    # state magnitude / h): a slope error only matters through h * error
    # in the state, and the state floor keeps the relative test meaningful
    # when a net slope passes through zero while its constituent terms
    # (and hence the evaluation noise) stay large.
    scale = np.maximum(1.0, np.maximum(np.abs(k_guess), np.tile(np.abs(y), s) / h))
    problem = stage_problem(ode, tab, t, y, h, scale)
    guess = k_guess / scale

    uses_b = inner.method in _B_METHODS
    rebuilds = 0
    attempts = []
    if uses_b:
        if b_carry is not None and np.all(np.isfinite(b_carry)):
            attempts.append(b_carry / scale[:, None] * scale[None, :])
        attempts.append(None)  # placeholder: build fresh on demand
    else:
        attempts.append(None)

    trace = None
    for b_scaled in attempts:
        cfg = inner
        if uses_b:
            if b_scaled is None:
                b_scaled = _fresh_stage_inverse(ode, tab, t, y, h, scale)
                rebuilds += 1
            cfg = replace(
                cfg,
                b0_strategy=B0Strategy.explicit(b_scaled),
                store_approx_inverse=True,
            )
        trace = solvers.run(problem, guess, cfg)
        if trace.outcome == "converged":
            break
    if trace.outcome != "converged":
        raise InnerSolverFailed(
            f"stage solve failed at step {step_index} (t={t:g}): {trace.outcome}",
            step_index=step_index,
            t=t,
            outcome=trace.outcome,
        )

    k = trace.final.iterate * scale
    y_next = y + h * (tab.b @ k.reshape(s, m))
    b_next = None
    if uses_b and trace.final.approx_inverse is not None:
        b_next = trace.final.approx_inverse * scale[:, None] / scale[None, :]
    return y_next, b_next, len(trace.records) - 1, rebuilds


def irk_step(ode, tab, t, y, h, inner):
    """Advance y(t) -> y(t+h) solving the stage system with `inner`."""
    y = as_vector(y)
    y_next, _, _, _ = _advance(ode, tab, t, y, h, inner, None, 0)
    return y_next


def integrate(ode, tab, h, inner):
    """Fixed-step integration over ode.t_span; h must divide the span."""
    t0, t_end = ode.t_span
    span = t_end - t0
    n_steps = int(round(span / h))
    if n_steps < 1 or abs(n_steps * h - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError(f"step {h} does not divide the span {span}")

    y = as_vector(ode.y0).astype(float, copy=True)
    ts = np.empty(n_steps + 1)
    ys = np.empty((n_steps + 1, ode.dimension))
    ts[0] = t0
    ys[0] = y
    b_carry = None
    iters = []
    rebuilds = 0
    for step in range(n_steps):
        t = t0 + step * h
        y, b_carry, used, built = _advance(ode, tab, t, y, h, inner, b_carry, step)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState(f"state non-finite after step {step} (t={t + h:g})")
        ts[step + 1] = t + h
        ys[step + 1] = y
        iters.append(used)
        rebuilds += built
    ts[n_steps] = t_end
    return Trajectory(t=ts, y=ys, inner_iterations=tuple(iters), b0_rebuilds=rebuilds)
