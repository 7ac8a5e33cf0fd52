"""Cost gradients through ODE trajectories via the interpolating adjoint.

The forward pass integrates the dynamics together with the running-cost
quadrature and keeps the dense solution. The backward pass integrates the
costate and the gradient quadrature in reverse time, reading the state
trajectory from the stored dense output instead of re-integrating the
dynamics backward (which is unstable for convergent closed loops).

The reverse ODE is time-reflected onto a forward problem so both passes use
the same solver code path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .ode import (
    OdeProblem,
    OdeSolution,
    SolverConfig,
    SolverStatus,
    interpolate,
    solve,
)

__all__ = [
    "DerivativeProvider",
    "CtpgProblem",
    "GradientDiagnostics",
    "GradientResult",
    "FiniteDifferenceError",
    "finite_difference_provider",
    "forward_pass",
    "backward_pass",
    "ctpg_cost_and_gradient",
    "finite_difference_gradient",
]


class FiniteDifferenceError(RuntimeError):
    """A finite-difference probe failed; the message names the coordinate."""


@dataclass(frozen=True)
class DerivativeProvider:
    """Partial derivatives of the problem data.

    Shapes: ``dfdx`` is (dim x, dim x), ``dfdp`` is (dim x, dim p), ``dLdx``
    and ``dphidx`` are (dim x,), ``dLdp`` and ``dRdp`` are (dim p,).

    ``combined``, when given, returns ``(dfdx, dfdp, dLdx, dLdp)`` in one
    call so implementations can share intermediate quantities in the reverse
    pass; it must agree with the individual callables.
    """

    dfdx: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    dfdp: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    dLdx: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    dLdp: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    dphidx: Callable[[np.ndarray], np.ndarray]
    dRdp: Callable[[np.ndarray], np.ndarray]
    combined: Optional[Callable] = None


@dataclass(frozen=True)
class CtpgProblem:
    """Trajectory optimisation data: dynamics, costs, regulariser, partials.

    The total cost is ``terminal_cost(x(tf)) + integral of running_cost
    + regulariser(p)``; the regulariser depends on the parameters only.
    """

    rhs: Callable[[float, np.ndarray, np.ndarray], np.ndarray]
    running_cost: Callable[[float, np.ndarray, np.ndarray], float]
    terminal_cost: Callable[[np.ndarray], float]
    regulariser: Callable[[np.ndarray], float]
    derivatives: DerivativeProvider
    t0: float
    tf: float
    x0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))
        if not self.t0 < self.tf:
            raise ValueError(f"require t0 < tf, got [{self.t0}, {self.tf}]")


@dataclass(frozen=True)
class GradientDiagnostics:
    forward_status: SolverStatus
    backward_status: Optional[SolverStatus]
    forward_steps: int
    backward_steps: int


@dataclass(frozen=True)
class GradientResult:
    """Cost and gradient of one trajectory; ``gradient`` is None on failure."""

    cost: float
    gradient: Optional[np.ndarray]
    forward_solution: OdeSolution
    diagnostics: GradientDiagnostics

    @property
    def ok(self) -> bool:
        return self.gradient is not None


def _central(fun, x, i, eps):
    xp = x.copy()
    xm = x.copy()
    xp[i] += eps
    xm[i] -= eps
    return (np.asarray(fun(xp), dtype=float) - np.asarray(fun(xm), dtype=float)) / (2 * eps)


def finite_difference_provider(
    rhs,
    running_cost,
    terminal_cost,
    regulariser,
    eps: float = 1e-6,
) -> DerivativeProvider:
    """Central-difference fallback provider; slow but assumption-free."""

    def dfdx(t, x, p):
        cols = [_central(lambda xi: rhs(t, xi, p), x, i, eps) for i in range(x.size)]
        return np.stack(cols, axis=1)

    def dfdp(t, x, p):
        cols = [_central(lambda pi: rhs(t, x, pi), p, i, eps) for i in range(p.size)]
        return np.stack(cols, axis=1)

    def dLdx(t, x, p):
        return np.array([_central(lambda xi: running_cost(t, xi, p), x, i, eps)
                         for i in range(x.size)])

    def dLdp(t, x, p):
        return np.array([_central(lambda pi: running_cost(t, x, pi), p, i, eps)
                         for i in range(p.size)])

    def dphidx(x):
        return np.array([_central(terminal_cost, x, i, eps) for i in range(x.size)])

    def dRdp(p):
        return np.array([_central(regulariser, p, i, eps) for i in range(p.size)])

    return DerivativeProvider(dfdx, dfdp, dLdx, dLdp, dphidx, dRdp)


def forward_pass(
    problem: CtpgProblem,
    p: np.ndarray,
    solver: SolverConfig,
) -> tuple[OdeSolution, float]:
    """Integrate the state augmented with the running-cost quadrature.

    Returns the dense solution of ``d[x; q]/dt = [rhs; running_cost]`` from
    ``[x0; 0]`` and the cost without the regulariser, i.e.
    ``terminal_cost(x(tf)) + q(tf)``. On solver failure the cost is NaN and
    the partial solution carries the status.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    n = problem.x0.size
    rhs = problem.rhs
    running_cost = problem.running_cost

    def aug_rhs(t, z, p_):
        out = np.empty(n + 1)
        out[:n] = rhs(t, z[:n], p_)
        out[n] = running_cost(t, z[:n], p_)
        return out

    z0 = np.concatenate([problem.x0, [0.0]])
    sol = solve(OdeProblem(aug_rhs, problem.t0, problem.tf, z0, p), solver)
    if not sol.success:
        return sol, float("nan")
    z_tf = sol.step_states[-1]
    cost = float(problem.terminal_cost(z_tf[:n])) + float(z_tf[n])
    return sol, cost


def backward_pass(
    problem: CtpgProblem,
    p: np.ndarray,
    forward: OdeSolution,
    solver: SolverConfig,
) -> tuple[Optional[np.ndarray], OdeSolution]:
    """Integrate the costate and gradient quadrature backward over the span.

    The reverse state is ``[lam; g]`` with terminal condition
    ``[dphidx(x(tf)); 0]``; its reverse-time dynamics follow the adjoint
    equation, with the state read from the dense forward solution. Returns
    ``g(t0)``, the gradient contribution of the trajectory (regulariser
    excluded), plus the reverse solution for diagnostics; the gradient is
    None when the reverse solve fails.
    """
    if not forward.success:
        raise ValueError("backward pass requires a successful forward solution")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    n = problem.x0.size
    n_p = p.size
    t0, tf = problem.t0, problem.tf
    deriv = problem.derivatives
    combined = deriv.combined

    def reflected_rhs(tau, w, p_):
        # reverse time runs tau in [t0, tf] with true time s = t0 + tf - tau
        s = t0 + tf - tau
        x = interpolate(forward, s)[:n]
        lam = w[:n]
        if combined is not None:
            dfdx, dfdp, dLdx, dLdp = combined(s, x, p_)
        else:
            dfdx = deriv.dfdx(s, x, p_)
            dfdp = deriv.dfdp(s, x, p_)
            dLdx = deriv.dLdx(s, x, p_)
            dLdp = deriv.dLdp(s, x, p_)
        out = np.empty(n + n_p)
        out[:n] = dfdx.T @ lam + dLdx
        out[n:] = dfdp.T @ lam + dLdp
        return out

    x_tf = forward.step_states[-1][:n]
    lam_tf = np.asarray(deriv.dphidx(x_tf), dtype=float).reshape(n)
    w_tf = np.concatenate([lam_tf, np.zeros(n_p)])

    rev = solve(OdeProblem(reflected_rhs, t0, tf, w_tf, p), solver)
    if not rev.success:
        return None, rev
    return rev.step_states[-1][n:].copy(), rev


def ctpg_cost_and_gradient(
    problem: CtpgProblem,
    p: np.ndarray,
    solver: SolverConfig,
) -> GradientResult:
    """Forward/backward sweep: total cost and its parameter gradient.

    Cost is the forward value plus the regulariser; the gradient adds the
    regulariser derivative to the backward quadrature. Any pass failure
    yields a result whose diagnostics carry the failing status and whose
    gradient is None.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    fwd, cost_wo_reg = forward_pass(problem, p, solver)
    if not fwd.success:
        diag = GradientDiagnostics(fwd.status, None, fwd.n_accepted, 0)
        return GradientResult(float("nan"), None, fwd, diag)

    grad_wo_reg, rev = backward_pass(problem, p, fwd, solver)
    diag = GradientDiagnostics(fwd.status, rev.status, fwd.n_accepted, rev.n_accepted)
    if grad_wo_reg is None:
        return GradientResult(float("nan"), None, fwd, diag)

    cost = cost_wo_reg + float(problem.regulariser(p))
    gradient = grad_wo_reg + np.asarray(problem.derivatives.dRdp(p), dtype=float).reshape(p.size)
    return GradientResult(cost, gradient, fwd, diag)


def finite_difference_gradient(
    problem: CtpgProblem,
    p: np.ndarray,
    solver: SolverConfig,
    eps: Optional[float] = None,
) -> np.ndarray:
    """Central-difference gradient of the total cost, one forward solve per probe.

    With ``eps=None`` each coordinate uses ``1e-5 * max(1, |p_i|)``, which
    balances truncation against rounding in double precision. Serves as the
    independent oracle for the adjoint gradient.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    grad = np.empty(p.size)

    def total_cost(pi, i, side):
        sol, cost = forward_pass(problem, pi, solver)
        if not sol.success:
            raise FiniteDifferenceError(
                f"forward pass failed ({sol.status.value}) probing coordinate {i} ({side})"
            )
        return cost + float(problem.regulariser(pi))

    for i in range(p.size):
        eps_i = eps if eps is not None else 1e-5 * max(1.0, abs(p[i]))
        pp = p.copy()
        pm = p.copy()
        pp[i] += eps_i
        pm[i] -= eps_i
        grad[i] = (total_cost(pp, i, "+") - total_cost(pm, i, "-")) / (2 * eps_i)
    return grad
