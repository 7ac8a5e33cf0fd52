"""Policy optimisation over an ensemble of flight scenarios.

Cost and gradient are averaged over a deterministic Cartesian grid of
(initial altitude, initial speed, command); the parameter regulariser is
added once on top of the ensemble mean. Optimisation runs in two phases,
ADAM then BFGS with a backtracking line search, logging one record per
optimiser iteration. Members may be evaluated in parallel worker processes;
the reduction always runs in ascending member order, so results are
bitwise-independent of the worker count.
"""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .airframe import AeroParams, CommandSpec, build_problem
from .ode import SolverConfig, SolverStatus
from .policy import MlpSpec, init_params, param_count
from .sensitivity import ctpg_cost_and_gradient

__all__ = [
    "EnsembleGrid",
    "AdamConfig",
    "BfgsConfig",
    "ConvergenceConfig",
    "TrainConfig",
    "MemberEval",
    "EnsembleEval",
    "IterationRecord",
    "LearningRecord",
    "AdamState",
    "BfgsState",
    "adam_step",
    "bfgs_step",
    "ensemble_cost_gradient",
    "train",
    "TrainResult",
]

MEMBER_FAILURE_COST = 1e6


def _steps(start: float, step: float, stop: float) -> tuple[float, ...]:
    n = int(round((stop - start) / step))
    return tuple(start + i * step for i in range(n + 1))


@dataclass(frozen=True)
class EnsembleGrid:
    """Deterministic scenario grid; members are the Cartesian product."""

    h0_values: tuple[float, ...] = _steps(5000.0, 1000.0, 8000.0)
    v0_values: tuple[float, ...] = _steps(700.0, 100.0, 900.0)
    cmd_values: tuple[float, ...] = _steps(-100.0, 25.0, 100.0)

    def __post_init__(self):
        if not (self.h0_values and self.v0_values and self.cmd_values):
            raise ValueError("grid axes must be nonempty")

    def members(self) -> tuple[tuple[float, float, float], ...]:
        return tuple(itertools.product(self.h0_values, self.v0_values,
                                       self.cmd_values))

    def __len__(self) -> int:
        return len(self.h0_values) * len(self.v0_values) * len(self.cmd_values)


@dataclass(frozen=True)
class AdamConfig:
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    max_iters: int = 1000


@dataclass(frozen=True)
class BfgsConfig:
    initial_step_norm: float = 1e-4
    max_iters: int = 1000
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 30


@dataclass(frozen=True)
class ConvergenceConfig:
    grad_inf_tol: float = 1e-6
    rel_cost_tol: float = 1e-9
    patience: int = 10


@dataclass(frozen=True)
class TrainConfig:
    phase1: AdamConfig = AdamConfig()
    phase2: BfgsConfig = BfgsConfig()
    convergence: ConvergenceConfig = ConvergenceConfig()
    solver: SolverConfig = SolverConfig()
    reg_weight: float = 1e-4
    horizon: tuple[float, float] = (0.0, 3.0)
    workers: int = 1

    def __post_init__(self):
        if self.reg_weight < 0:
            raise ValueError("reg_weight must be nonnegative")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class MemberEval:
    h0: float
    v0: float
    cmd: float
    cost: float
    ok: bool
    forward_status: Optional[SolverStatus]
    backward_status: Optional[SolverStatus]


@dataclass(frozen=True)
class EnsembleEval:
    cost: float
    gradient: np.ndarray
    members: tuple[MemberEval, ...]


def _evaluate_member(args):
    """Worker entry: one trajectory cost/gradient (regulariser excluded)."""
    aero, spec, p, member, solver, horizon = args
    h0, v0, cmd = member
    problem = build_problem(aero, spec, CommandSpec(cmd), h0, v0,
                            t0=horizon[0], tf=horizon[1])
    try:
        res = ctpg_cost_and_gradient(problem, p, solver)
    except Exception:  # divergence can surface as domain errors mid-step
        return MemberEval(h0, v0, cmd, MEMBER_FAILURE_COST, False, None, None), None
    if not res.ok:
        ev = MemberEval(h0, v0, cmd, MEMBER_FAILURE_COST, False,
                        res.diagnostics.forward_status,
                        res.diagnostics.backward_status)
        return ev, None
    ev = MemberEval(h0, v0, cmd, res.cost, True,
                    res.diagnostics.forward_status,
                    res.diagnostics.backward_status)
    return ev, res.gradient


def ensemble_cost_gradient(grid: EnsembleGrid, spec: MlpSpec, p: np.ndarray,
                           config: TrainConfig, aero: Optional[AeroParams] = None,
                           executor: Optional[ProcessPoolExecutor] = None
                           ) -> EnsembleEval:
    """Mean cost/gradient over the grid, plus the regulariser counted once.

    A diverging member contributes a fixed penalty cost and a zero gradient
    instead of aborting the iteration, so the optimiser can move on through
    transiently unstable parameter regions.
    """
    aero = aero or AeroParams()
    p = np.asarray(p, dtype=float)
    members = grid.members()
    jobs = [(aero, spec, p, m, config.solver, config.horizon) for m in members]
    if executor is not None:
        results = list(executor.map(_evaluate_member, jobs, chunksize=1))
    else:
        results = [_evaluate_member(job) for job in jobs]

    # fixed ascending-member reduction keeps results bitwise deterministic
    cost_sum = 0.0
    grad_sum = np.zeros(p.size)
    evals = []
    for ev, grad in results:
        cost_sum += ev.cost
        if grad is not None:
            grad_sum += grad
        evals.append(ev)
    k = len(members)
    cost = cost_sum / k + config.reg_weight * float(p @ p)
    gradient = grad_sum / k + 2.0 * config.reg_weight * p
    return EnsembleEval(cost, gradient, tuple(evals))


# ---------------------------------------------------------------------------
# Optimisers

@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(state: AdamState, p: np.ndarray, grad: np.ndarray,
              config: AdamConfig) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected first/second-moment update."""
    t = state.t + 1
    m = config.beta1 * state.m + (1.0 - config.beta1) * grad
    v = config.beta2 * state.v + (1.0 - config.beta2) * grad * grad
    m_hat = m / (1.0 - config.beta1 ** t)
    v_hat = v / (1.0 - config.beta2 ** t)
    p_next = p - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return p_next, AdamState(m, v, t)


@dataclass(frozen=True)
class BfgsState:
    inv_hessian: np.ndarray
    first: bool = True

    @classmethod
    def identity(cls, n: int) -> "BfgsState":
        return cls(np.eye(n), True)


@dataclass(frozen=True)
class BfgsStepResult:
    p_next: np.ndarray
    state: BfgsState
    cost: float
    grad: np.ndarray
    stalled: bool
    evaluations: int = 0


def bfgs_step(state: BfgsState, p: np.ndarray, cost: float, grad: np.ndarray,
              line_search_eval: Callable[[np.ndarray], tuple[float, np.ndarray]],
              config: BfgsConfig = BfgsConfig()) -> BfgsStepResult:
    """One quasi-Newton step with Armijo backtracking.

    The search direction is minus the inverse-Hessian approximation times the
    gradient; the very first step is rescaled to ``initial_step_norm``. The
    secant update is skipped when the curvature guard fails, and a failed
    line search returns the iterate unchanged with the stall flag set.
    """
    d = -state.inv_hessian @ grad
    gd = float(grad @ d)
    if gd >= 0.0:
        # lost positive definiteness: restart from steepest descent
        state = BfgsState(np.eye(p.size), state.first)
        d = -grad
        gd = float(grad @ d)
    d_norm = float(np.linalg.norm(d))
    if d_norm == 0.0 or not np.isfinite(d_norm):
        return BfgsStepResult(p, state, cost, grad, stalled=True)

    step = config.initial_step_norm / d_norm if state.first else 1.0
    accepted = None
    n_eval = 0
    for _ in range(config.max_backtracks + 1):
        trial = p + step * d
        j_t, g_t = line_search_eval(trial)
        n_eval += 1
        if np.isfinite(j_t) and j_t <= cost + config.armijo_c * step * gd:
            accepted = (trial, j_t, g_t)
            break
        step *= config.backtrack_factor
    if accepted is None:
        return BfgsStepResult(p, state, cost, grad, stalled=True, evaluations=n_eval)

    p_next, j_next, g_next = accepted
    s = p_next - p
    y = g_next - grad
    sy = float(s @ y)
    inv_h = state.inv_hessian
    if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
        rho = 1.0 / sy
        eye = np.eye(p.size)
        v_left = eye - rho * np.outer(s, y)
        inv_h = v_left @ inv_h @ v_left.T + rho * np.outer(s, s)
    return BfgsStepResult(p_next, BfgsState(inv_h, False), j_next, g_next,
                          stalled=False, evaluations=n_eval)


# ---------------------------------------------------------------------------
# Training loop

@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    phase: str
    cost: float
    grad_inf_norm: float
    wall_s: float


class LearningRecord:
    """Per-iteration log with a CSV export."""

    HEADER = "iter,phase,cost,grad_inf_norm,wall_s"

    def __init__(self):
        self.rows: list[IterationRecord] = []

    def append(self, iteration, phase, cost, grad_inf_norm, wall_s):
        if self.rows and iteration <= self.rows[-1].iteration:
            raise ValueError("iteration indices must be strictly increasing")
        self.rows.append(IterationRecord(iteration, phase, cost, grad_inf_norm, wall_s))

    def __len__(self):
        return len(self.rows)

    def write_csv(self, path, include_wall: bool = True) -> None:
        with open(path, "w") as fh:
            header = self.HEADER if include_wall else self.HEADER.rsplit(",", 1)[0]
            fh.write(header + "\n")
            for r in self.rows:
                cells = [str(r.iteration), r.phase, repr(r.cost), repr(r.grad_inf_norm)]
                if include_wall:
                    cells.append(repr(r.wall_s))
                fh.write(",".join(cells) + "\n")


class _ConvergenceTracker:
    """Stop when the gradient is tiny or the cost has plateaued long enough."""

    def __init__(self, config: ConvergenceConfig):
        self.config = config
        self.prev_cost = None
        self.flat_streak = 0

    def update(self, cost: float, grad_inf_norm: float) -> bool:
        if grad_inf_norm < self.config.grad_inf_tol:
            return True
        if self.prev_cost is not None:
            rel = abs(cost - self.prev_cost) / max(abs(self.prev_cost), 1e-30)
            self.flat_streak = self.flat_streak + 1 if rel < self.config.rel_cost_tol else 0
        self.prev_cost = cost
        return self.flat_streak >= self.config.patience


@dataclass
class TrainResult:
    params: np.ndarray          # best-cost iterate over the whole run
    cost: float
    record: LearningRecord
    initial_cost: float
    iterations: int
    wall_s: float
    converged: bool


def train(grid: EnsembleGrid, spec: MlpSpec, seed: int, config: TrainConfig,
          aero: Optional[AeroParams] = None) -> TrainResult:
    """Two-phase optimisation from a seeded initialisation.

    Every optimiser iteration evaluates the full ensemble, appends one log
    row, and updates the incumbent best. The returned parameters are the
    best-cost evaluation seen anywhere in the run (including line-search
    trials), never just the final iterate.
    """
    aero = aero or AeroParams()
    p = init_params(spec, seed)
    record = LearningRecord()
    t_start = time.perf_counter()

    best = {"cost": float("inf"), "p": p.copy()}

    executor = None
    if config.workers > 1:
        executor = ProcessPoolExecutor(max_workers=config.workers)
    try:
        def evaluate(p_try):
            ev = ensemble_cost_gradient(grid, spec, p_try, config, aero, executor)
            if np.isfinite(ev.cost) and ev.cost < best["cost"]:
                best["cost"] = ev.cost
                best["p"] = np.array(p_try, copy=True)
            return ev

        iteration = 0
        converged = False
        initial_cost = None
        current: Optional[EnsembleEval] = None

        # phase 1: ADAM
        tracker = _ConvergenceTracker(config.convergence)
        adam_state = AdamState.zeros(p.size)
        for _ in range(config.phase1.max_iters):
            ev = evaluate(p)
            if initial_cost is None:
                initial_cost = ev.cost
            gnorm = float(np.max(np.abs(ev.gradient)))
            record.append(iteration, "adam", ev.cost, gnorm,
                          time.perf_counter() - t_start)
            iteration += 1
            if tracker.update(ev.cost, gnorm):
                converged = True
                break
            p, adam_state = adam_step(adam_state, p, ev.gradient, config.phase1)

        # phase 2: BFGS from a fresh identity inverse Hessian
        if config.phase2.max_iters > 0:
            tracker = _ConvergenceTracker(config.convergence)
            bfgs_state = BfgsState.identity(p.size)
            ev = evaluate(p)
            if initial_cost is None:
                initial_cost = ev.cost
            cost, grad = ev.cost, ev.gradient
            for _ in range(config.phase2.max_iters):
                gnorm = float(np.max(np.abs(grad)))
                record.append(iteration, "bfgs", cost, gnorm,
                              time.perf_counter() - t_start)
                iteration += 1
                if tracker.update(cost, gnorm):
                    converged = True
                    break
                step = bfgs_step(bfgs_state, p, cost, grad,
                                 lambda pt: _eval_pair(evaluate, pt),
                                 config.phase2)
                if step.stalled:
                    converged = True
                    break
                p, bfgs_state = step.p_next, step.state
                cost, grad = step.cost, step.grad
    finally:
        if executor is not None:
            executor.shutdown()

    wall = time.perf_counter() - t_start
    return TrainResult(best["p"], best["cost"], record,
                       initial_cost if initial_cost is not None else float("nan"),
                       iteration, wall, converged)


def _eval_pair(evaluate, p_try):
    ev = evaluate(p_try)
    return ev.cost, ev.gradient
