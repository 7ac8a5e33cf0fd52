"""Explicit ODE integration with continuously queryable (dense) output.

Two backends share one solution container:

* :func:`solve_adaptive` — the Tsitouras 5(4) embedded Runge-Kutta pair with
  PI step-size control and the method's free 4th-order interpolant, so the
  solution can be evaluated anywhere in the integration span.
* :func:`solve_fixed_euler` — fixed-step forward Euler with piecewise-linear
  dense output, used as a low-order baseline backend.

Both are pure functions over immutable inputs; a returned solution is never
mutated and is safe to share across threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

__all__ = [
    "SolverStatus",
    "OdeProblem",
    "SolverConfig",
    "OdeSolution",
    "SpanError",
    "solve_adaptive",
    "solve_fixed_euler",
    "solve",
    "interpolate",
]

# rhs signature: (t, x, p) -> dx/dt
RhsFunc = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


class SolverStatus(enum.Enum):
    SUCCESS = "success"
    MAX_STEPS_EXCEEDED = "max-steps-exceeded"
    NONFINITE_STATE = "nonfinite-state"


class SpanError(ValueError):
    """Raised when a dense-output query lies outside the integrated span."""


@dataclass(frozen=True)
class OdeProblem:
    """Initial value problem dx/dt = rhs(t, x, p) on [t0, tf].

    Backward integration is expressed by the caller as a forward problem via
    time reflection, so t0 < tf always holds here.
    """

    rhs: RhsFunc
    t0: float
    tf: float
    x0: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, dtype=float)))
        if not self.t0 < self.tf:
            raise ValueError(f"require t0 < tf, got [{self.t0}, {self.tf}]")
        if not np.all(np.isfinite(self.x0)):
            raise ValueError("initial state must be finite")


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and bookkeeping for the adaptive solver.

    ``abstol`` may be a scalar or a per-component array. ``save_step`` sets
    the spacing of the guaranteed output grid (filled via dense output on
    top of the natural adaptive mesh). ``method`` selects the backend:
    "tsit5" (adaptive) or "euler" (fixed step of size ``dt_init``).
    """

    abstol: Union[float, np.ndarray] = 1e-6
    reltol: float = 1e-3
    save_step: float = 1e-2
    max_steps: int = 100_000
    dt_init: Optional[float] = None
    method: str = "tsit5"

    def __post_init__(self):
        if np.any(np.asarray(self.abstol) <= 0) or self.reltol <= 0:
            raise ValueError("tolerances must be positive")
        if self.save_step <= 0:
            raise ValueError("save_step must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.method not in ("tsit5", "euler"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "euler" and self.dt_init is None:
            raise ValueError("euler backend requires dt_init as the step size")


@dataclass
class OdeSolution:
    """Integration result: natural step mesh, dense interpolant, save grid.

    ``interp_data`` holds per-interval stage derivatives (tsit5, shape
    ``(n_intervals, 7, dim)``); the linear kind needs no extra data.
    Evaluating the interpolant exactly at a mesh node returns the stored
    state bitwise.
    """

    step_times: np.ndarray
    step_states: np.ndarray
    interp_kind: str  # "tsit5" | "linear"
    interp_data: Optional[np.ndarray]
    save_times: np.ndarray
    save_states: np.ndarray
    status: SolverStatus
    n_accepted: int = 0
    n_rejected: int = 0

    @property
    def success(self) -> bool:
        return self.status is SolverStatus.SUCCESS

    def __call__(self, t: float) -> np.ndarray:
        return interpolate(self, t)


# ---------------------------------------------------------------------------
# Tsitouras 5(4) coefficients (FSAL pair: b equals the last row of A, b7 = 0).

_C = np.array([0.0, 0.161, 0.327, 0.9, 0.9800255409045097, 1.0, 1.0])

_A = np.zeros((7, 7))
_A[1, :1] = [0.161]
_A[2, :2] = [-0.008480655492356989, 0.335480655492357]
_A[3, :3] = [2.8971530571054935, -6.359448489975075, 4.3622954328695815]
_A[4, :4] = [5.325864828439257, -11.748883564062828, 7.4955393428898365,
             -0.09249506636175525]
_A[5, :5] = [5.86145544294642, -12.92096931784711, 8.159367898576159,
             -0.071584973281401, -0.028269050394068383]
_A[6, :6] = [0.09646076681806523, 0.01, 0.4798896504144996, 1.379008574103742,
             -3.290069515436081, 2.324710524099774]

_B = _A[6].copy()

# b - bhat: weights of the embedded 4th-order error estimate
_BTILDE = np.array([
    -0.00178001105222577714, -0.0008164344596567469, 0.007880878010261995,
    -0.1447110071732629, 0.5823571654525552, -0.45808210592918697,
    0.015151515151515152,
])

# Free 4th-order continuous extension: row i gives the polynomial coefficients
# of b_i(theta); the first row is theta*(c0 + c1*theta + ...), the others
# theta^2*(c0 + c1*theta + ...).
_INTERP = np.array([
    [1.0, -2.763706197274826, 2.9132554618219126, -1.0530884977290216],
    [0.13169999999999998, -0.2234, 0.1017, 0.0],
    [3.9302962368947516, -5.941033872131505, 2.490627285651253, 0.0],
    [-12.411077166933676, 30.33818863028232, -16.548102889244902, 0.0],
    [37.50931341651104, -88.1789048947664, 47.37952196281928, 0.0],
    [-27.896526289197287, 65.09189467479366, -34.87065786149661, 0.0],
    [1.5, -4.0, 2.5, 0.0],
])

# PI step controller constants: exponents 0.7/q and 0.4/q with q = 5.
_ORDER = 5
_BETA1 = 0.7 / _ORDER
_BETA2 = 0.4 / _ORDER
_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 10.0
_ERR_PREV_FLOOR = 1e-4


def _dense_weights(theta: float) -> np.ndarray:
    """Interpolant stage weights b_i(theta) for theta in [0, 1]."""
    w = np.empty(7)
    c = _INTERP
    w[0] = theta * (c[0, 0] + theta * (c[0, 1] + theta * (c[0, 2] + theta * c[0, 3])))
    t2 = theta * theta
    for i in range(1, 7):
        w[i] = t2 * (c[i, 0] + theta * (c[i, 1] + theta * c[i, 2]))
    return w


def _scaled_rms(err: np.ndarray, scale: np.ndarray) -> float:
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(f, t0, tf, x0, p, f0, abstol, reltol) -> float:
    """Automatic first-step heuristic from the rhs magnitude at t0."""
    scale = abstol + reltol * np.abs(x0)
    d0 = _scaled_rms(x0, scale)
    d1 = _scaled_rms(f0, scale)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, tf - t0)
    y1 = x0 + h0 * f0
    f1 = f(t0 + h0, y1, p)
    if not np.all(np.isfinite(f1)):
        return min(h0 * 1e-3, tf - t0)
    d2 = _scaled_rms(f1 - f0, scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / _ORDER)
    return min(100 * h0, h1, tf - t0)


def _save_grid(t0: float, tf: float, save_step: float) -> np.ndarray:
    span = tf - t0
    n = int(math.floor(span / save_step + 1e-9))
    times = t0 + save_step * np.arange(n + 1)
    if times[-1] < tf - 1e-9 * save_step:
        times = np.append(times, tf)
    else:
        times[-1] = tf
    return times


def _fill_save_grid(sol: OdeSolution, t0: float, tf: float, save_step: float) -> None:
    times = _save_grid(t0, tf, save_step)
    reached = sol.step_times[-1]
    times = times[times <= reached + 1e-12 * max(1.0, abs(reached))]
    if times.size == 0 or times[0] != t0:
        times = np.concatenate(([t0], times))
    states = np.empty((times.size, sol.step_states.shape[1]))
    for i, t in enumerate(times):
        states[i] = interpolate(sol, min(t, reached))
    sol.save_times = times
    sol.save_states = states


def solve_adaptive(problem: OdeProblem, config: SolverConfig) -> OdeSolution:
    """Integrate with the Tsitouras 5(4) pair and adaptive PI step control.

    On divergence the solver returns a partial solution with status
    ``MAX_STEPS_EXCEEDED`` or ``NONFINITE_STATE`` instead of raising; callers
    decide how to handle it.
    """
    f = problem.rhs
    t0, tf = problem.t0, problem.tf
    p = problem.p
    abstol = np.asarray(config.abstol, dtype=float)
    reltol = config.reltol

    t = t0
    x = problem.x0.copy()
    dim = x.size
    k = np.empty((7, dim))
    k[0] = np.asarray(f(t, x, p), dtype=float)

    times = [t0]
    states = [x.copy()]
    stages: list[np.ndarray] = []
    steps_h: list[float] = []

    status = SolverStatus.MAX_STEPS_EXCEEDED
    n_acc = n_rej = 0

    if not np.all(np.isfinite(k[0])):
        status = SolverStatus.NONFINITE_STATE
        sol = _build_solution(times, states, stages, steps_h, status, n_acc, n_rej)
        _fill_save_grid(sol, t0, tf, config.save_step)
        return sol

    if config.dt_init is not None:
        h = min(float(config.dt_init), tf - t0)
    else:
        h = _initial_step(f, t0, tf, x, p, k[0], abstol, reltol)
    h_min = 1e-14 * max(1.0, abs(tf - t0))

    err_prev = _ERR_PREV_FLOOR
    attempts = 0
    while t < tf:
        if attempts >= config.max_steps:
            status = SolverStatus.MAX_STEPS_EXCEEDED
            break
        attempts += 1

        final = t + h >= tf
        if final:
            h = tf - t

        ok = True
        for i in range(1, 7):
            xi = x + h * (_A[i, :i] @ k[:i])
            k[i] = f(t + _C[i] * h, xi, p)
            if not np.all(np.isfinite(k[i])):
                ok = False
                break
        if ok:
            y1 = x + h * (_B @ k)
            ok = bool(np.all(np.isfinite(y1)))
        if not ok:
            # nonfinite trial: shrink hard and retry; give up at h_min
            n_rej += 1
            h *= _FAC_MIN
            if h < h_min:
                status = SolverStatus.NONFINITE_STATE
                break
            continue

        err_vec = h * (_BTILDE @ k)
        scale = abstol + reltol * np.maximum(np.abs(x), np.abs(y1))
        err = _scaled_rms(err_vec, scale)

        if not np.isfinite(err):
            n_rej += 1
            h *= _FAC_MIN
            if h < h_min:
                status = SolverStatus.NONFINITE_STATE
                break
            continue

        if err <= 1.0:
            stages.append(k.copy())
            steps_h.append(h)
            t = tf if final else t + h
            x = y1
            times.append(t)
            states.append(x.copy())
            k[0] = k[6]  # FSAL
            n_acc += 1
            factor = _FAC_MAX if err == 0.0 else \
                _SAFETY * err ** (-_BETA1) * err_prev ** _BETA2
            err_prev = max(err, _ERR_PREV_FLOOR)
            if t >= tf:
                status = SolverStatus.SUCCESS
                break
        else:
            n_rej += 1
            factor = min(1.0, _SAFETY * err ** (-_BETA1) * err_prev ** _BETA2)
        h *= min(_FAC_MAX, max(_FAC_MIN, factor))
        if h < h_min:
            status = SolverStatus.NONFINITE_STATE
            break

    sol = _build_solution(times, states, stages, steps_h, status, n_acc, n_rej)
    _fill_save_grid(sol, t0, tf, config.save_step)
    return sol


def _build_solution(times, states, stages, steps_h, status, n_acc, n_rej) -> OdeSolution:
    step_times = np.asarray(times)
    step_states = np.asarray(states)
    if stages:
        data = np.asarray(stages)  # (n_intervals, 7, dim)
    else:
        data = np.empty((0, 7, step_states.shape[1]))
    return OdeSolution(
        step_times=step_times,
        step_states=step_states,
        interp_kind="tsit5",
        interp_data=data,
        save_times=np.empty(0),
        save_states=np.empty((0, step_states.shape[1])),
        status=status,
        n_accepted=n_acc,
        n_rejected=n_rej,
    )


def solve_fixed_euler(
    problem: OdeProblem,
    dt: float,
    save_step: float = 1e-2,
    max_steps: int = 10_000_000,
) -> OdeSolution:
    """Forward Euler with a fixed step; dense output is piecewise linear."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    t0, tf = problem.t0, problem.tf
    n_steps = int(math.ceil((tf - t0) / dt - 1e-12))
    if n_steps > max_steps:
        raise ValueError(f"{n_steps} steps exceed the cap of {max_steps}")

    f = problem.rhs
    p = problem.p
    x = problem.x0.copy()
    times = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, x.size))
    times[0] = t0
    states[0] = x
    status = SolverStatus.SUCCESS
    last = 0
    for i in range(n_steps):
        t = t0 + i * dt
        t_next = tf if i == n_steps - 1 else t0 + (i + 1) * dt
        dx = f(t, x, p)
        x = x + (t_next - t) * np.asarray(dx, dtype=float)
        if not np.all(np.isfinite(x)):
            status = SolverStatus.NONFINITE_STATE
            break
        times[i + 1] = t_next
        states[i + 1] = x
        last = i + 1

    sol = OdeSolution(
        step_times=times[: last + 1].copy(),
        step_states=states[: last + 1].copy(),
        interp_kind="linear",
        interp_data=None,
        save_times=np.empty(0),
        save_states=np.empty((0, x.size)),
        status=status,
        n_accepted=last,
        n_rejected=0,
    )
    if last > 0:
        _fill_save_grid(sol, t0, tf, save_step)
    else:
        sol.save_times = times[:1].copy()
        sol.save_states = states[:1].copy()
    return sol


def solve(problem: OdeProblem, config: SolverConfig) -> OdeSolution:
    """Dispatch on ``config.method``."""
    if config.method == "euler":
        return solve_fixed_euler(
            problem, config.dt_init, save_step=config.save_step,
            max_steps=config.max_steps,
        )
    return solve_adaptive(problem, config)


def interpolate(solution: OdeSolution, t: float) -> np.ndarray:
    """Evaluate the dense output at time ``t`` within the integrated span.

    Queries at mesh nodes return the stored state bitwise. Queries a hair
    outside the span (floating-point slop from time reflection) are snapped
    to the nearest endpoint; anything further raises :class:`SpanError`.
    """
    ts = solution.step_times
    lo, hi = ts[0], ts[-1]
    tol = 1e-9 * max(1.0, hi - lo)
    if t < lo or t > hi:
        if t >= lo - tol and t <= hi + tol:
            t = lo if t < lo else hi
        else:
            raise SpanError(f"t={t} outside integrated span [{lo}, {hi}]")

    idx = int(np.searchsorted(ts, t, side="right")) - 1
    if idx >= ts.size - 1:
        idx = ts.size - 2
    if idx < 0:
        idx = 0
    if t == ts[idx]:
        return solution.step_states[idx].copy()
    if t == ts[idx + 1]:
        return solution.step_states[idx + 1].copy()

    h = ts[idx + 1] - ts[idx]
    theta = (t - ts[idx]) / h
    if solution.interp_kind == "linear":
        y0 = solution.step_states[idx]
        y1 = solution.step_states[idx + 1]
        return y0 + theta * (y1 - y0)
    w = _dense_weights(theta)
    return solution.step_states[idx] + h * (w @ solution.interp_data[idx])
