"""Pitch-plane airframe with a three-loop acceleration autopilot.

Nonlinear longitudinal dynamics of a tail-controlled skid-to-turn vehicle
(altitude, speed, incidence, pitch rate, attitude, second-order fin
actuator), an exponential-density atmosphere, cubic aero coefficient fits,
the three-loop acceleration-tracking controller whose gains come from the
neural schedule in :mod:`ctpg.policy`, a first-order reference model for
response shaping, and the running-cost integrand that scores tracking,
actuator command, and fin-rate usage.

The closed loop is exposed both as a plain rhs for simulation and as a
:class:`~ctpg.sensitivity.CtpgProblem` with hand-derived analytic partials
(a finite-difference provider is available as a cross-check).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .policy import (
    GainVector,
    MlpSpec,
    mlp_forward,
    mlp_value_and_jacobians,
    normalised_input,
    param_count,
)
from .sensitivity import CtpgProblem, DerivativeProvider, finite_difference_provider

__all__ = [
    "AeroParams",
    "PlantState",
    "CommandSpec",
    "FlightDomainError",
    "atmosphere",
    "aero_coefficients",
    "plant_derivatives",
    "three_loop_autopilot",
    "reference_model_rhs",
    "running_cost",
    "closed_loop_rhs",
    "closed_loop_outputs",
    "analytic_provider",
    "numeric_provider",
    "build_problem",
    "initial_state",
    "simulate_trajectory",
    "write_trajectory_csv",
    "TRAJECTORY_HEADER",
]

# closed-loop state layout
IDX_H = 0
IDX_V = 1
IDX_ALPHA = 2
IDX_Q = 3
IDX_THETA = 4
IDX_DELTA = 5
IDX_DELTA_DOT = 6
IDX_XC = 7
IDX_AZREF = 8
DIM_STATE = 9

# running-cost weights and normalisers
TRACK_WEIGHT = 100.0
FIN_CMD_WEIGHT = 0.01
FIN_RATE_WEIGHT = 0.1
FIN_CMD_NORM = 5.0 * math.pi / 36.0
FIN_RATE_NORM = 1.5

REFERENCE_TIME_CONSTANT = 0.2


class FlightDomainError(ValueError):
    """Physically invalid flight state (nonpositive speed or temperature)."""


@dataclass(frozen=True)
class AeroParams:
    """Aerodynamic fits, mass properties, actuator, and atmosphere constants."""

    a_a: float = -0.3
    a_n: float = 19.373
    b_n: float = -31.023
    c_n: float = -9.717
    d_n: float = -1.948
    a_m: float = 40.44
    b_m: float = -64.015
    c_m: float = 2.922
    d_m: float = -11.803
    m: float = 204.02            # kg
    I_yy: float = 247.439        # kg m^2
    S_ref: float = 0.0409        # m^2
    d_ref: float = 0.2286        # m
    omega_a: float = 150.0       # rad/s
    zeta_a: float = 0.7
    rho0: float = 1.225          # kg/m^3
    H: float = 8435.0            # m
    gamma_a: float = 1.4
    R_a: float = 286.0           # m^2/s^2/K
    T0: float = 288.15           # K
    lapse: float = 0.0065        # K/m
    g: float = 9.8               # m/s^2

    def __post_init__(self):
        for name in ("m", "I_yy", "S_ref", "d_ref", "omega_a", "rho0", "H", "T0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class PlantState:
    """Airframe state: altitude, speed, incidence, rates, attitude, actuator."""

    h: float
    V: float
    alpha: float = 0.0
    q: float = 0.0
    theta: float = 0.0
    delta: float = 0.0
    delta_dot: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.h, self.V, self.alpha, self.q, self.theta,
                         self.delta, self.delta_dot])


@dataclass(frozen=True)
class CommandSpec:
    """Constant normal-acceleration command held over one episode."""

    a_z_cmd: float

    def __post_init__(self):
        if not math.isfinite(self.a_z_cmd):
            raise ValueError("command must be finite")


def atmosphere(params: AeroParams, h: float, V: float):
    """Density, speed of sound, Mach number, and dynamic pressure at (h, V)."""
    T = params.T0 - params.lapse * h
    if T <= 0:
        raise FlightDomainError(f"nonpositive ambient temperature at h={h}")
    rho = params.rho0 * math.exp(-h / params.H)
    v_s = math.sqrt(params.gamma_a * params.R_a * T)
    mach = V / v_s
    q_bar = 0.5 * rho * V * V
    return rho, v_s, mach, q_bar


def aero_coefficients(params: AeroParams, alpha: float, mach: float, delta: float):
    """(C_A, C_N, C_M) from the cubic incidence fits with Mach corrections."""
    a2 = alpha * abs(alpha)
    a3 = alpha ** 3
    c_a = params.a_a
    c_n = (params.a_n * a3 + params.b_n * a2
           + params.c_n * (2.0 - mach / 3.0) * alpha + params.d_n * delta)
    c_m = (params.a_m * a3 + params.b_m * a2
           + params.c_m * (-7.0 + 8.0 * mach / 3.0) * alpha + params.d_m * delta)
    return c_a, c_n, c_m


def plant_derivatives(params: AeroParams, state: PlantState, delta_c: float):
    """Time derivatives of the seven plant states plus the achieved a_z.

    The actuator is a linear second-order lag toward ``delta_c``; a_z is the
    normal specific-force acceleration, positive nose-down.
    """
    if state.V <= 0:
        raise FlightDomainError(f"nonpositive speed V={state.V}")
    p = params
    gamma = state.theta - state.alpha
    _rho, _vs, mach, q_bar = atmosphere(p, state.h, state.V)
    c_a, c_n, c_m = aero_coefficients(p, state.alpha, mach, state.delta)

    qs_m = q_bar * p.S_ref / p.m
    sin_a, cos_a = math.sin(state.alpha), math.cos(state.alpha)
    sin_g, cos_g = math.sin(gamma), math.cos(gamma)

    axial = c_n * sin_a + c_a * cos_a
    normal = c_n * cos_a - c_a * sin_a

    h_dot = state.V * sin_g
    v_dot = qs_m * axial - p.g * sin_g
    a_z = qs_m * normal  # equals -V*gamma_dot - g*cos(gamma)
    alpha_dot = (a_z + p.g * cos_g) / state.V + state.q
    q_dot = q_bar * p.S_ref * p.d_ref / p.I_yy * c_m
    theta_dot = state.q
    delta_ddot = (-p.omega_a ** 2 * (state.delta - delta_c)
                  - 2.0 * p.zeta_a * p.omega_a * state.delta_dot)

    deriv = np.array([h_dot, v_dot, alpha_dot, q_dot, theta_dot,
                      state.delta_dot, delta_ddot])
    return deriv, a_z


def three_loop_autopilot(gains: GainVector, a_z: float, cmd: CommandSpec,
                         q: float, V: float, gamma: float, x_c: float):
    """Integrator-state derivative and fin command of the three-loop law."""
    if V <= 0:
        raise FlightDomainError(f"nonpositive speed V={V}")
    g = 9.8
    x_c_dot = (gains.K_A * (cmd.a_z_cmd - a_z) + q
               + (cmd.a_z_cmd + g * math.cos(gamma)) / V)
    delta_c = gains.K_I * x_c + gains.K_R * q
    return x_c_dot, delta_c


def reference_model_rhs(a_z_ref: float, cmd: CommandSpec) -> float:
    """First-order lag of the reference acceleration toward the command."""
    return (cmd.a_z_cmd - a_z_ref) / REFERENCE_TIME_CONSTANT


def running_cost(a_z: float, a_z_ref: float, cmd: CommandSpec,
                 delta_c: float, delta_dot: float) -> float:
    """Weighted squares of tracking error, fin command, and fin rate.

    The tracking residual is normalised by 1 + |command| so episodes with
    different command levels contribute comparably (and the zero command
    stays well defined).
    """
    track = (a_z - a_z_ref) / (1.0 + abs(cmd.a_z_cmd))
    return (TRACK_WEIGHT * track * track
            + FIN_CMD_WEIGHT * (delta_c / FIN_CMD_NORM) ** 2
            + FIN_RATE_WEIGHT * (delta_dot / FIN_RATE_NORM) ** 2)


def _autopilot_terms(params, spec, p, cmd, x):
    """Shared evaluation path: gains, a_z, fin command, plant derivative."""
    h, V, alpha = x[IDX_H], x[IDX_V], x[IDX_ALPHA]
    q, theta = x[IDX_Q], x[IDX_THETA]
    if V <= 0:
        raise FlightDomainError(f"nonpositive speed V={V}")
    _rho, _vs, mach, _qbar = atmosphere(params, h, V)
    u = normalised_input(alpha, mach, h, spec.input_normalisers)
    gains = mlp_forward(spec, p, u)
    plant = PlantState(h, V, alpha, q, theta, x[IDX_DELTA], x[IDX_DELTA_DOT])
    gamma = theta - alpha
    # fin command first (plant needs it), then a_z from the plant evaluation
    delta_c = gains.K_I * x[IDX_XC] + gains.K_R * q
    deriv7, a_z = plant_derivatives(params, plant, delta_c)
    x_c_dot = (gains.K_A * (cmd.a_z_cmd - a_z) + q
               + (cmd.a_z_cmd + params.g * math.cos(gamma)) / V)
    return gains, mach, a_z, delta_c, x_c_dot, deriv7


def closed_loop_rhs(params: AeroParams, spec: MlpSpec, p: np.ndarray,
                    cmd: CommandSpec, t: float, x: np.ndarray) -> np.ndarray:
    """Stacked derivative of [plant(7); controller integrator; reference]."""
    _gains, _mach, _az, _dc, x_c_dot, deriv7 = _autopilot_terms(params, spec, p, cmd, x)
    out = np.empty(DIM_STATE)
    out[:7] = deriv7
    out[IDX_XC] = x_c_dot
    out[IDX_AZREF] = reference_model_rhs(x[IDX_AZREF], cmd)
    return out


def closed_loop_outputs(params: AeroParams, spec: MlpSpec, p: np.ndarray,
                        cmd: CommandSpec, x: np.ndarray):
    """(a_z, delta_c, gains, mach) observables along a trajectory."""
    gains, mach, a_z, delta_c, _xcd, _d7 = _autopilot_terms(params, spec, p, cmd, x)
    return a_z, delta_c, gains, mach


def closed_loop_running_cost(params: AeroParams, spec: MlpSpec, p: np.ndarray,
                             cmd: CommandSpec, t: float, x: np.ndarray) -> float:
    _gains, _mach, a_z, delta_c, _xcd, _d7 = _autopilot_terms(params, spec, p, cmd, x)
    return running_cost(a_z, x[IDX_AZREF], cmd, delta_c, x[IDX_DELTA_DOT])


# ---------------------------------------------------------------------------
# Analytic partials of the closed loop (hand-derived chain rule).

def _closed_loop_partials(params: AeroParams, spec: MlpSpec, p: np.ndarray,
                          cmd: CommandSpec, x: np.ndarray):
    """Everything the backward pass needs at one point, in a single sweep.

    Returns (f, dfdx, dfdp, dLdx, dLdp). State dimension is 9; parameter
    dimension follows the policy spec.
    """
    pr = params
    h, V, alpha = x[IDX_H], x[IDX_V], x[IDX_ALPHA]
    q, theta = x[IDX_Q], x[IDX_THETA]
    delta, delta_dot = x[IDX_DELTA], x[IDX_DELTA_DOT]
    x_c, a_z_ref = x[IDX_XC], x[IDX_AZREF]
    if V <= 0:
        raise FlightDomainError(f"nonpositive speed V={V}")

    T = pr.T0 - pr.lapse * h
    if T <= 0:
        raise FlightDomainError(f"nonpositive ambient temperature at h={h}")
    rho = pr.rho0 * math.exp(-h / pr.H)
    v_s = math.sqrt(pr.gamma_a * pr.R_a * T)
    mach = V / v_s
    q_bar = 0.5 * rho * V * V

    drho_dh = -rho / pr.H
    dvs_dh = -pr.gamma_a * pr.R_a * pr.lapse / (2.0 * v_s)
    dmach_dh = -V * dvs_dh / (v_s * v_s)
    dmach_dV = 1.0 / v_s
    dqbar_dh = 0.5 * V * V * drho_dh
    dqbar_dV = rho * V

    abs_a = abs(alpha)
    sgn_a = 0.0 if alpha == 0.0 else math.copysign(1.0, alpha)
    a2 = alpha * abs_a
    a3 = alpha ** 3
    c_a = pr.a_a
    c_n = pr.a_n * a3 + pr.b_n * a2 + pr.c_n * (2.0 - mach / 3.0) * alpha + pr.d_n * delta
    c_m = pr.a_m * a3 + pr.b_m * a2 + pr.c_m * (-7.0 + 8.0 * mach / 3.0) * alpha + pr.d_m * delta

    dcn_da = 3.0 * pr.a_n * alpha ** 2 + 2.0 * pr.b_n * abs_a + pr.c_n * (2.0 - mach / 3.0)
    dcn_dm = -pr.c_n * alpha / 3.0
    dcm_da = 3.0 * pr.a_m * alpha ** 2 + 2.0 * pr.b_m * abs_a + pr.c_m * (-7.0 + 8.0 * mach / 3.0)
    dcm_dm = 8.0 * pr.c_m * alpha / 3.0

    sin_a, cos_a = math.sin(alpha), math.cos(alpha)
    gamma = theta - alpha
    sin_g, cos_g = math.sin(gamma), math.cos(gamma)

    # gain schedule and its sensitivities
    u = normalised_input(alpha, mach, h, spec.input_normalisers)
    gains, dK_dp, dK_du = mlp_value_and_jacobians(spec, p, u)
    k_a, k_i, k_r = gains
    a_max, m_max, h_max = spec.input_normalisers
    du_dx = np.zeros((3, DIM_STATE))
    du_dx[0, IDX_ALPHA] = sgn_a / a_max
    du_dx[1, IDX_H] = dmach_dh / m_max
    du_dx[1, IDX_V] = dmach_dV / m_max
    du_dx[2, IDX_H] = 1.0 / h_max
    dK_dx = dK_du @ du_dx  # (3, 9)

    s_m = pr.S_ref / pr.m
    qs_m = q_bar * s_m
    normal = c_n * cos_a - c_a * sin_a
    axial = c_n * sin_a + c_a * cos_a

    a_z = qs_m * normal
    daz_dx = np.zeros(DIM_STATE)
    daz_dx[IDX_H] = s_m * (dqbar_dh * normal + q_bar * dcn_dm * dmach_dh * cos_a)
    daz_dx[IDX_V] = s_m * (dqbar_dV * normal + q_bar * dcn_dm * dmach_dV * cos_a)
    daz_dx[IDX_ALPHA] = qs_m * (dcn_da * cos_a - c_n * sin_a - c_a * cos_a)
    daz_dx[IDX_DELTA] = qs_m * pr.d_n * cos_a

    delta_c = k_i * x_c + k_r * q
    ddc_dx = x_c * dK_dx[1] + q * dK_dx[2]
    ddc_dx[IDX_Q] += k_r
    ddc_dx[IDX_XC] += k_i
    ddc_dp = x_c * dK_dp[1] + q * dK_dp[2]

    # rhs vector
    f = np.empty(DIM_STATE)
    f[IDX_H] = V * sin_g
    f[IDX_V] = qs_m * axial - pr.g * sin_g
    f[IDX_ALPHA] = (a_z + pr.g * cos_g) / V + q
    f[IDX_Q] = q_bar * pr.S_ref * pr.d_ref / pr.I_yy * c_m
    f[IDX_THETA] = q
    f[IDX_DELTA] = delta_dot
    f[IDX_DELTA_DOT] = (-pr.omega_a ** 2 * (delta - delta_c)
                        - 2.0 * pr.zeta_a * pr.omega_a * delta_dot)
    f[IDX_XC] = k_a * (cmd.a_z_cmd - a_z) + q + (cmd.a_z_cmd + pr.g * cos_g) / V
    f[IDX_AZREF] = (cmd.a_z_cmd - a_z_ref) / REFERENCE_TIME_CONSTANT

    dfdx = np.zeros((DIM_STATE, DIM_STATE))
    n_p = p.size
    dfdp = np.zeros((DIM_STATE, n_p))

    # h_dot = V sin(gamma)
    dfdx[IDX_H, IDX_V] = sin_g
    dfdx[IDX_H, IDX_THETA] = V * cos_g
    dfdx[IDX_H, IDX_ALPHA] = -V * cos_g

    # V_dot = qs_m*axial - g sin(gamma)
    dfdx[IDX_V, IDX_H] = s_m * (dqbar_dh * axial + q_bar * dcn_dm * dmach_dh * sin_a)
    dfdx[IDX_V, IDX_V] = s_m * (dqbar_dV * axial + q_bar * dcn_dm * dmach_dV * sin_a)
    dfdx[IDX_V, IDX_ALPHA] = qs_m * (dcn_da * sin_a + c_n * cos_a - c_a * sin_a) + pr.g * cos_g
    dfdx[IDX_V, IDX_THETA] = -pr.g * cos_g
    dfdx[IDX_V, IDX_DELTA] = qs_m * pr.d_n * sin_a

    # alpha_dot = (a_z + g cos(gamma))/V + q
    az_g = a_z + pr.g * cos_g
    dfdx[IDX_ALPHA, IDX_H] = daz_dx[IDX_H] / V
    dfdx[IDX_ALPHA, IDX_V] = daz_dx[IDX_V] / V - az_g / (V * V)
    dfdx[IDX_ALPHA, IDX_ALPHA] = (daz_dx[IDX_ALPHA] + pr.g * sin_g) / V
    dfdx[IDX_ALPHA, IDX_Q] = 1.0
    dfdx[IDX_ALPHA, IDX_THETA] = -pr.g * sin_g / V
    dfdx[IDX_ALPHA, IDX_DELTA] = daz_dx[IDX_DELTA] / V

    # q_dot = (qbar S d / Iyy) c_m
    sd_i = pr.S_ref * pr.d_ref / pr.I_yy
    dfdx[IDX_Q, IDX_H] = sd_i * (dqbar_dh * c_m + q_bar * dcm_dm * dmach_dh)
    dfdx[IDX_Q, IDX_V] = sd_i * (dqbar_dV * c_m + q_bar * dcm_dm * dmach_dV)
    dfdx[IDX_Q, IDX_ALPHA] = q_bar * sd_i * dcm_da
    dfdx[IDX_Q, IDX_DELTA] = q_bar * sd_i * pr.d_m

    dfdx[IDX_THETA, IDX_Q] = 1.0

    dfdx[IDX_DELTA, IDX_DELTA_DOT] = 1.0

    # actuator: delta_ddot = -w^2 (delta - delta_c) - 2 zeta w delta_dot
    w2 = pr.omega_a ** 2
    dfdx[IDX_DELTA_DOT] = w2 * ddc_dx
    dfdx[IDX_DELTA_DOT, IDX_DELTA] += -w2
    dfdx[IDX_DELTA_DOT, IDX_DELTA_DOT] += -2.0 * pr.zeta_a * pr.omega_a
    dfdp[IDX_DELTA_DOT] = w2 * ddc_dp

    # integrator: x_c_dot = K_A (cmd - a_z) + q + (cmd + g cos gamma)/V
    err = cmd.a_z_cmd - a_z
    dfdx[IDX_XC] = err * dK_dx[0] - k_a * daz_dx
    dfdx[IDX_XC, IDX_Q] += 1.0
    dfdx[IDX_XC, IDX_V] += -(cmd.a_z_cmd + pr.g * cos_g) / (V * V)
    dfdx[IDX_XC, IDX_THETA] += -pr.g * sin_g / V
    dfdx[IDX_XC, IDX_ALPHA] += pr.g * sin_g / V
    dfdp[IDX_XC] = err * dK_dp[0]

    dfdx[IDX_AZREF, IDX_AZREF] = -1.0 / REFERENCE_TIME_CONSTANT

    # running cost partials
    den = 1.0 + abs(cmd.a_z_cmd)
    track = (a_z - a_z_ref) / den
    dLdx = (2.0 * TRACK_WEIGHT * track / den) * daz_dx
    dLdx[IDX_AZREF] += -2.0 * TRACK_WEIGHT * track / den
    fin = 2.0 * FIN_CMD_WEIGHT * delta_c / FIN_CMD_NORM ** 2
    dLdx = dLdx + fin * ddc_dx
    dLdx[IDX_DELTA_DOT] += 2.0 * FIN_RATE_WEIGHT * delta_dot / FIN_RATE_NORM ** 2
    dLdp = fin * ddc_dp

    return f, dfdx, dfdp, dLdx, dLdp


def analytic_provider(params: AeroParams, spec: MlpSpec,
                      cmd: CommandSpec) -> DerivativeProvider:
    """Exact closed-loop partials; terminal cost is zero, regulariser external."""

    def combined(t, x, p):
        _f, dfdx, dfdp, dLdx, dLdp = _closed_loop_partials(params, spec, p, cmd, x)
        return dfdx, dfdp, dLdx, dLdp

    def dfdx(t, x, p):
        return _closed_loop_partials(params, spec, p, cmd, x)[1]

    def dfdp(t, x, p):
        return _closed_loop_partials(params, spec, p, cmd, x)[2]

    def dLdx(t, x, p):
        return _closed_loop_partials(params, spec, p, cmd, x)[3]

    def dLdp(t, x, p):
        return _closed_loop_partials(params, spec, p, cmd, x)[4]

    def dphidx(x):
        return np.zeros(DIM_STATE)

    def dRdp(p):
        return np.zeros(np.asarray(p).size)

    return DerivativeProvider(dfdx, dfdp, dLdx, dLdp, dphidx, dRdp, combined=combined)


def numeric_provider(params: AeroParams, spec: MlpSpec, cmd: CommandSpec,
                     eps: float = 1e-6) -> DerivativeProvider:
    """Central-difference provider over the same closed loop (contract check)."""
    return finite_difference_provider(
        lambda t, x, p: closed_loop_rhs(params, spec, p, cmd, t, x),
        lambda t, x, p: closed_loop_running_cost(params, spec, p, cmd, t, x),
        lambda x: 0.0,
        lambda p: 0.0,
        eps=eps,
    )


def initial_state(h0: float, v0: float) -> np.ndarray:
    """Level launch state: incidence, rates, fin, controller, reference all zero."""
    x = np.zeros(DIM_STATE)
    x[IDX_H] = h0
    x[IDX_V] = v0
    return x


def build_problem(params: AeroParams, spec: MlpSpec, cmd: CommandSpec,
                  h0: float, v0: float, t0: float = 0.0, tf: float = 3.0,
                  analytic: bool = True) -> CtpgProblem:
    """Closed-loop trajectory problem for the sensitivity machinery.

    The rhs used for integration degrades to NaN outside the physical domain
    so the adaptive solver can shrink or abort cleanly instead of unwinding
    through an exception; the standalone operations still raise.
    """

    def guarded_rhs(t, x, p):
        try:
            return closed_loop_rhs(params, spec, p, cmd, t, x)
        except FlightDomainError:
            return np.full(DIM_STATE, np.nan)

    def guarded_cost(t, x, p):
        try:
            return closed_loop_running_cost(params, spec, p, cmd, t, x)
        except FlightDomainError:
            return float("nan")

    provider = analytic_provider(params, spec, cmd) if analytic else \
        numeric_provider(params, spec, cmd)
    return CtpgProblem(
        rhs=guarded_rhs,
        running_cost=guarded_cost,
        terminal_cost=lambda x: 0.0,
        regulariser=lambda p: 0.0,
        derivatives=provider,
        t0=t0,
        tf=tf,
        x0=initial_state(h0, v0),
    )


TRAJECTORY_HEADER = ("t,h,V,alpha,q,theta,delta,delta_dot,x_c,"
                     "a_z,a_z_ref,a_z_cmd,delta_c,K_A,K_I,K_R")


def simulate_trajectory(params: AeroParams, spec: MlpSpec, p: np.ndarray,
                        cmd: CommandSpec, h0: float, v0: float, solver,
                        t0: float = 0.0, tf: float = 3.0):
    """Integrate the closed loop and tabulate the save grid with observables.

    Returns (solution, rows) where each row matches TRAJECTORY_HEADER.
    """
    from .ode import OdeProblem, solve

    problem = build_problem(params, spec, cmd, h0, v0, t0, tf)
    sol = solve(OdeProblem(problem.rhs, t0, tf, problem.x0, np.asarray(p, float)),
                solver)
    rows = []
    for t, x in zip(sol.save_times, sol.save_states):
        a_z, delta_c, gains, _mach = closed_loop_outputs(params, spec, p, cmd, x)
        rows.append((t, x[IDX_H], x[IDX_V], x[IDX_ALPHA], x[IDX_Q], x[IDX_THETA],
                     x[IDX_DELTA], x[IDX_DELTA_DOT], x[IDX_XC],
                     a_z, x[IDX_AZREF], cmd.a_z_cmd, delta_c,
                     gains.K_A, gains.K_I, gains.K_R))
    return sol, rows


def write_trajectory_csv(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
