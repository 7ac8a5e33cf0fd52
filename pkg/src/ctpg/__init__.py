"""Continuous-time policy gradients for structured feedback controllers.

Computes exact cost gradients for trajectory optimisation by adjoint
sensitivity analysis over adaptive Runge-Kutta solutions, and uses them to
train the neural-parametrised gains of a fixed-structure autopilot on a
nonlinear pitch-plane airframe.
"""

from .ode import (
    OdeProblem,
    OdeSolution,
    SolverConfig,
    SolverStatus,
    SpanError,
    interpolate,
    solve_adaptive,
    solve_fixed_euler,
)
from .sensitivity import (
    CtpgProblem,
    DerivativeProvider,
    GradientResult,
    backward_pass,
    ctpg_cost_and_gradient,
    finite_difference_gradient,
    finite_difference_provider,
    forward_pass,
)
from .policy import (
    GainScaling,
    GainVector,
    MlpSpec,
    init_params,
    load_snapshot,
    mlp_forward,
    mlp_input_jacobian,
    mlp_param_jacobian,
    param_count,
    save_snapshot,
)
from .airframe import (
    AeroParams,
    CommandSpec,
    FlightDomainError,
    PlantState,
    aero_coefficients,
    atmosphere,
    build_problem,
    closed_loop_rhs,
    plant_derivatives,
    reference_model_rhs,
    running_cost,
    simulate_trajectory,
    three_loop_autopilot,
)
from .trainer import (
    AdamConfig,
    BfgsConfig,
    ConvergenceConfig,
    EnsembleGrid,
    TrainConfig,
    TrainResult,
    adam_step,
    bfgs_step,
    ensemble_cost_gradient,
    train,
)

__version__ = "0.1.0"
