"""Transient step-response shaping for nonlinear SISO systems.

Simulates plants under combined feedforward + integral compensation,
decomposes the transient into the areas that define the integral constraint,
and computes sufficient, linearized and empirical bounds on the integral
gain.
"""

from ._backend import backend_name
from .compensator import (
    CompensatorConfig,
    LoopSystem,
    StepSignal,
    close_loop,
    open_loop,
    simulate,
)
from .errors import (
    DivergedTrajectoryError,
    PlantValidationError,
    StepBudgetError,
    TranshapeError,
)
from .integrator import (
    ADAPTIVE_RK45,
    FIXED_RK4,
    SolverConfig,
    Trajectory,
    detect_divergence,
    integrate,
)
from .metrics import (
    AreaReport,
    Lemma1Record,
    SocTrace,
    area_decomposition,
    residual_integral,
    settling_detector,
    soc_trace,
    verify_lemma1,
)
from .plants import (
    PlantModel,
    SaturatedStiffness,
    affine_first_order,
    cubic_first_order,
    custom_plant,
    linear_first_order,
    mass_spring_damper,
    saturated_stiffness_eval,
    validate_plant,
)
from .stability import (
    BoundaryBracket,
    ClassKPair,
    LyapunovConstants,
    SigmaBound,
    StabilityReport,
    affine_constants,
    classify_gain,
    default_sigma_grid,
    empirical_lambda_boundary,
    lambda_bound_exponential,
    lambda_bound_higher_order,
    msd_constants,
    msd_linearized_lambda_max,
    routh_hurwitz_cubic,
    sigma_bound,
)

__version__ = "0.1.0"

__all__ = [
    "ADAPTIVE_RK45",
    "AreaReport",
    "BoundaryBracket",
    "ClassKPair",
    "CompensatorConfig",
    "DivergedTrajectoryError",
    "FIXED_RK4",
    "Lemma1Record",
    "LoopSystem",
    "LyapunovConstants",
    "PlantModel",
    "PlantValidationError",
    "SaturatedStiffness",
    "SigmaBound",
    "SocTrace",
    "SolverConfig",
    "StabilityReport",
    "StepBudgetError",
    "StepSignal",
    "Trajectory",
    "TranshapeError",
    "affine_constants",
    "affine_first_order",
    "area_decomposition",
    "backend_name",
    "classify_gain",
    "close_loop",
    "cubic_first_order",
    "custom_plant",
    "default_sigma_grid",
    "detect_divergence",
    "empirical_lambda_boundary",
    "integrate",
    "lambda_bound_exponential",
    "lambda_bound_higher_order",
    "linear_first_order",
    "mass_spring_damper",
    "msd_constants",
    "msd_linearized_lambda_max",
    "open_loop",
    "residual_integral",
    "routh_hurwitz_cubic",
    "saturated_stiffness_eval",
    "settling_detector",
    "sigma_bound",
    "simulate",
    "soc_trace",
    "validate_plant",
    "verify_lemma1",
]
