"""Plant catalog: nonlinear SISO models with known step-input equilibria.

Every plant exposes dynamics f(x, u), a scalar output map h(x), the inverse
DC gain k (steady-state output is u/k), and an analytic equilibrium map for
step inputs. Catalog plants additionally carry a compiled-kernel tag so the
closed-loop simulator can use the C stepping backend.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .errors import PlantValidationError

# Compiled-kernel kinds understood by transhape._ode_cy.
KERNEL_CUBIC = 1
KERNEL_LINEAR = 2
KERNEL_MSD = 3

EQUILIBRIUM_TOL = 1e-9
VALIDATION_INPUTS = (-5.0, -1.0, 0.0, 1.0, 5.0)


@dataclass(frozen=True)
class PlantModel:
    """Immutable state-space plant dx/dt = dynamics(x, u), y = output(x)."""

    dim: int
    dynamics: Callable[[np.ndarray, float], np.ndarray]
    output: Callable[[np.ndarray], float]
    k: float
    equilibrium: Callable[[float], np.ndarray]
    label: str
    kernel: Optional[Tuple[int, Tuple[float, ...]]] = None


@dataclass(frozen=True)
class SaturatedStiffness:
    """Stiffness increment f(z) = z^2 below the threshold, beta^2 at or above.

    As written, the cap applies only for z >= beta, so large negative z still
    produces z^2. symmetric=True switches to min(z^2, beta^2) for sensitivity
    experiments; it is not the default.
    """

    beta: float
    symmetric: bool = False

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def saturated_stiffness_eval(s: SaturatedStiffness, z: float) -> float:
    if s.symmetric:
        return min(z * z, s.beta * s.beta)
    return z * z if z < s.beta else s.beta * s.beta


def validate_plant(plant: PlantModel, inputs: Sequence[float] = VALIDATION_INPUTS):
    """Check equilibrium consistency on a grid of step inputs.

    For each u: dynamics(equilibrium(u), u) ~ 0 and output(equilibrium(u))
    ~ u/k, both within 1e-9. Raises PlantValidationError naming the first
    offending input.
    """
    for u in inputs:
        xe = np.asarray(plant.equilibrium(u), dtype=float)
        if xe.shape != (plant.dim,):
            raise PlantValidationError(
                f"{plant.label}: equilibrium({u}) has shape {xe.shape}, "
                f"expected ({plant.dim},)"
            )
        dx = np.asarray(plant.dynamics(xe, u), dtype=float)
        if dx.shape != (plant.dim,):
            raise PlantValidationError(
                f"{plant.label}: dynamics returned shape {dx.shape}, "
                f"expected ({plant.dim},)"
            )
        if np.max(np.abs(dx)) > EQUILIBRIUM_TOL:
            raise PlantValidationError(
                f"{plant.label}: equilibrium for u={u} is not stationary "
                f"(|f| = {np.max(np.abs(dx)):.3e})"
            )
        y = float(plant.output(xe))
        if abs(y - u / plant.k) > EQUILIBRIUM_TOL:
            raise PlantValidationError(
                f"{plant.label}: output at equilibrium for u={u} is {y}, "
                f"expected u/k = {u / plant.k}"
            )


def cubic_first_order(gain: float) -> PlantModel:
    """dx/dt = -gain * (x - u)^3 with y = x and unit DC gain."""
    if not gain > 0:
        raise ValueError("gain must be positive")

    def dynamics(x, u):
        d = x[0] - u
        return np.array([-gain * d * d * d])

    return PlantModel(
        dim=1,
        dynamics=dynamics,
        output=lambda x: float(x[0]),
        k=1.0,
        equilibrium=lambda u: np.array([float(u)]),
        label=f"cubic(gain={gain:g})",
        kernel=(KERNEL_CUBIC, (gain,)),
    )


def linear_first_order(tau: float) -> PlantModel:
    """dx/dt = (u - x)/tau; the analytic oracle plant for tests."""
    if not tau > 0:
        raise ValueError("tau must be positive")

    def dynamics(x, u):
        return np.array([(u - x[0]) / tau])

    return PlantModel(
        dim=1,
        dynamics=dynamics,
        output=lambda x: float(x[0]),
        k=1.0,
        equilibrium=lambda u: np.array([float(u)]),
        label=f"linear(tau={tau:g})",
        kernel=(KERNEL_LINEAR, (tau,)),
    )


def affine_first_order(
    g: Callable[[float], float],
    b: float,
    a: float,
    check_grid: Optional[Sequence[float]] = None,
) -> PlantModel:
    """dx/dt = -g(x) (x - u) for a gain function bounded by 0 < b <= g <= a.

    The bounds are the caller's claim; they are spot-checked on check_grid
    (default: 101 points on [-10, 10]) and violations raise.
    """
    if not (0 < b <= a):
        raise ValueError("bounds must satisfy 0 < b <= a")
    if check_grid is None:
        check_grid = np.linspace(-10.0, 10.0, 101)
    for x in check_grid:
        gx = float(g(float(x)))
        if not (b - 1e-12 <= gx <= a + 1e-12):
            raise PlantValidationError(
                f"g({x}) = {gx} violates the declared bounds [{b}, {a}]"
            )

    def dynamics(x, u):
        return np.array([-g(float(x[0])) * (x[0] - u)])

    return PlantModel(
        dim=1,
        dynamics=dynamics,
        output=lambda x: float(x[0]),
        k=1.0,
        equilibrium=lambda u: np.array([float(u)]),
        label=f"affine(b={b:g}, a={a:g})",
        kernel=None,
    )


def mass_spring_damper(
    omega_n: float, zeta: float, s: SaturatedStiffness
) -> PlantModel:
    """Damped mass with the saturating nonlinear spring.

    State [x, v]: dv/dt = -2 zeta omega_n v - (1 + f(x-u)) omega_n^2 (x-u),
    y = x, equilibrium [u, 0].
    """
    if not omega_n > 0:
        raise ValueError("omega_n must be positive")
    if not 0 < zeta < 1:
        raise ValueError("zeta must lie in (0, 1)")

    wn2 = omega_n * omega_n

    def dynamics(x, u):
        d = x[0] - u
        f = saturated_stiffness_eval(s, d)
        return np.array([x[1], -2.0 * zeta * omega_n * x[1] - (1.0 + f) * wn2 * d])

    return PlantModel(
        dim=2,
        dynamics=dynamics,
        output=lambda x: float(x[0]),
        k=1.0,
        equilibrium=lambda u: np.array([float(u), 0.0]),
        label=f"msd(omega_n={omega_n:g}, zeta={zeta:g}, beta_sq={s.beta**2:g})",
        kernel=(KERNEL_MSD, (omega_n, zeta, s.beta, 1.0 if s.symmetric else 0.0)),
    )


def custom_plant(
    dim: int,
    dynamics: Callable[[np.ndarray, float], np.ndarray],
    output: Callable[[np.ndarray], float],
    k: float,
    equilibrium: Callable[[float], np.ndarray],
    label: str = "custom",
    validation_inputs: Sequence[float] = VALIDATION_INPUTS,
) -> PlantModel:
    """Wrap user-supplied maps; equilibrium consistency is checked eagerly."""
    if dim < 1:
        raise ValueError("dim must be at least 1")
    if not (math.isfinite(k) and k > 0):
        raise ValueError("k must be positive and finite")
    plant = PlantModel(
        dim=dim,
        dynamics=dynamics,
        output=output,
        k=k,
        equilibrium=equilibrium,
        label=label,
        kernel=None,
    )
    validate_plant(plant, validation_inputs)
    return plant
