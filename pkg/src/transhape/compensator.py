"""Closed-loop construction: feedforward plus integral action around a plant.

The control input u = alpha*r + lam * int(e) is carried as the last
augmented state with du/dt = lam*(r - y) and u(t_s) = alpha*r, so the
running error integral is recovered exactly as (u - alpha*r)/lam when
lam > 0 and by trapezoid quadrature in the open-loop case.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .integrator import SolverConfig, Trajectory, integrate
from .plants import PlantModel


@dataclass(frozen=True)
class StepSignal:
    """Reference that jumps from 0 to amplitude at time onset."""

    amplitude: float
    onset: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        if self.onset < 0:
            raise ValueError("onset must be nonnegative")


@dataclass(frozen=True)
class CompensatorConfig:
    """Feedforward gain alpha and integral gain lam (lam = 0 is open loop)."""

    alpha: float
    lam: float
    initial_state: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError("alpha must be finite and nonnegative")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lam must be finite and nonnegative")


@dataclass(frozen=True)
class LoopSystem:
    """Augmented vector field [x; u] ready for the integrator."""

    plant: PlantModel
    step: StepSignal
    alpha: float
    lam: float
    initial_state: np.ndarray  # augmented, length plant.dim + 1
    kernel: Optional[tuple] = None

    @property
    def rhs(self):
        plant = self.plant
        lam = self.lam
        r = self.step.amplitude
        n = plant.dim

        def field(t, z):
            x = z[:n]
            u = z[n]
            dx = plant.dynamics(x, u)
            du = lam * (r - plant.output(x))
            return np.append(dx, du)

        return field


def close_loop(
    plant: PlantModel, cfg: CompensatorConfig, step: StepSignal
) -> LoopSystem:
    """Augment the plant with du/dt = lam*(r - y), u(t_s) = alpha*r."""
    if cfg.initial_state is None:
        x0 = np.zeros(plant.dim)
    else:
        x0 = np.asarray(cfg.initial_state, dtype=float)
        if x0.shape != (plant.dim,):
            raise ValueError(
                f"initial_state has shape {x0.shape}, expected ({plant.dim},)"
            )
    u0 = cfg.alpha * step.amplitude
    z0 = np.append(x0, u0)
    kernel = None
    if plant.kernel is not None:
        kind, params = plant.kernel
        kernel = (kind, (cfg.lam, step.amplitude) + tuple(params))
    return LoopSystem(
        plant=plant,
        step=step,
        alpha=cfg.alpha,
        lam=cfg.lam,
        initial_state=z0,
        kernel=kernel,
    )


def open_loop(plant: PlantModel, step: StepSignal, u_level: float) -> LoopSystem:
    """Constant-input configuration sharing the closed-loop state layout."""
    r = step.amplitude
    alpha = u_level / r if r != 0 else 0.0
    if r == 0 and u_level != 0:
        raise ValueError("u_level must be 0 when the step amplitude is 0")
    cfg = CompensatorConfig(alpha=alpha, lam=0.0)
    return close_loop(plant, cfg, step)


def simulate(system: LoopSystem, solver: SolverConfig) -> Trajectory:
    """Integrate the loop and attach the u, y, e and running-integral columns.

    The grid starts at the step onset and the divergence test is scaled by
    |r| regardless of what the caller left in the solver config.
    """
    r = system.step.amplitude
    solver = replace(
        solver,
        t_start=system.step.onset,
        reference_scale=max(abs(r), 1.0),
    )
    traj = integrate(system.rhs, system.initial_state, solver, kernel=system.kernel)
    n = system.plant.dim
    controls = traj.states[:, n].copy()
    outputs = np.array([system.plant.output(s[:n]) for s in traj.states])
    errors = r - outputs
    if system.lam > 0:
        error_integral = (controls - system.alpha * r) / system.lam
    else:
        dt = np.diff(traj.times)
        increments = 0.5 * (errors[1:] + errors[:-1]) * dt
        error_integral = np.concatenate(([0.0], np.cumsum(increments)))
    return replace(
        traj,
        controls=controls,
        outputs=outputs,
        errors=errors,
        error_integral=error_integral,
    )
