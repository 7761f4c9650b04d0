"""Deterministic ODE integration with dense output and divergence detection.

Two solver modes share one result type: fixed-step classical RK4 (the
integration grid is the reporting grid) and adaptive Dormand-Prince 5(4)
with PI step control, interpolated onto a uniform reporting grid by cubic
Hermite polynomials. Divergence (non-finite state or inf-norm beyond a
scaled threshold) truncates the trajectory instead of raising.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _ode_py
from ._backend import BACKEND, compiled
from .errors import StepBudgetError  # noqa: F401  (re-exported)

FIXED_RK4 = "rk4"
ADAPTIVE_RK45 = "rk45"

DEFAULT_DIVERGENCE_THRESHOLD = 1e6


@dataclass(frozen=True)
class SolverConfig:
    """Integration settings.

    step_size is the RK4 step in fixed mode and the uniform reporting-grid
    spacing in adaptive mode (default horizon/2000 when omitted there).
    t_start and reference_scale exist so closed-loop runs can anchor the
    grid at the step onset and scale the divergence test by |r|.
    """

    horizon: float
    method: str = ADAPTIVE_RK45
    step_size: Optional[float] = None
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD
    max_steps: int = 10_000_000
    t_start: float = 0.0
    reference_scale: float = 1.0

    def __post_init__(self):
        if self.method not in (FIXED_RK4, ADAPTIVE_RK45):
            raise ValueError(f"unknown method {self.method!r}")
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError("horizon must be positive and finite")
        if self.method == FIXED_RK4 and self.step_size is None:
            raise ValueError("fixed-step mode requires step_size")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("abs_tol and rel_tol must be positive")
        if self.divergence_threshold <= 0:
            raise ValueError("divergence_threshold must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")

    @property
    def reporting_dt(self) -> float:
        if self.step_size is not None:
            return self.step_size
        return self.horizon / 2000.0


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution of an (augmented) system on [t_start, t_start+horizon].

    The loop columns (controls, outputs, errors, error_integral) are None for
    raw vector-field integrations and filled by the compensator layer.
    """

    times: np.ndarray
    states: np.ndarray
    diverged: bool = False
    divergence_time: Optional[float] = None
    steps_taken: int = 0
    rejected_steps: int = 0
    controls: Optional[np.ndarray] = None
    outputs: Optional[np.ndarray] = None
    errors: Optional[np.ndarray] = None
    error_integral: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.times.ndim != 1 or self.states.ndim != 2:
            raise ValueError("times must be 1-D and states 2-D")
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("times and states must have equal length")
        for name in ("controls", "outputs", "errors", "error_integral"):
            arr = getattr(self, name)
            if arr is not None and arr.shape[0] != self.times.shape[0]:
                raise ValueError(f"{name} length does not match times")

    def __len__(self):
        return self.times.shape[0]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def detect_divergence(state, reference_scale: float, threshold: float) -> bool:
    """True iff state has a non-finite entry or exceeds the scaled threshold.

    The threshold applies to the inf-norm relative to max(1, reference_scale).
    """
    if reference_scale <= 0:
        raise ValueError("reference_scale must be positive")
    state = np.asarray(state, dtype=float)
    if not np.isfinite(state).all():
        return True
    return float(np.max(np.abs(state))) > threshold * max(1.0, reference_scale)


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    x0,
    cfg: SolverConfig,
    kernel=None,
) -> Trajectory:
    """Integrate dx/dt = rhs(t, x) from x0 over [t_start, t_start + horizon].

    kernel optionally names a compiled right-hand side (kind, params)
    equivalent to rhs; it is used when the C backend is available. Results
    are deterministic: identical inputs give bit-identical trajectories.
    """
    x0 = np.ascontiguousarray(x0, dtype=float)
    if x0.ndim == 0:
        x0 = x0.reshape(1)
    if x0.ndim != 1:
        raise ValueError("x0 must be a vector")
    if not np.isfinite(x0).all():
        raise ValueError("initial state must be finite")
    d0 = np.asarray(rhs(cfg.t_start, x0), dtype=float)
    if d0.shape != x0.shape:
        raise ValueError(
            f"rhs returned shape {d0.shape}, expected {x0.shape}"
        )
    if not np.isfinite(d0).all():
        raise ValueError("non-finite derivative at the initial state")

    use_compiled = kernel is not None and compiled is not None
    if cfg.method == FIXED_RK4:
        if use_compiled:
            out = compiled.run_fixed(
                kernel[0],
                np.asarray(kernel[1], dtype=float),
                x0,
                cfg.t_start,
                cfg.horizon,
                cfg.step_size,
                cfg.divergence_threshold,
                cfg.reference_scale,
                cfg.max_steps,
            )
        else:
            out = _ode_py.run_fixed(
                rhs,
                x0,
                cfg.t_start,
                cfg.horizon,
                cfg.step_size,
                cfg.divergence_threshold,
                cfg.reference_scale,
                cfg.max_steps,
            )
    else:
        if use_compiled:
            out = compiled.run_adaptive(
                kernel[0],
                np.asarray(kernel[1], dtype=float),
                x0,
                cfg.t_start,
                cfg.horizon,
                cfg.reporting_dt,
                cfg.abs_tol,
                cfg.rel_tol,
                cfg.divergence_threshold,
                cfg.reference_scale,
                cfg.max_steps,
            )
        else:
            out = _ode_py.run_adaptive(
                rhs,
                x0,
                cfg.t_start,
                cfg.horizon,
                cfg.reporting_dt,
                cfg.abs_tol,
                cfg.rel_tol,
                cfg.divergence_threshold,
                cfg.reference_scale,
                cfg.max_steps,
            )
    times, states, diverged, t_div, steps, rejected = out
    return Trajectory(
        times=times,
        states=states,
        diverged=diverged,
        divergence_time=t_div,
        steps_taken=steps,
        rejected_steps=rejected,
    )
