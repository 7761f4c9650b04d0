"""Transient metrics: area decomposition, residual integral, settling, SOC.

The step response is split into A_a (response above the reference), A_b
(reference above the response) and A_c (area common to both). The residual
integral e_r = A_b - A_a is the quantity the compensation pins to
r(k - alpha)/lam at steady state.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .compensator import CompensatorConfig, StepSignal, close_loop, simulate
from .errors import DivergedTrajectoryError
from .integrator import SolverConfig, Trajectory
from .plants import PlantModel

DEFAULT_BAND = 1e-3
TIE_TOL = 1e-12


@dataclass(frozen=True)
class AreaReport:
    """Signed-area split of one settled (or truncated) step response."""

    A_a: float
    A_b: float
    A_c: float
    e_r: float
    horizon_used: float
    settled: bool
    settle_time: Optional[float]
    steady_output: float


@dataclass(frozen=True)
class SocTrace:
    """State of charge of a storage element absorbing the tracking error.

    soc(t) = soc_initial - int(r - y)/capacity: the storage covers the
    shortfall (r - y), so e_r = 0 returns it to its pre-step charge.
    """

    times: np.ndarray
    soc: np.ndarray
    capacity: float
    soc_initial: float


@dataclass(frozen=True)
class Lemma1Record:
    """Comparison of the simulated residual integral with r(k - alpha)/lam."""

    e_r_simulated: float
    e_r_predicted: float
    abs_gap: float
    rel_gap: float
    verdict: str  # "pass" | "fail" | "inconclusive"
    settled: bool
    diverged: bool
    horizon_used: float
    settle_time: Optional[float]


def _require_loop_trajectory(traj: Trajectory):
    if traj.diverged:
        raise DivergedTrajectoryError(
            f"trajectory diverged at t = {traj.divergence_time}",
            divergence_time=traj.divergence_time,
        )
    if traj.errors is None or traj.error_integral is None:
        raise ValueError("trajectory carries no loop columns; simulate() one")


def _signed_area_split(t: np.ndarray, e: np.ndarray):
    """Trapezoid areas of the positive and negative parts of piecewise-linear e.

    Sign changes are split at the interpolated zero crossing so the two parts
    sum exactly to the plain trapezoid integral of e.
    """
    dt = np.diff(t)
    e0 = e[:-1]
    e1 = e[1:]
    pos = np.zeros_like(dt)
    neg = np.zeros_like(dt)

    both_pos = (e0 >= 0) & (e1 >= 0)
    both_neg = (e0 <= 0) & (e1 <= 0)
    seg = 0.5 * (e0 + e1) * dt
    pos[both_pos] += seg[both_pos]
    neg[both_neg] -= seg[both_neg]

    cross_down = (e0 > 0) & (e1 < 0)
    cross_up = (e0 < 0) & (e1 > 0)
    for mask, first_pos in ((cross_down, True), (cross_up, False)):
        if not mask.any():
            continue
        tau = dt[mask] * e0[mask] / (e0[mask] - e1[mask])
        first = 0.5 * np.abs(e0[mask]) * tau
        second = 0.5 * np.abs(e1[mask]) * (dt[mask] - tau)
        if first_pos:
            pos[mask] += first
            neg[mask] += second
        else:
            neg[mask] += first
            pos[mask] += second
    return float(pos.sum()), float(neg.sum())


def area_decomposition(
    traj: Trajectory,
    step: StepSignal,
    tie_tol: float = TIE_TOL,
    band: float = DEFAULT_BAND,
    window: Optional[float] = None,
) -> AreaReport:
    """Split the response into A_a, A_b, A_c over [t_s, horizon].

    Samples with |r - y| below tie_tol * max(1, |r|) are treated as ties and
    contribute to A_c only.
    """
    _require_loop_trajectory(traj)
    t = traj.times
    y = traj.outputs
    r = step.amplitude
    e = r - y
    e = np.where(np.abs(e) < tie_tol * max(1.0, abs(r)), 0.0, e)

    A_b, A_a = _signed_area_split(t, e)
    span = float(t[-1] - t[0])
    A_c = r * span - A_b
    settled, settle_time = settling_detector(traj, step, band=band, window=window)
    return AreaReport(
        A_a=A_a,
        A_b=A_b,
        A_c=A_c,
        e_r=A_b - A_a,
        horizon_used=float(t[-1]),
        settled=settled,
        settle_time=settle_time,
        steady_output=float(y[-1]),
    )


def residual_integral(traj: Trajectory) -> float:
    """Final value of the running integral of e = r - y."""
    _require_loop_trajectory(traj)
    return float(traj.error_integral[-1])


def settling_detector(
    traj: Trajectory,
    step: StepSignal,
    band: float = DEFAULT_BAND,
    window: Optional[float] = None,
):
    """Earliest time after which |e| and the error-integral drift stay small.

    Both conditions are suffix conditions: |e| < band*max(|r|,1) from the
    settle time onward, and the error integral moves by less than
    band*window*max(|r|,1) over any later stretch. A run only counts as
    settled when at least one full window of evidence follows the settle
    time.
    """
    if not 0 < band < 1:
        raise ValueError("band must lie in (0, 1)")
    _require_loop_trajectory(traj)
    t = traj.times
    if window is None:
        window = max(0.05 * (t[-1] - t[0]), 4.0 * (t[1] - t[0]) if len(t) > 1 else 0.0)
    if window <= 0:
        raise ValueError("window must be positive")

    m = max(abs(step.amplitude), 1.0)
    e_ok_level = band * m
    drift_level = band * window * m

    abs_e = np.abs(traj.errors)
    suffix_max_e = np.maximum.accumulate(abs_e[::-1])[::-1]

    ie = traj.error_integral
    suffix_max_ie = np.maximum.accumulate(ie[::-1])[::-1]
    suffix_min_ie = np.minimum.accumulate(ie[::-1])[::-1]
    drift = np.maximum(suffix_max_ie - ie, ie - suffix_min_ie)

    ok = (suffix_max_e < e_ok_level) & (drift < drift_level)
    idx = np.flatnonzero(ok)
    if idx.size == 0:
        return False, None
    settle_time = float(t[idx[0]])
    settled = bool(settle_time <= t[-1] - window)
    return settled, settle_time if settled else None


def verify_lemma1(
    plant: PlantModel,
    cfg: CompensatorConfig,
    step: StepSignal,
    solver: SolverConfig,
    band: float = DEFAULT_BAND,
    window: Optional[float] = None,
    rel_tol: float = 0.01,
    abs_tol: float = 1e-4,
) -> Lemma1Record:
    """Simulate the loop and compare e_r against r(k - alpha)/lam.

    Non-settled (or diverged) runs yield an inconclusive verdict rather than
    a failure, carrying the horizon that was tried.
    """
    if not cfg.lam > 0:
        raise ValueError("verify_lemma1 needs lam > 0; open loop has no prediction")
    traj = simulate(close_loop(plant, cfg, step), solver)
    predicted = step.amplitude * (plant.k - cfg.alpha) / cfg.lam
    if traj.diverged:
        return Lemma1Record(
            e_r_simulated=math.nan,
            e_r_predicted=predicted,
            abs_gap=math.nan,
            rel_gap=math.nan,
            verdict="inconclusive",
            settled=False,
            diverged=True,
            horizon_used=float(traj.times[-1]),
            settle_time=None,
        )
    settled, settle_time = settling_detector(traj, step, band=band, window=window)
    simulated = residual_integral(traj)
    abs_gap = abs(simulated - predicted)
    rel_gap = abs_gap / max(abs(predicted), 1e-12)
    if not settled:
        verdict = "inconclusive"
    elif abs_gap <= abs_tol + rel_tol * abs(predicted):
        verdict = "pass"
    else:
        verdict = "fail"
    return Lemma1Record(
        e_r_simulated=simulated,
        e_r_predicted=predicted,
        abs_gap=abs_gap,
        rel_gap=rel_gap,
        verdict=verdict,
        settled=settled,
        diverged=False,
        horizon_used=float(traj.times[-1]),
        settle_time=settle_time,
    )


def soc_trace(
    traj: Trajectory,
    step: StepSignal,
    capacity: float,
    soc_initial: float,
) -> SocTrace:
    """Normalized storage charge absorbing the tracking shortfall r - y."""
    if not capacity > 0:
        raise ValueError("capacity must be positive")
    _require_loop_trajectory(traj)
    soc = soc_initial - traj.error_integral / capacity
    return SocTrace(
        times=traj.times,
        soc=soc,
        capacity=capacity,
        soc_initial=soc_initial,
    )
