import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import transhape as ts


def decay(t, x):
    return -x


def test_fixed_rk4_matches_exponential():
    cfg = ts.SolverConfig(horizon=1.0, method="rk4", step_size=0.01)
    traj = ts.integrate(decay, [1.0], cfg)
    assert abs(traj.final_state[0] - math.exp(-1.0)) < 1e-6
    assert traj.times[0] == 0.0
    assert traj.times[-1] == 1.0


def test_constant_solution_is_exact():
    cfg = ts.SolverConfig(horizon=5.0, method="rk4", step_size=0.1)
    traj = ts.integrate(lambda t, x: np.zeros_like(x), [3.0], cfg)
    assert np.all(traj.states == 3.0)


@pytest.mark.parametrize("method,step", [("rk4", 1e-3), ("rk45", 1e-3)])
def test_finite_escape_is_flagged_near_t1(method, step):
    # x' = x^2 from 1 escapes at t = 1 (closed form x = 1/(1-t))
    cfg = ts.SolverConfig(horizon=2.0, method=method, step_size=step)
    traj = ts.integrate(lambda t, x: x**2, [1.0], cfg)
    assert traj.diverged
    assert abs(traj.divergence_time - 1.0) < 0.01
    assert np.isfinite(traj.states).all()
    assert traj.times[-1] <= traj.divergence_time


def test_rk4_order_error_ratio():
    errors = []
    for h in (0.1, 0.05, 0.025, 0.0125):
        cfg = ts.SolverConfig(horizon=1.0, method="rk4", step_size=h)
        traj = ts.integrate(decay, [1.0], cfg)
        errors.append(abs(traj.final_state[0] - math.exp(-1.0)))
    for coarse, fine in zip(errors, errors[1:]):
        assert coarse / fine >= 12.0


def test_adaptive_dense_output_accuracy():
    # Interpolated samples carry the cubic-Hermite error, which shrinks with
    # the step size; the step endpoints themselves are tolerance-accurate.
    cfg = ts.SolverConfig(horizon=5.0, step_size=0.1, abs_tol=1e-9, rel_tol=1e-9)
    traj = ts.integrate(decay, [1.0], cfg)
    assert np.allclose(traj.times, np.arange(51) * 0.1, atol=1e-12)
    assert np.max(np.abs(traj.states[:, 0] - np.exp(-traj.times))) < 1e-7
    assert abs(traj.states[-1, 0] - math.exp(-5.0)) < 1e-9

    tight = ts.SolverConfig(horizon=5.0, step_size=0.1, abs_tol=1e-11, rel_tol=1e-11)
    traj = ts.integrate(decay, [1.0], tight)
    assert np.max(np.abs(traj.states[:, 0] - np.exp(-traj.times))) < 1e-8


@pytest.mark.parametrize("plant_name", ["cubic", "linear", "affine", "msd"])
def test_adaptive_and_fixed_endpoints_agree(plant_name, cubic_plant, linear_plant, msd_plant):
    plants = {
        "cubic": cubic_plant,
        "linear": linear_plant,
        "affine": ts.affine_first_order(lambda x: 2.0 + math.sin(x), 1.0, 3.0),
        "msd": msd_plant,
    }
    plant = plants[plant_name]
    step = ts.StepSignal(1.0)
    system = ts.close_loop(plant, ts.CompensatorConfig(alpha=1.0, lam=0.2), step)
    fixed = ts.simulate(
        system, ts.SolverConfig(horizon=5.0, method="rk4", step_size=1e-4)
    )
    adaptive = ts.simulate(
        system, ts.SolverConfig(horizon=5.0, step_size=0.05, abs_tol=1e-9, rel_tol=1e-9)
    )
    scale = np.maximum(np.abs(fixed.final_state), 1e-30)
    rel = np.max(np.abs(fixed.final_state - adaptive.final_state) / scale)
    assert rel < 1e-6


@pytest.mark.parametrize("method", ["rk4", "rk45"])
def test_repeated_calls_are_bit_identical(method, msd_plant):
    system = ts.close_loop(
        msd_plant, ts.CompensatorConfig(alpha=1.0, lam=0.2), ts.StepSignal(5.0)
    )
    cfg = ts.SolverConfig(horizon=10.0, method=method, step_size=0.01)
    a = ts.simulate(system, cfg)
    b = ts.simulate(system, cfg)
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.states, b.states)


def test_trajectory_shape_invariants(msd_diverged):
    for traj in (msd_diverged,):
        assert np.all(np.diff(traj.times) > 0)
        assert traj.states.shape[0] == traj.times.shape[0]
        assert np.isfinite(traj.states).all()


def test_compiled_kernel_matches_callback_path(msd_plant):
    if ts.backend_name() != "c":
        pytest.skip("compiled backend not built")
    system = ts.close_loop(
        msd_plant, ts.CompensatorConfig(alpha=1.0, lam=0.2), ts.StepSignal(5.0)
    )
    assert system.kernel is not None
    pure = replace(system, kernel=None)
    for cfg in (
        ts.SolverConfig(horizon=20.0, method="rk4", step_size=0.01),
        ts.SolverConfig(horizon=20.0, step_size=0.05, abs_tol=1e-10, rel_tol=1e-10),
    ):
        a = ts.simulate(system, cfg)
        b = ts.simulate(pure, cfg)
        assert np.allclose(a.states, b.states, rtol=1e-10, atol=1e-12)


def test_step_budget_error_is_distinct_from_divergence():
    cfg = ts.SolverConfig(horizon=1.0, method="rk4", step_size=1e-4, max_steps=100)
    with pytest.raises(ts.StepBudgetError):
        ts.integrate(decay, [1.0], cfg)
    cfg = ts.SolverConfig(horizon=1.0, step_size=0.01, max_steps=3)
    with pytest.raises(ts.StepBudgetError):
        ts.integrate(lambda t, x: np.cos(10 * t) * x, [1.0], cfg)


def test_nonfinite_initial_conditions_rejected():
    cfg = ts.SolverConfig(horizon=1.0, step_size=0.01)
    with pytest.raises(ValueError):
        ts.integrate(decay, [math.nan], cfg)
    with pytest.raises(ValueError, match="non-finite derivative"):
        ts.integrate(lambda t, x: np.full_like(x, np.inf), [1.0], cfg)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        ts.SolverConfig(horizon=-1.0)
    with pytest.raises(ValueError):
        ts.SolverConfig(horizon=1.0, method="euler")
    with pytest.raises(ValueError):
        ts.SolverConfig(horizon=1.0, method="rk4")  # no step size
    with pytest.raises(ValueError):
        ts.SolverConfig(horizon=1.0, step_size=0.0)
    with pytest.raises(ValueError):
        ts.SolverConfig(horizon=1.0, abs_tol=0.0)
    with pytest.raises(ValueError):
        ts.SolverConfig(horizon=1.0, max_steps=0)


def test_detect_divergence_cases():
    assert not ts.detect_divergence([5.0, 0.0], 5.0, 1e6)
    assert ts.detect_divergence([math.nan, 0.0], 5.0, 1e6)
    assert ts.detect_divergence([2e7, 0.0], 5.0, 1e6)
    assert not ts.detect_divergence([2e5, 0.0], 0.01, 1e6)  # max(1, scale) floor
    with pytest.raises(ValueError):
        ts.detect_divergence([0.0], -1.0, 1e6)


@settings(max_examples=25, deadline=None)
@given(
    scale=st.floats(0.01, 100.0),
    value=st.floats(-1e5, 1e5, allow_nan=False),
)
def test_detect_divergence_threshold_scaling(scale, value):
    # below threshold for the default multiplier, regardless of scale
    assert not ts.detect_divergence([value], scale, 1e6)
    assert ts.detect_divergence([2e6 * max(1.0, scale)], scale, 1e6)
