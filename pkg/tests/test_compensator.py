import math

import numpy as np
import pytest

import transhape as ts


def test_zero_gain_freezes_control(linear_plant):
    system = ts.close_loop(
        linear_plant, ts.CompensatorConfig(alpha=1.0, lam=0.0), ts.StepSignal(2.0)
    )
    traj = ts.simulate(system, ts.SolverConfig(horizon=5.0, step_size=0.01))
    assert np.all(traj.controls == 2.0)


def test_closed_loop_with_zero_gain_equals_open_loop(msd_plant, step_r5):
    closed = ts.close_loop(
        msd_plant, ts.CompensatorConfig(alpha=1.0, lam=0.0), step_r5
    )
    opened = ts.open_loop(msd_plant, step_r5, 5.0)
    cfg = ts.SolverConfig(horizon=20.0, step_size=0.02)
    a = ts.simulate(closed, cfg)
    b = ts.simulate(opened, cfg)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.error_integral, b.error_integral)


def test_initial_control_rate_matches_gain(cubic_plant, step_r1):
    system = ts.close_loop(
        cubic_plant, ts.CompensatorConfig(alpha=1.0, lam=8.0), step_r1
    )
    assert np.array_equal(system.initial_state, [0.0, 1.0])
    rate = system.rhs(0.0, system.initial_state)
    assert rate[1] == 8.0  # u' = lam (r - y) at y = 0


def test_feedforward_scales_initial_control(cubic_plant, step_r1):
    system = ts.close_loop(
        cubic_plant, ts.CompensatorConfig(alpha=2.0, lam=8.0), step_r1
    )
    assert system.initial_state[-1] == 2.0


def test_equilibrium_forces_output_to_reference(msd_plant, step_r5):
    system = ts.close_loop(
        msd_plant, ts.CompensatorConfig(alpha=0.3, lam=0.2), step_r5
    )
    traj = ts.simulate(system, ts.SolverConfig(horizon=120.0, step_size=0.02))
    assert abs(traj.outputs[-1] - 5.0) < 1e-6
    # u' = 0 at the equilibrium, so u converges to k r even with alpha != k
    assert abs(traj.controls[-1] - 5.0) < 1e-6


@pytest.mark.parametrize(
    "plant_key,lam,horizon",
    [
        ("linear", 0.5, 60.0),  # sufficient bound 4b/4 = 1/tau = 1
        ("affine", 0.4, 80.0),  # b = 0.8: bound 0.8
        ("msd", 0.0015, 120.0),  # section-4 bound 0.00173
    ],
)
def test_steady_state_tracking_inside_sufficient_bound(
    plant_key, lam, horizon, linear_plant, msd_plant
):
    plants = {
        "linear": linear_plant,
        "affine": ts.affine_first_order(
            lambda x: 0.8 + 0.1 * (1 + math.sin(x)), 0.8, 1.0
        ),
        "msd": msd_plant,
    }
    plant = plants[plant_key]
    step = ts.StepSignal(1.5)
    system = ts.close_loop(plant, ts.CompensatorConfig(alpha=1.0, lam=lam), step)
    traj = ts.simulate(system, ts.SolverConfig(horizon=horizon, step_size=0.02))
    settled, t_settle = ts.settling_detector(traj, step)
    assert settled
    idx = np.searchsorted(traj.times, t_settle)
    assert abs(traj.outputs[idx] - 1.5) <= 1e-3 * 1.5 + 1e-12
    assert abs(traj.outputs[-1] - 1.5) < 1e-4 * 1.5


def test_control_state_identity_against_quadrature(msd_plant, step_r5):
    # Dual route: int e by trapezoid vs the exact state-based recovery
    system = ts.close_loop(
        msd_plant, ts.CompensatorConfig(alpha=0.5, lam=0.2), step_r5
    )
    traj = ts.simulate(
        system, ts.SolverConfig(horizon=100.0, method="rk4", step_size=0.005)
    )
    quad = np.trapz(traj.errors, traj.times)
    exact = (traj.controls[-1] - 0.5 * 5.0) / 0.2
    assert traj.error_integral[-1] == pytest.approx(exact)
    assert abs(quad - exact) < 1e-6
    # Lemma contract: u(T) -> k r and e_r -> r(k - alpha)/lam
    assert abs(traj.controls[-1] - 5.0) < 1e-6
    assert abs(exact - 5.0 * (1.0 - 0.5) / 0.2) < 1e-5


def test_matched_feedforward_zeroes_residual(msd_plant, step_r5):
    system = ts.close_loop(
        msd_plant, ts.CompensatorConfig(alpha=1.0, lam=0.2), step_r5
    )
    traj = ts.simulate(system, ts.SolverConfig(horizon=80.0, step_size=0.02))
    settled, t_settle = ts.settling_detector(traj, step_r5)
    assert settled
    assert abs(traj.error_integral[-1]) < 1e-3 * 5.0 * t_settle


def test_linear_loop_matches_analytic_solution(linear_plant, step_r1):
    # tau = 1, lam = 0.5, alpha = 0.5: y(t) = 1 - exp(-t/2) cos(t/2)
    system = ts.close_loop(
        linear_plant, ts.CompensatorConfig(alpha=0.5, lam=0.5), step_r1
    )
    traj = ts.simulate(
        system,
        ts.SolverConfig(horizon=20.0, step_size=0.2, abs_tol=1e-12, rel_tol=1e-12),
    )
    oracle = 1.0 - np.exp(-traj.times / 2.0) * np.cos(traj.times / 2.0)
    assert len(traj) == 101
    assert np.max(np.abs(traj.outputs - oracle)) < 1e-6


def test_nonzero_onset_shifts_the_grid(linear_plant):
    step = ts.StepSignal(1.0, onset=2.5)
    system = ts.close_loop(linear_plant, ts.CompensatorConfig(1.0, 0.5), step)
    traj = ts.simulate(system, ts.SolverConfig(horizon=4.0, step_size=0.01))
    assert traj.times[0] == 2.5
    assert traj.error_integral[0] == 0.0
    assert traj.times[-1] == pytest.approx(6.5)


def test_config_validation():
    with pytest.raises(ValueError):
        ts.CompensatorConfig(alpha=-0.1, lam=0.0)
    with pytest.raises(ValueError):
        ts.CompensatorConfig(alpha=0.0, lam=-1.0)
    with pytest.raises(ValueError):
        ts.StepSignal(amplitude=math.inf)
    with pytest.raises(ValueError):
        ts.StepSignal(amplitude=1.0, onset=-1.0)


def test_initial_state_shape_checked(msd_plant, step_r5):
    with pytest.raises(ValueError):
        ts.close_loop(
            msd_plant,
            ts.CompensatorConfig(alpha=1.0, lam=0.1, initial_state=np.zeros(3)),
            step_r5,
        )


def test_pre_step_operating_point(linear_plant):
    # start from a settled nonzero operating point
    cfg = ts.CompensatorConfig(alpha=1.0, lam=0.5, initial_state=np.array([0.4]))
    system = ts.close_loop(linear_plant, cfg, ts.StepSignal(1.0))
    assert system.initial_state[0] == 0.4
    traj = ts.simulate(system, ts.SolverConfig(horizon=40.0, step_size=0.02))
    assert abs(traj.outputs[-1] - 1.0) < 1e-6
