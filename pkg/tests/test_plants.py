import math

import numpy as np
import pytest

import transhape as ts
from transhape.plants import VALIDATION_INPUTS


class TestCubic:
    def test_reference_slope(self, cubic_plant):
        assert cubic_plant.dynamics(np.array([2.0]), 1.0)[0] == -20.0

    def test_equilibrium_rate_is_zero(self, cubic_plant):
        assert cubic_plant.dynamics(np.array([1.3]), 1.3)[0] == 0.0

    def test_odd_symmetry(self, cubic_plant):
        assert cubic_plant.dynamics(np.array([0.0]), 1.0)[0] == 20.0

    def test_rejects_nonpositive_gain(self):
        with pytest.raises(ValueError):
            ts.cubic_first_order(0.0)
        with pytest.raises(ValueError):
            ts.cubic_first_order(-3.0)

    def test_open_loop_step_follows_closed_form(self, cubic_plant):
        # eps' = -gain eps^3 from eps0 = 1: eps(t) = 1/sqrt(1 + 2 gain t)
        gain = 20.0
        horizon = (1.0 / 0.95e-3**2 - 1.0) / (2 * gain)  # |eps| reaches 0.95e-3
        system = ts.open_loop(cubic_plant, ts.StepSignal(1.0), 1.0)
        traj = ts.simulate(
            system,
            ts.SolverConfig(horizon=horizon, step_size=horizon / 2000,
                            abs_tol=1e-12, rel_tol=1e-10),
        )
        eps = 1.0 - traj.outputs
        closed_form = 1.0 / np.sqrt(1.0 + 2 * gain * traj.times)
        assert abs(eps[-1]) < 1e-3
        assert np.max(np.abs(eps - closed_form)) < 1e-6


class TestAffine:
    def test_direct_evaluation(self):
        plant = ts.affine_first_order(lambda x: 2.0 + math.sin(x), 1.0, 3.0)
        got = plant.dynamics(np.array([1.0]), 0.0)[0]
        assert got == pytest.approx(-(2.0 + math.sin(1.0)), abs=1e-15)

    def test_equilibrium_rate_is_zero(self):
        plant = ts.affine_first_order(lambda x: 2.0 + math.sin(x), 1.0, 3.0)
        assert plant.dynamics(np.array([0.7]), 0.7)[0] == 0.0

    def test_constant_gain_specializes_to_linear(self, linear_plant):
        plant = ts.affine_first_order(lambda x: 1.0, 1.0, 1.0)
        for x, u in ((0.0, 1.0), (2.0, -1.0), (0.3, 0.3)):
            assert plant.dynamics(np.array([x]), u)[0] == pytest.approx(
                linear_plant.dynamics(np.array([x]), u)[0]
            )

    def test_bound_violations_rejected(self):
        with pytest.raises(ts.PlantValidationError):
            ts.affine_first_order(lambda x: math.sin(x), 0.5, 1.0)
        with pytest.raises(ValueError):
            ts.affine_first_order(lambda x: 1.0, 0.0, 1.0)

    def test_open_loop_converges_within_ten_time_constants(self):
        b = 0.5
        plant = ts.affine_first_order(
            lambda x: b + 0.1 * (1.0 + math.cos(x)), b, b + 0.2
        )
        traj = ts.simulate(
            ts.open_loop(plant, ts.StepSignal(2.0), 2.0),
            ts.SolverConfig(horizon=10.0 / b, step_size=0.01),
        )
        assert abs(traj.outputs[-1] - 2.0) < 1e-3 * 2.0


class TestSaturatedStiffness:
    def test_reference_values(self):
        s = ts.SaturatedStiffness(beta=math.sqrt(20.0))
        assert ts.saturated_stiffness_eval(s, 0.0) == 0.0
        assert ts.saturated_stiffness_eval(s, math.sqrt(20.0)) == pytest.approx(20.0)
        assert ts.saturated_stiffness_eval(s, 10.0) == pytest.approx(20.0)

    def test_continuous_at_threshold(self):
        s = ts.SaturatedStiffness(beta=2.0)
        below = ts.saturated_stiffness_eval(s, 2.0 - 1e-9)
        at = ts.saturated_stiffness_eval(s, 2.0)
        assert abs(below - at) < 1e-8

    def test_negative_side_is_unbounded_as_written(self):
        s = ts.SaturatedStiffness(beta=2.0)
        assert ts.saturated_stiffness_eval(s, -10.0) == 100.0

    def test_symmetric_variant_caps_both_sides(self):
        s = ts.SaturatedStiffness(beta=2.0, symmetric=True)
        assert ts.saturated_stiffness_eval(s, -10.0) == 4.0
        assert ts.saturated_stiffness_eval(s, 1.0) == 1.0

    def test_vanishes_with_small_beta(self):
        s = ts.SaturatedStiffness(beta=1e-6)
        for z in (0.0, 1e-7, 0.5, 3.0):
            assert ts.saturated_stiffness_eval(s, z) <= 1e-12


class TestMassSpringDamper:
    def test_equilibrium_acceleration_zero(self, msd_plant):
        assert np.all(msd_plant.dynamics(np.array([2.0, 0.0]), 2.0) == 0.0)

    def test_unsaturated_acceleration(self):
        plant = ts.mass_spring_damper(1.0, 0.7, ts.SaturatedStiffness(math.sqrt(20.0)))
        dx = plant.dynamics(np.array([1.0, 0.0]), 0.0)
        assert dx[0] == 0.0
        assert dx[1] == pytest.approx(-2.0)

    def test_saturated_acceleration(self):
        plant = ts.mass_spring_damper(1.0, 0.7, ts.SaturatedStiffness(math.sqrt(20.0)))
        dx = plant.dynamics(np.array([10.0, 0.0]), 0.0)
        assert dx[1] == pytest.approx(-210.0)

    def test_parameter_validation(self):
        s = ts.SaturatedStiffness(1.0)
        with pytest.raises(ValueError):
            ts.mass_spring_damper(0.0, 0.7, s)
        with pytest.raises(ValueError):
            ts.mass_spring_damper(1.0, 1.0, s)
        with pytest.raises(ValueError):
            ts.SaturatedStiffness(0.0)


class TestLinear:
    def test_slope(self, linear_plant):
        assert linear_plant.dynamics(np.array([0.0]), 1.0)[0] == 1.0

    def test_open_loop_closed_form(self, linear_plant):
        traj = ts.simulate(
            ts.open_loop(linear_plant, ts.StepSignal(1.0), 1.0),
            ts.SolverConfig(horizon=8.0, method="rk4", step_size=0.001),
        )
        expected = 1.0 - np.exp(-traj.times)
        assert np.max(np.abs(traj.outputs - expected)) < 1e-9

    def test_open_loop_error_area_is_r_tau(self, linear_plant):
        traj = ts.simulate(
            ts.open_loop(linear_plant, ts.StepSignal(1.0), 1.0),
            ts.SolverConfig(horizon=30.0, method="rk4", step_size=0.005),
        )
        assert abs(traj.error_integral[-1] - 1.0) < 1e-4

    def test_rejects_nonpositive_tau(self):
        with pytest.raises(ValueError):
            ts.linear_first_order(-1.0)


def test_catalog_equilibria_are_stationary(cubic_plant, linear_plant, msd_plant):
    affine = ts.affine_first_order(lambda x: 2.0 + math.sin(x), 1.0, 3.0)
    for plant in (cubic_plant, linear_plant, msd_plant, affine):
        ts.validate_plant(plant, VALIDATION_INPUTS)
        for u in VALIDATION_INPUTS:
            rate = plant.dynamics(plant.equilibrium(u), u)
            assert np.max(np.abs(rate)) < 1e-9


class TestCustomPlant:
    def test_wrapping_cubic_reproduces_it(self, cubic_plant):
        wrapped = ts.custom_plant(
            dim=1,
            dynamics=cubic_plant.dynamics,
            output=cubic_plant.output,
            k=1.0,
            equilibrium=cubic_plant.equilibrium,
            label="wrapped-cubic",
        )
        for x, u in ((0.0, 1.0), (2.0, 1.0), (-3.0, 0.5)):
            a = wrapped.dynamics(np.array([x]), u)[0]
            b = cubic_plant.dynamics(np.array([x]), u)[0]
            assert a == b

    def test_inconsistent_output_rejected(self):
        with pytest.raises(ts.PlantValidationError, match="u=1.0"):
            ts.custom_plant(
                dim=1,
                dynamics=lambda x, u: np.array([u - x[0]]),
                output=lambda x: 2.0 * x[0],  # not u/k at equilibrium
                k=1.0,
                equilibrium=lambda u: np.array([u]),
                validation_inputs=(0.0, 1.0),
            )

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ts.PlantValidationError):
            ts.custom_plant(
                dim=2,
                dynamics=lambda x, u: np.array([u - x[0]]),
                output=lambda x: x[0],
                k=1.0,
                equilibrium=lambda u: np.array([u, 0.0]),
            )

    def test_nonunit_dc_gain_supported(self):
        # y = x/2 with equilibrium x = u: k = 2
        plant = ts.custom_plant(
            dim=1,
            dynamics=lambda x, u: np.array([u - x[0]]),
            output=lambda x: 0.5 * x[0],
            k=2.0,
            equilibrium=lambda u: np.array([u]),
            label="half-gain",
        )
        assert plant.k == 2.0
