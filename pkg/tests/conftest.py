import math

import numpy as np
import pytest

import transhape as ts


@pytest.fixture(scope="session")
def msd_plant():
    return ts.mass_spring_damper(1.0, 0.7, ts.SaturatedStiffness(beta=math.sqrt(20.0)))


@pytest.fixture(scope="session")
def cubic_plant():
    return ts.cubic_first_order(20.0)


@pytest.fixture(scope="session")
def linear_plant():
    return ts.linear_first_order(1.0)


@pytest.fixture(scope="session")
def step_r1():
    return ts.StepSignal(amplitude=1.0)


@pytest.fixture(scope="session")
def step_r5():
    return ts.StepSignal(amplitude=5.0)


@pytest.fixture(scope="session")
def msd_diverged(msd_plant, step_r5):
    """The unstable reference run: lam = 2 > 1.4 diverges."""
    system = ts.close_loop(msd_plant, ts.CompensatorConfig(alpha=1.0, lam=2.0), step_r5)
    traj = ts.simulate(system, ts.SolverConfig(horizon=200.0, step_size=0.05))
    assert traj.diverged
    return traj
