#!/usr/bin/env python3
"""Compare the compiled stepping kernels against the pure-Python fallback.

The two paths implement the same algorithms; the compiled one is used
whenever a catalog loop is simulated and the extension imported. Stripping
the kernel tag from a loop forces the pure-Python path, which is what this
script times.
"""

import argparse
import math
import time
from dataclasses import replace

import numpy as np

import transhape as ts


def time_run(system, solver, repeats):
    best = math.inf
    traj = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        traj = ts.simulate(system, solver)
        best = min(best, time.perf_counter() - t0)
    return best, traj


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--horizon", type=float, default=400.0)
    args = parser.parse_args()

    plant = ts.mass_spring_damper(1.0, 0.7, ts.SaturatedStiffness(beta=math.sqrt(20)))
    system = ts.close_loop(
        plant, ts.CompensatorConfig(alpha=1.0, lam=0.2), ts.StepSignal(5.0)
    )
    if system.kernel is None or ts.backend_name() != "c":
        raise SystemExit(
            "compiled backend unavailable; build the extension before benchmarking"
        )
    pure_system = replace(system, kernel=None)

    cases = [
        ("rk45 adaptive", ts.SolverConfig(
            horizon=args.horizon, step_size=0.05, abs_tol=1e-10, rel_tol=1e-10)),
        ("rk4 fixed h=1e-3", ts.SolverConfig(
            horizon=args.horizon, method="rk4", step_size=1e-3)),
    ]
    print(f"mass-spring-damper closed loop, horizon {args.horizon:g} s, "
          f"best of {args.repeats}")
    print(f"{'case':<20} {'compiled':>12} {'pure':>12} {'speedup':>9}  agreement")
    for name, solver in cases:
        t_c, traj_c = time_run(system, solver, args.repeats)
        t_py, traj_py = time_run(pure_system, solver, args.repeats)
        gap = float(np.max(np.abs(traj_c.states - traj_py.states)))
        print(f"{name:<20} {t_c * 1e3:>10.2f}ms {t_py * 1e3:>10.2f}ms "
              f"{t_py / t_c:>8.1f}x  max|dz|={gap:.2e}")


if __name__ == "__main__":
    main()
