"""Pure-Python stepping kernels.

Reference implementation of the fixed-step RK4 and adaptive Dormand-Prince
5(4) loops. ``transhape._ode_cy`` compiles the same algorithms for the
catalog right-hand sides; this module is the fallback and the only path for
arbitrary Python callables.

Both kernels report on a uniform grid: RK4 samples its own steps, the
adaptive kernel interpolates accepted steps onto the grid with cubic Hermite
polynomials, so downstream quadrature never sees solver-dependent spacing.
"""

import math

import numpy as np

from .errors import StepBudgetError

# Dormand-Prince 5(4) tableau. The fifth-order solution is propagated; E is
# the difference between the fifth- and fourth-order weights.
DP_C = (0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0)
DP_A = (
    (0.2,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
DP_B = DP_A[5]
DP_E = (
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
# PI controller exponents for the 5(4) pair.
PI_ALPHA = 0.7 / 5.0
PI_BETA = 0.4 / 5.0


def _exceeds(y, threshold, ref_scale):
    """Divergence test: non-finite entry or inf-norm beyond the threshold."""
    if not np.isfinite(y).all():
        return True
    return float(np.max(np.abs(y))) > threshold * max(1.0, ref_scale)


def run_fixed(rhs, x0, t0, horizon, h, threshold, ref_scale, max_steps):
    """Classical RK4 with step h over [t0, t0 + horizon].

    Returns (times, states, diverged, divergence_time, steps, rejected).
    """
    n_full = int(math.floor(horizon / h + 1e-12))
    rem = horizon - n_full * h
    if rem <= 1e-12 * max(h, horizon):
        rem = 0.0
    n_steps = n_full + (1 if rem else 0)
    if n_steps > max_steps:
        raise StepBudgetError(
            f"fixed-step run needs {n_steps} steps, budget is {max_steps}"
        )

    dim = x0.shape[0]
    times = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, dim))
    times[0] = t0
    states[0] = x0

    y = x0.copy()
    filled = 1
    diverged = False
    t_div = None
    for i in range(n_steps):
        if i < n_full:
            hi = h
            t = t0 + i * h
            t_new = t0 + (i + 1) * h
        else:
            hi = rem
            t = t0 + n_full * h
            t_new = t0 + horizon
        if i == n_steps - 1:
            t_new = t0 + horizon
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * hi, y + (0.5 * hi) * k1)
        k3 = rhs(t + 0.5 * hi, y + (0.5 * hi) * k2)
        k4 = rhs(t + hi, y + hi * k3)
        y = y + (hi / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(y).all():
            diverged = True
            t_div = t_new
            break
        times[filled] = t_new
        states[filled] = y
        filled += 1
        if _exceeds(y, threshold, ref_scale):
            diverged = True
            t_div = t_new
            break
    return times[:filled], states[:filled], diverged, t_div, n_steps, 0


def _error_norm(err, y0, y1, abs_tol, rel_tol):
    scale = abs_tol + rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(rhs, t0, y0, f0, horizon, abs_tol, rel_tol):
    scale = abs_tol + rel_tol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((y0 / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = rhs(t0 + h0, y1)
    d2 = float(np.sqrt(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, horizon)


def run_adaptive(
    rhs, x0, t0, horizon, dt_report, abs_tol, rel_tol, threshold, ref_scale, max_steps
):
    """Dormand-Prince 5(4) with PI step control, reported on a uniform grid.

    Returns (times, states, diverged, divergence_time, accepted, rejected).
    """
    n_report = max(1, int(math.floor(horizon / dt_report + 0.5)))
    dt = horizon / n_report
    t_end = t0 + horizon
    dim = x0.shape[0]

    times = t0 + dt * np.arange(n_report + 1)
    times[-1] = t_end
    states = np.empty((n_report + 1, dim))
    states[0] = x0

    t = t0
    y = x0.copy()
    f0 = rhs(t0, y)
    h = _initial_step(rhs, t0, y, f0, horizon, abs_tol, rel_tol)
    err_prev = 1.0
    accepted = 0
    rejected = 0
    next_report = 1
    diverged = False
    t_div = None
    k = [None] * 7

    while t < t_end:
        if accepted + rejected >= max_steps:
            raise StepBudgetError(
                f"adaptive run exceeded the step budget of {max_steps}"
            )
        h = min(h, t_end - t)
        k[0] = f0
        for s in range(5):
            a = DP_A[s]
            ys = y + h * sum(a[j] * k[j] for j in range(s + 1))
            k[s + 1] = rhs(t + DP_C[s] * h, ys)
        y_new = y + h * (
            DP_B[0] * k[0]
            + DP_B[2] * k[2]
            + DP_B[3] * k[3]
            + DP_B[4] * k[4]
            + DP_B[5] * k[5]
        )
        t_new = t + h
        k[6] = rhs(t_new, y_new)
        err_vec = h * (
            DP_E[0] * k[0]
            + DP_E[2] * k[2]
            + DP_E[3] * k[3]
            + DP_E[4] * k[4]
            + DP_E[5] * k[5]
            + DP_E[6] * k[6]
        )
        err = (
            _error_norm(err_vec, y, y_new, abs_tol, rel_tol)
            if np.isfinite(y_new).all()
            else math.inf
        )

        if not math.isfinite(err):
            rejected += 1
            h *= 0.5
            if h < 1e-14 * max(1.0, abs(t)):
                # State left the representable range faster than the
                # controller could resolve: treat as divergence at t.
                diverged = True
                t_div = t
                break
            continue
        if err > 1.0:
            rejected += 1
            h *= max(0.1, SAFETY * err**-0.2)
            continue

        accepted += 1
        f_new = k[6]
        # Cubic Hermite interpolation of every report point inside the step.
        tiny = 1e-12 * max(1.0, abs(t_new))
        while next_report <= n_report and times[next_report] <= t_new + tiny:
            theta = (times[next_report] - t) / h
            h00 = (1.0 + 2.0 * theta) * (1.0 - theta) ** 2
            h10 = theta * (1.0 - theta) ** 2
            h01 = theta**2 * (3.0 - 2.0 * theta)
            h11 = theta**2 * (theta - 1.0)
            states[next_report] = (
                h00 * y + (h10 * h) * f0 + h01 * y_new + (h11 * h) * f_new
            )
            next_report += 1

        if _exceeds(y_new, threshold, ref_scale):
            diverged = True
            t_div = t_new
            break

        t = t_new
        y = y_new
        f0 = f_new
        if err == 0.0:
            factor = MAX_FACTOR
        else:
            factor = min(
                MAX_FACTOR,
                max(MIN_FACTOR, SAFETY * err**-PI_ALPHA * err_prev**PI_BETA),
            )
        err_prev = max(err, 1e-10)
        h *= factor

    return times[:next_report], states[:next_report], diverged, t_div, accepted, rejected
