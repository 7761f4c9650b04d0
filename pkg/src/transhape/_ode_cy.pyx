# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernels for the catalog closed-loop right-hand sides.

Mirrors the algorithms in transhape._ode_py step for step. Kernel kinds:
1 = cubic first-order, 2 = linear first-order, 3 = mass-spring-damper,
each augmented with the integral-compensated input as the last state entry.
"""

import numpy as np

from .errors import StepBudgetError

from libc.math cimport fabs, floor, fmax, fmin, isfinite, pow, sqrt, INFINITY

DEF MAX_DIM = 8

cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 10.0
cdef double PI_ALPHA = 0.7 / 5.0
cdef double PI_BETA = 0.4 / 5.0

KIND_CUBIC = 1
KIND_LINEAR = 2
KIND_MSD = 3

cdef int kernel_dim(int kind):
    if kind == 1 or kind == 2:
        return 2
    if kind == 3:
        return 3
    return 0


cdef inline void eval_rhs(int kind, double* p, double t, double* z, double* dz) nogil:
    # p always starts with (lam, r); the plant's output is z[0] throughout.
    cdef double lam = p[0]
    cdef double r = p[1]
    cdef double d, f
    if kind == 1:  # dx = -gain (x - u)^3
        d = z[0] - z[1]
        dz[0] = -p[2] * d * d * d
        dz[1] = lam * (r - z[0])
    elif kind == 2:  # dx = (u - x) / tau
        dz[0] = (z[1] - z[0]) / p[2]
        dz[1] = lam * (r - z[0])
    elif kind == 3:  # dx = v; dv = -2 zeta wn v - (1 + f(x-u)) wn^2 (x-u)
        d = z[0] - z[2]
        if p[5] != 0.0:  # symmetric stiffness variant
            f = d * d
            if f > p[4] * p[4]:
                f = p[4] * p[4]
        else:
            f = d * d if d < p[4] else p[4] * p[4]
        dz[0] = z[1]
        dz[1] = -2.0 * p[3] * p[2] * z[1] - (1.0 + f) * p[2] * p[2] * d
        dz[2] = lam * (r - z[0])


cdef inline bint exceeds(double* y, int dim, double threshold, double ref_scale) nogil:
    cdef int i
    cdef double m = 0.0
    for i in range(dim):
        if not isfinite(y[i]):
            return True
        if fabs(y[i]) > m:
            m = fabs(y[i])
    return m > threshold * fmax(1.0, ref_scale)


def run_fixed(int kind, double[::1] params, double[::1] x0, double t0,
              double horizon, double h, double threshold, double ref_scale,
              long max_steps):
    cdef int dim = kernel_dim(kind)
    if dim == 0 or dim != x0.shape[0]:
        raise ValueError("unknown kernel kind or state dimension mismatch")

    cdef long n_full = <long>floor(horizon / h + 1e-12)
    cdef double rem = horizon - n_full * h
    if rem <= 1e-12 * fmax(h, horizon):
        rem = 0.0
    cdef long n_steps = n_full + (1 if rem > 0.0 else 0)
    if n_steps > max_steps:
        raise StepBudgetError(
            f"fixed-step run needs {n_steps} steps, budget is {max_steps}"
        )

    times_arr = np.empty(n_steps + 1)
    states_arr = np.empty((n_steps + 1, dim))
    cdef double[::1] times = times_arr
    cdef double[:, ::1] states = states_arr

    cdef double y[MAX_DIM]
    cdef double ys[MAX_DIM]
    cdef double k1[MAX_DIM]
    cdef double k2[MAX_DIM]
    cdef double k3[MAX_DIM]
    cdef double k4[MAX_DIM]
    cdef double* p = &params[0]
    cdef int i, j
    cdef long step
    cdef long filled = 1
    cdef double t, t_new, hi
    cdef bint diverged = False
    cdef bint nonfinite = False
    cdef double t_div = 0.0

    times[0] = t0
    for i in range(dim):
        y[i] = x0[i]
        states[0, i] = y[i]

    with nogil:
        for step in range(n_steps):
            if step < n_full:
                hi = h
                t = t0 + step * h
                t_new = t0 + (step + 1) * h
            else:
                hi = rem
                t = t0 + n_full * h
                t_new = t0 + horizon
            if step == n_steps - 1:
                t_new = t0 + horizon
            eval_rhs(kind, p, t, y, k1)
            for i in range(dim):
                ys[i] = y[i] + (0.5 * hi) * k1[i]
            eval_rhs(kind, p, t + 0.5 * hi, ys, k2)
            for i in range(dim):
                ys[i] = y[i] + (0.5 * hi) * k2[i]
            eval_rhs(kind, p, t + 0.5 * hi, ys, k3)
            for i in range(dim):
                ys[i] = y[i] + hi * k3[i]
            eval_rhs(kind, p, t + hi, ys, k4)
            for i in range(dim):
                y[i] = y[i] + (hi / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            nonfinite = False
            for i in range(dim):
                if not isfinite(y[i]):
                    nonfinite = True
            if nonfinite:
                diverged = True
                t_div = t_new
                break
            times[filled] = t_new
            for i in range(dim):
                states[filled, i] = y[i]
            filled += 1
            if exceeds(y, dim, threshold, ref_scale):
                diverged = True
                t_div = t_new
                break

    return (
        times_arr[:filled],
        states_arr[:filled],
        bool(diverged),
        t_div if diverged else None,
        n_steps,
        0,
    )


cdef double error_norm(double* err, double* y0, double* y1, int dim,
                       double abs_tol, double rel_tol) nogil:
    cdef int i
    cdef double s = 0.0
    cdef double scale
    for i in range(dim):
        scale = abs_tol + rel_tol * fmax(fabs(y0[i]), fabs(y1[i]))
        s += (err[i] / scale) * (err[i] / scale)
    return sqrt(s / dim)


def run_adaptive(int kind, double[::1] params, double[::1] x0, double t0,
                 double horizon, double dt_report, double abs_tol,
                 double rel_tol, double threshold, double ref_scale,
                 long max_steps):
    cdef int dim = kernel_dim(kind)
    if dim == 0 or dim != x0.shape[0]:
        raise ValueError("unknown kernel kind or state dimension mismatch")

    cdef long n_report = <long>(horizon / dt_report + 0.5)
    if n_report < 1:
        n_report = 1
    cdef double dt = horizon / n_report
    cdef double t_end = t0 + horizon

    times_arr = np.empty(n_report + 1)
    states_arr = np.empty((n_report + 1, dim))
    cdef double[::1] times = times_arr
    cdef double[:, ::1] states = states_arr

    cdef long j
    for j in range(n_report + 1):
        times[j] = t0 + dt * j
    times[n_report] = t_end

    # Dormand-Prince 5(4) tableau
    cdef double C[6]
    C[0] = 0.2; C[1] = 0.3; C[2] = 0.8; C[3] = 8.0 / 9.0; C[4] = 1.0; C[5] = 1.0
    cdef double A[6][6]
    A[0][0] = 0.2
    A[1][0] = 3.0 / 40.0; A[1][1] = 9.0 / 40.0
    A[2][0] = 44.0 / 45.0; A[2][1] = -56.0 / 15.0; A[2][2] = 32.0 / 9.0
    A[3][0] = 19372.0 / 6561.0; A[3][1] = -25360.0 / 2187.0
    A[3][2] = 64448.0 / 6561.0; A[3][3] = -212.0 / 729.0
    A[4][0] = 9017.0 / 3168.0; A[4][1] = -355.0 / 33.0
    A[4][2] = 46732.0 / 5247.0; A[4][3] = 49.0 / 176.0; A[4][4] = -5103.0 / 18656.0
    A[5][0] = 35.0 / 384.0; A[5][1] = 0.0; A[5][2] = 500.0 / 1113.0
    A[5][3] = 125.0 / 192.0; A[5][4] = -2187.0 / 6784.0; A[5][5] = 11.0 / 84.0
    cdef double E[7]
    E[0] = 71.0 / 57600.0; E[1] = 0.0; E[2] = -71.0 / 16695.0
    E[3] = 71.0 / 1920.0; E[4] = -17253.0 / 339200.0; E[5] = 22.0 / 525.0
    E[6] = -1.0 / 40.0

    cdef double y[MAX_DIM]
    cdef double ys[MAX_DIM]
    cdef double y_new[MAX_DIM]
    cdef double err_vec[MAX_DIM]
    cdef double k[7][MAX_DIM]
    cdef double f0[MAX_DIM]
    cdef double f1tmp[MAX_DIM]
    cdef double* p = &params[0]
    cdef int i, s, q
    cdef double acc

    for i in range(dim):
        y[i] = x0[i]
        states[0, i] = y[i]

    # Initial step size (mirrors _ode_py._initial_step)
    eval_rhs(kind, p, t0, y, f0)
    cdef double d0 = 0.0, d1 = 0.0, d2 = 0.0, scale
    for i in range(dim):
        scale = abs_tol + rel_tol * fabs(y[i])
        d0 += (y[i] / scale) * (y[i] / scale)
        d1 += (f0[i] / scale) * (f0[i] / scale)
    d0 = sqrt(d0 / dim)
    d1 = sqrt(d1 / dim)
    cdef double h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    for i in range(dim):
        ys[i] = y[i] + h0 * f0[i]
    eval_rhs(kind, p, t0 + h0, ys, f1tmp)
    for i in range(dim):
        scale = abs_tol + rel_tol * fabs(y[i])
        d2 += ((f1tmp[i] - f0[i]) / scale) * ((f1tmp[i] - f0[i]) / scale)
    d2 = sqrt(d2 / dim) / h0
    cdef double h1
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = fmax(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / fmax(d1, d2), 0.2)
    cdef double h = fmin(fmin(100.0 * h0, h1), horizon)

    cdef double t = t0
    cdef double err_prev = 1.0
    cdef long accepted = 0
    cdef long rejected = 0
    cdef long next_report = 1
    cdef bint diverged = False
    cdef double t_div = 0.0
    cdef double t_new, err, factor, theta, tiny, h00, h10, h01, h11
    cdef bint y_finite
    cdef bint budget_hit = False

    with nogil:
        while t < t_end:
            if accepted + rejected >= max_steps:
                budget_hit = True
                break
            h = fmin(h, t_end - t)
            for i in range(dim):
                k[0][i] = f0[i]
            for s in range(5):
                for i in range(dim):
                    acc = 0.0
                    for q in range(s + 1):
                        acc += A[s][q] * k[q][i]
                    ys[i] = y[i] + h * acc
                eval_rhs(kind, p, t + C[s] * h, ys, k[s + 1])
            for i in range(dim):
                y_new[i] = y[i] + h * (
                    A[5][0] * k[0][i] + A[5][2] * k[2][i] + A[5][3] * k[3][i]
                    + A[5][4] * k[4][i] + A[5][5] * k[5][i]
                )
            t_new = t + h
            eval_rhs(kind, p, t_new, y_new, k[6])
            y_finite = True
            for i in range(dim):
                if not isfinite(y_new[i]):
                    y_finite = False
                err_vec[i] = h * (
                    E[0] * k[0][i] + E[2] * k[2][i] + E[3] * k[3][i]
                    + E[4] * k[4][i] + E[5] * k[5][i] + E[6] * k[6][i]
                )
            if y_finite:
                err = error_norm(err_vec, y, y_new, dim, abs_tol, rel_tol)
            else:
                err = INFINITY

            if not isfinite(err):
                rejected += 1
                h *= 0.5
                if h < 1e-14 * fmax(1.0, fabs(t)):
                    diverged = True
                    t_div = t
                    break
                continue
            if err > 1.0:
                rejected += 1
                h *= fmax(0.1, SAFETY * pow(err, -0.2))
                continue

            accepted += 1
            tiny = 1e-12 * fmax(1.0, fabs(t_new))
            while next_report <= n_report and times[next_report] <= t_new + tiny:
                theta = (times[next_report] - t) / h
                h00 = (1.0 + 2.0 * theta) * (1.0 - theta) * (1.0 - theta)
                h10 = theta * (1.0 - theta) * (1.0 - theta)
                h01 = theta * theta * (3.0 - 2.0 * theta)
                h11 = theta * theta * (theta - 1.0)
                for i in range(dim):
                    states[next_report, i] = (
                        h00 * y[i] + (h10 * h) * f0[i]
                        + h01 * y_new[i] + (h11 * h) * k[6][i]
                    )
                next_report += 1

            if exceeds(y_new, dim, threshold, ref_scale):
                diverged = True
                t_div = t_new
                break

            t = t_new
            for i in range(dim):
                y[i] = y_new[i]
                f0[i] = k[6][i]
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = fmin(
                    MAX_FACTOR,
                    fmax(MIN_FACTOR,
                         SAFETY * pow(err, -PI_ALPHA) * pow(err_prev, PI_BETA)),
                )
            err_prev = fmax(err, 1e-10)
            h *= factor

    if budget_hit:
        raise StepBudgetError(
            f"adaptive run exceeded the step budget of {max_steps}"
        )

    return (
        times_arr[:next_report],
        states_arr[:next_report],
        bool(diverged),
        t_div if diverged else None,
        accepted,
        rejected,
    )
