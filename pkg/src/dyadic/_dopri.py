"""Compiled Dormand-Prince 5(4) kernel for the shell model.

Kept separate so the numba compile cost is paid once and cached on disk.
"""

import numpy as np
from numba import njit

# tail closure modes for Y_{N+1}(t)
TAIL_ZERO = 0
TAIL_CONSTANT = 1
TAIL_SELFSIMILAR = 2

STATUS_OK = 0
STATUS_COLLAPSE = 1
STATUS_NONFINITE = 2
STATUS_MAX_STEPS = 3

C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# fifth minus fourth order weights
E1 = 71.0 / 57600.0
E3 = -71.0 / 16695.0
E4 = 71.0 / 1920.0
E5 = -17253.0 / 339200.0
E6 = 22.0 / 525.0
E7 = -1.0 / 40.0


@njit(cache=True)
def tail_value(t, mode, a, t0):
    if mode == TAIL_CONSTANT:
        return a
    if mode == TAIL_SELFSIMILAR:
        return a / (t - t0)
    return 0.0


@njit(cache=True)
def shell_rhs(t, y, k, d1, d2, forcing, mode, ta, tt0, out):
    n_last = y.size - 1
    for n in range(y.size):
        ym = y[n - 1] if n > 0 else 0.0
        km = k[n - 1] if n > 0 else 0.0
        yp = y[n + 1] if n < n_last else tail_value(t, mode, ta, tt0)
        yc = y[n]
        out[n] = (d1 * (k[n] * ym * ym - k[n + 1] * yc * yp)
                  - d2 * (k[n] * yp * yp - km * yc * ym))
    out[0] += forcing


@njit(cache=True)
def _err_norm(y, ynew, err, rtol, atol):
    s = 0.0
    for i in range(y.size):
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        e = err[i] / sc
        s += e * e
    return np.sqrt(s / y.size)


@njit(cache=True)
def dopri_run(y0, t0, t1, k, d1, d2, forcing, mode, ta, tt0,
              sample_times, rtol, atol, max_steps, collapse_frac):
    """Integrate and record the state at every entry of ``sample_times``.

    Returns ``(samples, n_written, accepted, rejected, min_step, status)``.
    ``sample_times[0]`` must equal ``t0``.
    """
    dim = y0.size
    ns = sample_times.size
    samples = np.empty((ns, dim))
    y = y0.copy()
    samples[0, :] = y
    written = 1
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    k5 = np.empty(dim)
    k6 = np.empty(dim)
    k7 = np.empty(dim)
    tmp = np.empty(dim)
    ynew = np.empty(dim)
    err = np.empty(dim)

    span = t1 - t0
    min_allowed = collapse_frac * span
    t = t0
    shell_rhs(t, y, k, d1, d2, forcing, mode, ta, tt0, k1)

    # initial step from derivative scale
    d0 = 0.0
    dd1 = 0.0
    for i in range(dim):
        sc = atol + rtol * abs(y[i])
        d0 += (y[i] / sc) ** 2
        dd1 += (k1[i] / sc) ** 2
    d0 = np.sqrt(d0 / dim)
    dd1 = np.sqrt(dd1 / dim)
    if d0 < 1e-5 or dd1 < 1e-5:
        h = 1e-6 * span
    else:
        h = 0.01 * d0 / dd1
    h = min(h, span)

    accepted = 0
    rejected = 0
    min_step = np.inf
    status = STATUS_OK
    nxt = 1
    while written < ns:
        if accepted + rejected >= max_steps:
            status = STATUS_MAX_STEPS
            break
        if h < min_allowed:
            status = STATUS_COLLAPSE
            break
        target = sample_times[nxt]
        clipped = False
        hs = h
        if t + hs >= target:
            hs = target - t
            clipped = True

        for i in range(dim):
            tmp[i] = y[i] + hs * A21 * k1[i]
        shell_rhs(t + C2 * hs, tmp, k, d1, d2, forcing, mode, ta, tt0, k2)
        for i in range(dim):
            tmp[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i])
        shell_rhs(t + C3 * hs, tmp, k, d1, d2, forcing, mode, ta, tt0, k3)
        for i in range(dim):
            tmp[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        shell_rhs(t + C4 * hs, tmp, k, d1, d2, forcing, mode, ta, tt0, k4)
        for i in range(dim):
            tmp[i] = y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        shell_rhs(t + C5 * hs, tmp, k, d1, d2, forcing, mode, ta, tt0, k5)
        for i in range(dim):
            tmp[i] = y[i] + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                  + A64 * k4[i] + A65 * k5[i])
        shell_rhs(t + hs, tmp, k, d1, d2, forcing, mode, ta, tt0, k6)
        for i in range(dim):
            ynew[i] = y[i] + hs * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                   + B5 * k5[i] + B6 * k6[i])
        t_new = target if clipped else t + hs
        shell_rhs(t_new, ynew, k, d1, d2, forcing, mode, ta, tt0, k7)
        for i in range(dim):
            err[i] = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                           + E6 * k6[i] + E7 * k7[i])
        en = _err_norm(y, ynew, err, rtol, atol)

        if not np.isfinite(en):
            rejected += 1
            h = 0.2 * hs
            finite = True
            for i in range(dim):
                if not np.isfinite(y[i]):
                    finite = False
            if not finite:
                status = STATUS_NONFINITE
                break
            continue

        if en <= 1.0:
            accepted += 1
            if not clipped:
                min_step = min(min_step, hs)
            t = t_new
            for i in range(dim):
                y[i] = ynew[i]
                k1[i] = k7[i]
            if clipped:
                for i in range(dim):
                    samples[written, i] = y[i]
                written += 1
                nxt += 1
            fac = 5.0 if en == 0.0 else min(5.0, max(0.2, 0.9 * en ** -0.2))
            h_new = hs * fac
            # clipped steps keep the controller's own proposal
            h = max(h, h_new) if clipped else h_new
        else:
            rejected += 1
            h = hs * max(0.2, 0.9 * en ** -0.2)

    if min_step == np.inf:
        min_step = h
    return samples, written, accepted, rejected, min_step, status
