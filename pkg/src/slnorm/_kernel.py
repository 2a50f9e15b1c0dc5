"""Compiled DOP853 shooting kernel.

Each value of mu gets its own adaptive step sequence. The state carried
along x is

    0: y        1: y'        2: dy/dmu    3: dy'/dmu
    4: integral of y**2 from 0 to x
    5: scaled Pruefer angle theta, tan(theta) = S*y/y'

for -y'' + q y = mu y. The potential is read from a piecewise Chebyshev
table built by :attr:`slnorm.potential.Potential.table`.
"""

import math

import numpy as np
from numba import njit
# DOP853 tableau; scipy keeps it in a private module
from scipy.integrate._ivp import dop853_coefficients as _dop

N_STAGES = 12
NSTATE = 6
A = np.ascontiguousarray(_dop.A[:N_STAGES, :N_STAGES])
B = np.ascontiguousarray(_dop.B)
C = np.ascontiguousarray(_dop.C[:N_STAGES])
E3 = np.ascontiguousarray(_dop.E3)
E5 = np.ascontiguousarray(_dop.E5)

# reassociation lets the stage sums vectorise; NaN/inf semantics are kept
FAST = {"reassoc", "contract"}

OK = 0
STEP_UNDERFLOW = 1
TOO_MANY_STEPS = 2


@njit(cache=True, inline="always", fastmath=FAST)
def q_at(x, breaks, coef):
    npan = coef.shape[0]
    i = np.searchsorted(breaks, x, side="right") - 1
    if i < 0:
        i = 0
    elif i > npan - 1:
        i = npan - 1
    a = breaks[i]
    b = breaks[i + 1]
    u = (2.0 * x - a - b) / (b - a)
    b1 = 0.0
    b2 = 0.0
    for k in range(coef.shape[1] - 1, 0, -1):
        b0 = 2.0 * u * b1 - b2 + coef[i, k]
        b2 = b1
        b1 = b0
    return u * b1 - b2 + coef[i, 0]


@njit(cache=True, inline="always", fastmath=FAST)
def _rhs(x, y, mu, s, breaks, coef, out):
    w = q_at(x, breaks, coef) - mu
    out[0] = y[1]
    out[1] = w * y[0]
    out[2] = y[3]
    out[3] = w * y[2] - y[0]
    out[4] = y[0] * y[0]
    sn = math.sin(y[5])
    cs = math.cos(y[5])
    out[5] = s * cs * cs - (w / s) * sn * sn


@njit(cache=True, fastmath=FAST)
def _shoot_one(mu, s, y0, x_out, x_end, breaks, coef, rtol, atol, max_steps,
               A, B, C, E3, E5, out):
    """Integrate one trajectory; fills ``out[j]`` at each ``x_out[j]``.

    Returns ``(status, x_fail, n_steps)``.
    """
    n_out = x_out.shape[0]
    K = np.empty((N_STAGES + 1, NSTATE))
    y = y0.copy()
    ytmp = np.empty(NSTATE)
    ynew = np.empty(NSTATE)
    x = 0.0
    _rhs(x, y, mu, s, breaks, coef, K[0])
    j = 0
    while j < n_out and x_out[j] <= x:
        out[j, :] = y
        j += 1
    h = min(0.05, 0.5 / math.sqrt(max(1.0, abs(mu))))
    steps = 0
    while x < x_end:
        if steps >= max_steps:
            return TOO_MANY_STEPS, x, steps
        stop = x_out[j] if j < n_out else x_end
        hh = h
        clipped = False
        if hh >= stop - x:
            hh = stop - x
            clipped = True
        for st in range(1, N_STAGES):
            for i in range(NSTATE):
                acc = 0.0
                for t in range(st):
                    acc += A[st, t] * K[t, i]
                ytmp[i] = y[i] + hh * acc
            _rhs(x + C[st] * hh, ytmp, mu, s, breaks, coef, K[st])
        for i in range(NSTATE):
            acc = 0.0
            for t in range(N_STAGES):
                acc += B[t] * K[t, i]
            ynew[i] = y[i] + hh * acc
        _rhs(x + hh, ynew, mu, s, breaks, coef, K[N_STAGES])
        e5 = 0.0
        e3 = 0.0
        for i in range(NSTATE):
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            a5 = 0.0
            a3 = 0.0
            for t in range(N_STAGES + 1):
                a5 += E5[t] * K[t, i]
                a3 += E3[t] * K[t, i]
            e5 += (a5 / sc) ** 2
            e3 += (a3 / sc) ** 2
        if e5 == 0.0 and e3 == 0.0:
            err = 0.0
        else:
            err = hh * e5 / math.sqrt((e5 + 0.01 * e3) * NSTATE)
        steps += 1
        if err < 1.0:
            factor = 10.0 if err == 0.0 else min(10.0, 0.9 * err ** (-1.0 / 8.0))
            x = stop if clipped else x + hh
            y[:] = ynew
            K[0, :] = K[N_STAGES, :]
            while j < n_out and x_out[j] <= x:
                out[j, :] = y
                j += 1
            if not clipped:
                h = hh * factor
        else:
            h = hh * max(0.2, 0.9 * err ** (-1.0 / 8.0))
            if h < 1e-14 * max(1.0, abs(x)):
                return STEP_UNDERFLOW, x, steps
    return OK, x, steps


@njit(cache=True, fastmath=FAST)
def shoot_batch(mus, scales, y0s, x_out, x_end, breaks, coef, rtol, atol, max_steps,
                A, B, C, E3, E5):
    nb = mus.shape[0]
    out = np.empty((nb, x_out.shape[0], NSTATE))
    status = np.zeros(nb, dtype=np.int64)
    x_fail = np.zeros(nb)
    steps = np.zeros(nb, dtype=np.int64)
    for b in range(nb):
        st, xf, ns = _shoot_one(mus[b], scales[b], y0s[b], x_out, x_end, breaks, coef,
                                rtol, atol, max_steps, A, B, C, E3, E5, out[b])
        status[b] = st
        x_fail[b] = xf
        steps[b] = ns
    return out, status, x_fail, steps
