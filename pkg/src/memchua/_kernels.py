"""numba kernels for the hot loops.

Every right-hand side here has the signature ``rhs(t, y, prm, out)`` and every
Jacobian ``jac(y, prm, out)``, where ``prm`` is a flat float64 parameter vector.
The circuit layout of ``prm`` is built by :func:`memchua.dynamics.pack`.
"""
import numpy as np
from numba import njit

# circuit prm layout
C1, C2, L, R, TSCALE, MODE, RON, ROFF, DRIFT, PEXP, NSEG = range(11)
HEAD = 11

BLOWUP = 1e6


@njit(cache=True)
def _segment(v, prm):
    nseg = int(prm[NSEG])
    k = 0
    while k < nseg - 1 and v >= prm[HEAD + k]:
        k += 1
    return k


@njit(cache=True)
def _pwl(v, prm):
    nseg = int(prm[NSEG])
    k = _segment(v, prm)
    s0 = HEAD + nseg - 1
    return prm[s0 + k] * v + prm[s0 + nseg + k]


@njit(cache=True)
def _pwl_slope(v, prm):
    nseg = int(prm[NSEG])
    return prm[HEAD + nseg - 1 + _segment(v, prm)]


@njit(cache=True)
def circuit_rhs(t, y, prm, out):
    v1 = y[0]
    v2 = y[1]
    il = y[2]
    ts = prm[TSCALE]
    ir = _pwl(v1, prm)
    if prm[MODE] > 0.5:
        x = y[3]
        m = prm[RON] * x + prm[ROFF] * (1.0 - x)
        im = v1 / m
        ir += im
        stp = 1.0 if -im >= 0.0 else 0.0
        win = 1.0 - (x - stp) ** (2.0 * prm[PEXP])
        out[3] = ts * prm[DRIFT] * im * win
    g = (v1 - v2) / prm[R]
    out[0] = ts * (-g - ir) / prm[C1]
    out[1] = ts * (g + il) / prm[C2]
    out[2] = -ts * v2 / prm[L]


@njit(cache=True)
def circuit_jac(y, prm, out):
    v1 = y[0]
    ts = prm[TSCALE]
    c1 = prm[C1]
    c2 = prm[C2]
    gr = 1.0 / prm[R]
    out[:, :] = 0.0
    dir_dv1 = _pwl_slope(v1, prm)
    if prm[MODE] > 0.5:
        x = y[3]
        m = prm[RON] * x + prm[ROFF] * (1.0 - x)
        dm = prm[RON] - prm[ROFF]
        im = v1 / m
        dim_dv1 = 1.0 / m
        dim_dx = -v1 * dm / (m * m)
        dir_dv1 += dim_dv1
        stp = 1.0 if -im >= 0.0 else 0.0
        p2 = 2.0 * prm[PEXP]
        win = 1.0 - (x - stp) ** p2
        dwin_dx = -p2 * (x - stp) ** (p2 - 1.0)
        out[0, 3] = -ts * dim_dx / c1
        out[3, 0] = ts * prm[DRIFT] * dim_dv1 * win
        out[3, 3] = ts * prm[DRIFT] * (dim_dx * win + im * dwin_dx)
    out[0, 0] = -ts * (gr + dir_dv1) / c1
    out[0, 1] = ts * gr / c1
    out[1, 0] = ts * gr / c2
    out[1, 1] = -ts * gr / c2
    out[1, 2] = ts / c2
    out[2, 1] = -ts / prm[L]


@njit(cache=True)
def linear_rhs(t, y, prm, out):
    n = y.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += prm[i * n + j] * y[j]
        out[i] = acc


@njit(cache=True)
def linear_jac(y, prm, out):
    n = y.shape[0]
    for i in range(n):
        for j in range(n):
            out[i, j] = prm[i * n + j]


@njit(cache=True)
def rk4_run(rhs, y0, t0, h, nsteps, every, prm, clamp_index):
    """Fixed-step RK4.  Returns (times, states, n_recorded, status, t_fail).

    status 0 = ok, 1 = non-finite or blown-up state (recording stops before it).
    """
    n = y0.shape[0]
    nrec = nsteps // every + 1
    times = np.empty(nrec)
    states = np.empty((nrec, n))
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    times[0] = t0
    states[0] = y
    r = 1
    for step in range(1, nsteps + 1):
        t = t0 + (step - 1) * h
        rhs(t, y, prm, k1)
        for i in range(n):
            tmp[i] = y[i] + 0.5 * h * k1[i]
        rhs(t + 0.5 * h, tmp, prm, k2)
        for i in range(n):
            tmp[i] = y[i] + 0.5 * h * k2[i]
        rhs(t + 0.5 * h, tmp, prm, k3)
        for i in range(n):
            tmp[i] = y[i] + h * k3[i]
        rhs(t + h, tmp, prm, k4)
        bad = False
        for i in range(n):
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not (abs(y[i]) <= BLOWUP):
                bad = True
        if clamp_index >= 0:
            y[clamp_index] = min(1.0, max(0.0, y[clamp_index]))
        if bad:
            return times[:r], states[:r], r, 1, t0 + step * h
        if step % every == 0:
            times[r] = t0 + step * h
            states[r] = y
            r += 1
    return times[:r], states[:r], r, 0, 0.0


@njit(cache=True)
def rk4_tangent(rhs, jac, y, q, h, nsteps, prm, clamp_index, rec, every):
    """Advance state ``y`` and tangent frame ``q`` (columns) together, in place.

    The tangent obeys q' = J(y) q, each RK4 stage using the Jacobian at that
    stage's state.  Every ``every`` steps the state is written to the next row
    of ``rec``.  Returns (status, trace_integral) where trace_integral is the
    RK4-weighted time integral of trace(J) over the stages.
    """
    n = y.shape[0]
    m = q.shape[1]
    k = np.empty((4, n))
    kq = np.empty((4, n, m))
    ys = np.empty(n)
    qs = np.empty((n, m))
    jm = np.empty((n, n))
    coef = (0.0, 0.5, 0.5, 1.0)
    wts = (1.0, 2.0, 2.0, 1.0)
    tr_int = 0.0
    for step in range(nsteps):
        for s in range(4):
            c = coef[s] * h
            if s == 0:
                ys[:] = y
                qs[:, :] = q
            else:
                for i in range(n):
                    ys[i] = y[i] + c * k[s - 1, i]
                    for j in range(m):
                        qs[i, j] = q[i, j] + c * kq[s - 1, i, j]
            rhs(0.0, ys, prm, k[s])
            jac(ys, prm, jm)
            tr = 0.0
            for i in range(n):
                tr += jm[i, i]
            tr_int += h / 6.0 * wts[s] * tr
            for i in range(n):
                for j in range(m):
                    acc = 0.0
                    for l in range(n):
                        acc += jm[i, l] * qs[l, j]
                    kq[s, i, j] = acc
        bad = False
        for i in range(n):
            y[i] += h / 6.0 * (k[0, i] + 2.0 * k[1, i] + 2.0 * k[2, i] + k[3, i])
            if not (abs(y[i]) <= BLOWUP):
                bad = True
            for j in range(m):
                q[i, j] += h / 6.0 * (kq[0, i, j] + 2.0 * kq[1, i, j]
                                      + 2.0 * kq[2, i, j] + kq[3, i, j])
        if clamp_index >= 0:
            y[clamp_index] = min(1.0, max(0.0, y[clamp_index]))
        if bad:
            return 1, tr_int
        if (step + 1) % every == 0:
            rec[(step + 1) // every - 1] = y
    return 0, tr_int
