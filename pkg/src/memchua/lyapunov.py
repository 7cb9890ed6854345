"""Lyapunov spectrum by tangent-space integration with QR renormalization.

The state and an orthonormal tangent frame are advanced together with RK4;
every ``renorm_interval`` the frame is re-orthonormalized by a QR
factorization and the logarithms of the diagonal of R are accumulated.  For
the circuit the equations are integrated in units of ``sqrt(L*C2)`` seconds,
and exponents are reported per such unit; divide by the timescale to get 1/s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels as K
from .dynamics import (CircuitParams, CompiledField, NonlinearElement, jacobian,
                       rescale_time, vector_field)
from .integrator import DivergenceError, IntegratorConfig, Trajectory, integrate


class DegenerateFrameError(RuntimeError):
    pass


@dataclass(frozen=True)
class LyapunovConfig:
    renorm_interval: float = 1.0
    t_transient: float = 50.0
    t_total: float = 2000.0
    dt: float = 0.005
    n_exponents: Optional[int] = None
    # state samples kept per renormalization interval for divergence averaging
    record_every: int = 1

    def problems(self) -> list[tuple[str, str]]:
        errs = []
        if not 0 < self.renorm_interval < self.t_total:
            errs.append(("renorm_interval", "need 0 < renorm_interval < t_total"))
        if not self.t_transient >= 0:
            errs.append(("t_transient", "must be >= 0"))
        if not self.dt > 0:
            errs.append(("dt", "must be positive"))
        elif self.renorm_interval < self.dt:
            errs.append(("dt", "must not exceed renorm_interval"))
        if self.n_exponents is not None and self.n_exponents < 1:
            errs.append(("n_exponents", "must be >= 1"))
        if not (isinstance(self.record_every, int) and self.record_every >= 1):
            errs.append(("record_every", "must be a positive integer"))
        return errs

    def __post_init__(self):
        errs = self.problems()
        if errs:
            raise ValueError("; ".join(f"{k}: {v}" for k, v in errs))


@dataclass
class LyapunovRecord:
    times: np.ndarray          # accumulation time at each renormalization
    exponents: np.ndarray      # running estimates, one row per renormalization
    timescale: float = 1.0     # seconds per time unit
    trajectory: Optional[Trajectory] = None
    trace_integral: float = float("nan")

    @property
    def final(self) -> np.ndarray:
        return self.exponents[-1]

    @property
    def final_per_second(self) -> np.ndarray:
        return self.final / self.timescale

    @property
    def trace_average(self) -> float:
        """Mean of trace(J) over the stages the tangent frame saw."""
        return self.trace_integral / self.times[-1]


def lyapunov_exponents(field: Callable, y0, cfg: LyapunovConfig,
                       jac: Optional[Callable] = None, names=None,
                       timescale: float = 1.0) -> LyapunovRecord:
    """Spectrum of ``y' = field(t, y)`` starting from ``y0``.

    ``field`` is either a :class:`CompiledField` (fast path, Jacobian included)
    or a plain callable, in which case ``jac(y)`` must be supplied.
    """
    y = np.array(y0, dtype=float)
    n = len(y)
    m = cfg.n_exponents or n
    if m > n:
        raise ValueError(f"asked for {m} exponents of a {n}-dimensional system")
    if names is None:
        names = tuple(f"y{k}" for k in range(n))

    if cfg.t_transient > 0:
        pre = integrate(field, y, IntegratorConfig(dt=cfg.dt, t_end=cfg.t_transient,
                                                   record_every=10**9, max_steps=10**9),
                        names=names, timescale=timescale)
        y = pre.states[-1].copy()

    compiled = isinstance(field, CompiledField)
    if not compiled and jac is None:
        raise ValueError("a Jacobian is required for non-compiled fields")

    steps = max(1, int(round(cfg.renorm_interval / cfg.dt)))
    h = cfg.renorm_interval / steps
    n_int = int(round(cfg.t_total / cfg.renorm_interval))
    every = min(cfg.record_every, steps)
    while steps % every:
        every -= 1
    per = steps // every

    q = np.eye(n)[:, :m].copy()
    log_sum = np.zeros(m)
    times = np.empty(n_int)
    est = np.empty((n_int, m))
    rec_states = np.empty((n_int * per + 1, n))
    rec_states[0] = y
    tr_total = 0.0
    for j in range(n_int):
        rec = rec_states[1 + j * per: 1 + (j + 1) * per]
        if compiled:
            status, tr = K.rk4_tangent(field.rhs, field.jac, y, q, h, steps, field.prm,
                                       field.clamp_index, rec, every)
        else:
            status, tr = _tangent_python(field, jac, y, q, h, steps, rec, every)
        tr_total += tr
        if status:
            t_fail = cfg.t_transient + j * cfg.renorm_interval
            raise DivergenceError(t_fail)
        q, r = np.linalg.qr(q)
        diag = np.diag(r)
        if np.any(diag == 0) or not np.all(np.isfinite(diag)):
            raise DegenerateFrameError(f"tangent frame collapsed after interval {j}")
        q = q * np.sign(diag)
        log_sum += np.log(np.abs(diag))
        times[j] = (j + 1) * steps * h
        est[j] = log_sum / times[j]

    traj_times = np.arange(n_int * per + 1) * (h * every)
    traj = Trajectory(traj_times, rec_states, tuple(names), timescale)
    return LyapunovRecord(times, np.sort(est, axis=1)[:, ::-1], timescale, traj, tr_total)


def _tangent_python(f, jac, y, q, h, nsteps, rec, every):
    tr_int = 0.0

    def aug(yy, qq):
        jm = np.asarray(jac(yy), dtype=float)
        return np.asarray(f(0.0, yy), dtype=float), jm @ qq, np.trace(jm)

    for step in range(nsteps):
        k1, l1, t1 = aug(y, q)
        k2, l2, t2 = aug(y + h / 2 * k1, q + h / 2 * l1)
        k3, l3, t3 = aug(y + h / 2 * k2, q + h / 2 * l2)
        k4, l4, t4 = aug(y + h * k3, q + h * l3)
        y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        q += h / 6 * (l1 + 2 * l2 + 2 * l3 + l4)
        tr_int += h / 6 * (t1 + 2 * t2 + 2 * t3 + t4)
        if not np.all(np.abs(y) <= K.BLOWUP):
            return 1, tr_int
        if (step + 1) % every == 0:
            rec[(step + 1) // every - 1] = y
    return 0, tr_int


def lyapunov_spectrum(params: CircuitParams, elem: NonlinearElement, s0,
                      cfg: LyapunovConfig) -> LyapunovRecord:
    """Spectrum of the circuit in units of sqrt(L*C2)."""
    ts = rescale_time(params)
    return lyapunov_exponents(vector_field(params, elem, ts), s0, cfg,
                              names=elem.state_names, timescale=ts)


def mean_trace(jac: Callable, trajectory: Trajectory) -> float:
    """Time average of trace(jac(y)) over the trajectory samples (trapezoidal)."""
    tr = np.array([np.trace(jac(y)) for y in trajectory.states])
    if len(tr) == 1 or trajectory.duration == 0:
        return float(tr.mean())
    return float(np.trapezoid(tr, trajectory.times) / trajectory.duration)


def divergence_average(params: CircuitParams, elem: NonlinearElement,
                       trajectory: Trajectory) -> float:
    """Time-averaged phase-space divergence, per unit of the trajectory's time.

    Equals the sum of the Lyapunov exponents for a trajectory long enough to
    sample the attractor.
    """
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    ts = trajectory.timescale
    if elem.mode == "pwl-only":
        # trace is piecewise constant in v1 only; vectorize
        from .pwl import derivative as slope
        tr = -(1 / (params.r * params.c1) + slope(elem.pwl, trajectory.states[:, 0]) / params.c1
               + 1 / (params.r * params.c2))
        tr = np.atleast_1d(tr) * ts
        if len(tr) == 1 or trajectory.duration == 0:
            return float(tr.mean())
        return float(np.trapezoid(tr, trajectory.times) / trajectory.duration)
    return mean_trace(lambda y: ts * jacobian(params, elem, y), trajectory)
