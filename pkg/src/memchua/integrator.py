"""Explicit Runge-Kutta time stepping for autonomous circuit fields.

Two methods are provided: classical fixed-step RK4 and the Dormand-Prince 5(4)
embedded pair with local-error step control.  Fields implemented as
:class:`~memchua.dynamics.CompiledField` run their fixed-step loop in numba;
any other callable ``f(t, y)`` goes through the pure-Python loop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import _kernels as K
from .dynamics import CompiledField

RK4 = "rk4-fixed"
RK45 = "rk45-adaptive"
METHODS = (RK4, RK45)

BLOWUP = K.BLOWUP


class IntegrationError(RuntimeError):
    """Integration stopped early; ``trajectory`` holds what was computed."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class DivergenceError(IntegrationError):
    def __init__(self, time, trajectory=None):
        super().__init__(f"state diverged at t={time:.6g}", trajectory)
        self.time = time


class TruncationError(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = RK4
    dt: float = 0.005
    t_end: float = 500.0
    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_steps: int = 10_000_000
    # store every n-th accepted step; 1 keeps the trajectory lossless
    record_every: int = 1

    def problems(self) -> list[tuple[str, str]]:
        errs = []
        if self.method not in METHODS:
            errs.append(("method", f"unknown method {self.method!r}, expected one of {METHODS}"))
        for name in ("dt", "t_end", "rel_tol", "abs_tol"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                errs.append((name, f"must be positive and finite, got {val!r}"))
        for name in ("max_steps", "record_every"):
            val = getattr(self, name)
            if not (isinstance(val, int) and val > 0):
                errs.append((name, f"must be a positive integer, got {val!r}"))
        return errs

    def __post_init__(self):
        errs = self.problems()
        if errs:
            raise ValueError("; ".join(f"{k}: {v}" for k, v in errs))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    names: tuple[str, ...] = ("v1", "v2", "iL")
    # seconds per unit of ``times``
    timescale: float = 1.0
    branch_currents: Optional[np.ndarray] = None
    branch_names: tuple[str, ...] = ()

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.states.shape[1] != len(self.names):
            raise ValueError(f"{self.states.shape[1]} state columns but names {self.names}")

    def __len__(self):
        return len(self.times)

    @property
    def physical_times(self) -> np.ndarray:
        return self.times * self.timescale

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0]) if len(self) else 0.0

    def column(self, name: str) -> np.ndarray:
        if name in self.names:
            return self.states[:, self.names.index(name)]
        if name in self.branch_names:
            return self.branch_currents[:, self.branch_names.index(name)]
        if name == "t":
            return self.times
        raise KeyError(f"unknown component {name!r}; available: {self.names + self.branch_names}")

    def slice(self, start: int = 0, stop: Optional[int] = None) -> "Trajectory":
        bc = None if self.branch_currents is None else self.branch_currents[start:stop]
        return replace(self, times=self.times[start:stop], states=self.states[start:stop],
                       branch_currents=bc)

    def after(self, t_cut: float) -> "Trajectory":
        """Samples with ``times >= times[0] + t_cut``."""
        if len(self) == 0:
            return self
        return self.slice(int(np.searchsorted(self.times, self.times[0] + t_cut)))


def integrate(f: Callable, s0: Sequence[float], cfg: IntegratorConfig,
              names: Optional[Sequence[str]] = None, timescale: float = 1.0,
              t0: float = 0.0) -> Trajectory:
    """Integrate ``y' = f(t, y)`` from ``t0`` over ``cfg.t_end`` time units.

    Raises :class:`DivergenceError` when a state component stops being finite
    or exceeds 1e6 in magnitude, and :class:`TruncationError` when ``max_steps``
    would be exceeded; both carry the partial trajectory.
    """
    y0 = np.array(s0, dtype=float)
    if names is None:
        names = getattr(f, "names", None) or tuple(f"y{k}" for k in range(len(y0)))
    names = tuple(names)
    if cfg.method == RK4:
        return _integrate_rk4(f, y0, cfg, names, timescale, t0)
    return _integrate_rk45(f, y0, cfg, names, timescale, t0)


def _integrate_rk4(f, y0, cfg, names, timescale, t0):
    nsteps = int(math.ceil(cfg.t_end / cfg.dt - 1e-9))
    truncated = nsteps > cfg.max_steps
    nsteps = min(nsteps, cfg.max_steps)
    if isinstance(f, CompiledField):
        times, states, _, status, t_fail = K.rk4_run(
            f.rhs, y0, float(t0), float(cfg.dt), nsteps, cfg.record_every, f.prm, f.clamp_index)
    else:
        times, states, status, t_fail = _rk4_python(f, y0, t0, cfg.dt, nsteps, cfg.record_every)
    traj = Trajectory(times, states, names, timescale)
    if status:
        raise DivergenceError(t_fail, traj)
    if truncated:
        raise TruncationError(f"max_steps={cfg.max_steps} reached before t_end", traj)
    return traj


def _rk4_python(f, y0, t0, h, nsteps, every):
    y = y0.copy()
    times, states = [t0], [y.copy()]
    for step in range(1, nsteps + 1):
        t = t0 + (step - 1) * h
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.abs(y) <= BLOWUP):
            return np.array(times), np.array(states), 1, t0 + step * h
        if step % every == 0:
            times.append(t0 + step * h)
            states.append(y.copy())
    return np.array(times), np.array(states), 0, 0.0


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                   187 / 2100, 1 / 40])
_DP_E = _DP_B5 - _DP_B4


def dp45_step(f, t, y, h, k1):
    """One Dormand-Prince step.  Returns (y5, error_vector, k7)."""
    ks = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * k for a, k in zip(_DP_A[i], ks))
        ks.append(f(t + _DP_C[i] * h, yi))
    ks = np.array(ks)
    y5 = y + h * (_DP_B5 @ ks)
    err = h * (_DP_E @ ks)
    return y5, err, ks[6]


def _integrate_rk45(f, y0, cfg, names, timescale, t0):
    t_stop = t0 + cfg.t_end
    t, y, h = t0, y0.copy(), cfg.dt
    clamp = getattr(f, "clamp_index", -1)
    k1 = f(t, y)
    times, states = [t], [y.copy()]
    accepted = attempts = 0
    while t < t_stop:
        if attempts >= cfg.max_steps:
            raise TruncationError(f"max_steps={cfg.max_steps} reached at t={t:.6g}",
                                  Trajectory(times, states, names, timescale))
        attempts += 1
        h = min(h, t_stop - t)
        y_new, err, k7 = dp45_step(f, t, y, h, k1)
        scale = np.maximum(cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new)), cfg.abs_tol)
        ratio = float(np.max(np.abs(err) / scale))
        if not math.isfinite(ratio) or not np.all(np.abs(y_new) <= BLOWUP):
            if h < 1e-14 * max(1.0, abs(t)):
                raise DivergenceError(t, Trajectory(times, states, names, timescale))
            h *= 0.2
            continue
        if ratio <= 1.0:
            t = t + h if t_stop - t > h else t_stop
            y, k1 = y_new, k7
            if clamp >= 0 and not 0.0 <= y[clamp] <= 1.0:
                y[clamp] = min(1.0, max(0.0, y[clamp]))
                k1 = f(t, y)
            accepted += 1
            if accepted % cfg.record_every == 0 or t >= t_stop:
                times.append(t)
                states.append(y.copy())
        h *= min(5.0, max(0.2, 0.9 * ratio ** -0.2)) if ratio > 0 else 5.0
    return Trajectory(np.array(times), np.array(states), names, timescale)
