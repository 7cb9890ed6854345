"""State equations of the Chua oscillator with a piecewise-linear nonlinear element.

Three-state mode integrates ``(v1, v2, iL)`` with the nonlinear current taken
from a :class:`PwlCurve`.  The memristive mode adds the normalized memristor
width ``x`` as a fourth state; the nonlinear element is then a PWL diode branch
in parallel with a live HP memristor.

Everything here works in physical units (volts, amperes, seconds).  Passing a
``timescale`` to :func:`vector_field` multiplies all rates by it, which is the
same as integrating in time units of ``timescale`` seconds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels as K
from . import memristor as mem
from .pwl import PwlCurve, derivative as pwl_slope, evaluate as pwl_eval

PWL_ONLY = "pwl-only"
PWL_PLUS_MEMRISTOR = "pwl-plus-memristor"
MODES = (PWL_ONLY, PWL_PLUS_MEMRISTOR)

STATE_NAMES = ("v1", "v2", "iL", "x")


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class CircuitParams:
    c1: float
    c2: float
    l: float
    r: float

    def __post_init__(self):
        for name in ("c1", "c2", "l", "r"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise ConfigurationError(f"{name} must be positive and finite, got {val!r}")


@dataclass(frozen=True)
class NonlinearElement:
    pwl: PwlCurve
    mode: str = PWL_ONLY
    mem: Optional[mem.MemristorParams] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if (self.mem is not None) != (self.mode == PWL_PLUS_MEMRISTOR):
            raise ConfigurationError(
                "memristor parameters are required in pwl-plus-memristor mode "
                "and not allowed in pwl-only mode"
            )

    @property
    def n_states(self) -> int:
        return 4 if self.mode == PWL_PLUS_MEMRISTOR else 3

    @property
    def state_names(self) -> tuple[str, ...]:
        return STATE_NAMES[: self.n_states]


def nonlinear_current(elem: NonlinearElement, v: float, x: Optional[float] = None):
    """Total element current and the per-branch parts ``(i_pwl[, i_mem])``."""
    i_pwl = pwl_eval(elem.pwl, v)
    if elem.mode == PWL_ONLY:
        return i_pwl, (i_pwl,)
    if x is None:
        raise ConfigurationError("memristor width x is required in pwl-plus-memristor mode")
    i_mem = v / mem.memristance(elem.mem, x)
    return i_pwl + i_mem, (i_pwl, i_mem)


def _check_state(elem, state):
    s = np.asarray(state, dtype=float)
    if s.shape != (elem.n_states,):
        raise ConfigurationError(
            f"state must have {elem.n_states} components {elem.state_names}, got shape {s.shape}"
        )
    if not np.all(np.isfinite(s)):
        raise ConfigurationError(f"state must be finite, got {s}")
    if elem.n_states == 4 and not 0.0 <= s[3] <= 1.0:
        raise ConfigurationError(f"memristor width must lie in [0, 1], got {s[3]}")
    return s


def derivative(params: CircuitParams, elem: NonlinearElement, state) -> np.ndarray:
    """Time derivative of the state (physical units, per second)."""
    s = _check_state(elem, state)
    v1, v2, il = s[:3]
    x = s[3] if elem.n_states == 4 else None
    i_r, parts = nonlinear_current(elem, v1, x)
    g = (v1 - v2) / params.r
    out = [(-g - i_r) / params.c1, (g + il) / params.c2, -v2 / params.l]
    if x is not None:
        out.append(mem.width_derivative(elem.mem, x, parts[1]))
    return np.array(out)


def jacobian(params: CircuitParams, elem: NonlinearElement, state) -> np.ndarray:
    """Partial derivatives of :func:`derivative` with respect to the state.

    The PWL contribution uses the right-hand segment at a breakpoint.
    """
    s = _check_state(elem, state)
    v1 = s[0]
    n = elem.n_states
    c1, c2, r = params.c1, params.c2, params.r
    J = np.zeros((n, n))
    dir_dv1 = pwl_slope(elem.pwl, v1)
    if n == 4:
        mp, x = elem.mem, s[3]
        m = mem.memristance(mp, x)
        dm = mp.r_on - mp.r_off
        i_m = v1 / m
        dim_dx = -v1 * dm / m**2
        dir_dv1 += 1.0 / m
        win = mem.biolek_window(x, i_m, mp.p)
        dwin_dx = -2 * mp.p * (x - mem.step_function(-i_m)) ** (2 * mp.p - 1)
        J[0, 3] = -dim_dx / c1
        J[3, 0] = mp.drift_rate * win / m
        J[3, 3] = mp.drift_rate * (dim_dx * win + i_m * dwin_dx)
    J[0, 0] = -(1.0 / r + dir_dv1) / c1
    J[0, 1] = 1.0 / (r * c1)
    J[1, 0] = 1.0 / (r * c2)
    J[1, 1] = -1.0 / (r * c2)
    J[1, 2] = 1.0 / c2
    J[2, 1] = -1.0 / params.l
    return J


def energy(params: CircuitParams, states) -> np.ndarray:
    """Stored energy 0.5*C1*v1^2 + 0.5*C2*v2^2 + 0.5*L*iL^2 per state row."""
    s = np.atleast_2d(states)
    return 0.5 * (params.c1 * s[:, 0] ** 2 + params.c2 * s[:, 1] ** 2 + params.l * s[:, 2] ** 2)


def rescale_time(params: CircuitParams) -> float:
    """Natural time unit sqrt(L*C2) of the LC tank, in seconds."""
    return math.sqrt(abs(params.l * params.c2))


def pack(params: CircuitParams, elem: NonlinearElement, timescale: float = 1.0) -> np.ndarray:
    """Flatten circuit and element into the parameter vector used by the kernels."""
    head = np.zeros(K.HEAD)
    head[K.C1], head[K.C2], head[K.L], head[K.R] = params.c1, params.c2, params.l, params.r
    head[K.TSCALE] = timescale
    head[K.NSEG] = elem.pwl.n_segments
    if elem.mode == PWL_PLUS_MEMRISTOR:
        mp = elem.mem
        head[K.MODE] = 1.0
        head[K.RON], head[K.ROFF] = mp.r_on, mp.r_off
        head[K.DRIFT], head[K.PEXP] = mp.drift_rate, mp.p
    return np.concatenate([head, elem.pwl.breakpoints, elem.pwl.slopes, elem.pwl.offsets])


@dataclass(frozen=True)
class CompiledField:
    """A vector field backed by numba kernels, with an optional Jacobian.

    Callable like a plain field, ``f(t, y) -> dy/dt``, so every integrator
    accepts it; the fixed-step integrators use the compiled loop directly.
    """
    rhs: Callable
    prm: np.ndarray
    dim: int
    jac: Optional[Callable] = None
    clamp_index: int = -1
    names: tuple[str, ...] = ()

    def __call__(self, t, y):
        out = np.empty(self.dim)
        self.rhs(float(t), np.asarray(y, dtype=float), self.prm, out)
        return out

    def jacobian(self, y):
        out = np.empty((self.dim, self.dim))
        self.jac(np.asarray(y, dtype=float), self.prm, out)
        return out


def vector_field(params: CircuitParams, elem: NonlinearElement,
                 timescale: float = 1.0) -> CompiledField:
    clamp_index = 3 if elem.n_states == 4 else -1
    return CompiledField(K.circuit_rhs, pack(params, elem, timescale), elem.n_states,
                         K.circuit_jac, clamp_index, elem.state_names)


def linear_field(matrix) -> CompiledField:
    """Field y' = A y for a constant square matrix (test fixtures)."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigurationError(f"matrix must be square, got shape {a.shape}")
    return CompiledField(K.linear_rhs, a.ravel().copy(), a.shape[0], K.linear_jac)


def branch_currents(elem: NonlinearElement, states: np.ndarray) -> np.ndarray:
    """Per-branch element currents for each state row: columns (i_pwl[, i_mem])."""
    v1 = states[:, 0]
    i_pwl = pwl_eval(elem.pwl, v1)
    if elem.mode == PWL_ONLY:
        return np.asarray(i_pwl).reshape(-1, 1)
    m = elem.mem.r_on * states[:, 3] + elem.mem.r_off * (1.0 - states[:, 3])
    return np.column_stack([i_pwl, v1 / m])


def rates(params: CircuitParams, elem: NonlinearElement, states: np.ndarray) -> np.ndarray:
    """Vectorized :func:`derivative` over state rows (physical units)."""
    v1, v2, il = states[:, 0], states[:, 1], states[:, 2]
    parts = branch_currents(elem, states)
    i_r = parts.sum(axis=1)
    g = (v1 - v2) / params.r
    cols = [(-g - i_r) / params.c1, (g + il) / params.c2, -v2 / params.l]
    if elem.n_states == 4:
        mp, x, i_m = elem.mem, states[:, 3], parts[:, 1]
        stp = (-i_m >= 0).astype(float)
        cols.append(mp.drift_rate * i_m * (1.0 - (x - stp) ** (2 * mp.p)))
    return np.column_stack(cols)
