"""HP memristor with the Biolek window.

The state is the normalized doped width ``x = w / D`` in [0, 1].  Memristance
interpolates linearly between ``r_off`` (x = 0) and ``r_on`` (x = 1); the width
drifts with the device current, scaled by the Biolek window so that drift stops
at whichever boundary the current pushes towards.

Default constants are placeholders for the HP TiO2 device, not measured values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class MemristorError(ValueError):
    pass


@dataclass(frozen=True)
class MemristorParams:
    r_on: float = 100.0
    r_off: float = 16e3
    d: float = 10e-9
    mu_v: float = 1e-14
    eta: int = 1
    p: int = 2

    def __post_init__(self):
        errors = validate_params(self)
        if errors:
            raise MemristorError("; ".join(f"{k}: {v}" for k, v in errors))

    @property
    def drift_rate(self) -> float:
        """eta * mu_v * r_on / d**2, the x-rate per ampere with an open window."""
        return self.eta * self.mu_v * self.r_on / self.d**2


def validate_params(p) -> list[tuple[str, str]]:
    """Invariant violations as (field, message) pairs; empty when valid."""
    errs = []
    for name in ("r_on", "r_off", "d", "mu_v"):
        val = getattr(p, name)
        if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
            errs.append((name, f"must be positive and finite, got {val!r}"))
    if not errs and not p.r_on < p.r_off:
        errs.append(("r_off", f"need r_on < r_off, got {p.r_on} >= {p.r_off}"))
    if p.eta not in (1, -1):
        errs.append(("eta", f"must be +1 or -1, got {p.eta!r}"))
    if not (isinstance(p.p, (int, np.integer)) and p.p >= 1):
        errs.append(("p", f"must be an integer >= 1, got {p.p!r}"))
    return errs


def memristance(params: MemristorParams, x: float) -> float:
    return params.r_on * x + params.r_off * (1.0 - x)


def step_function(i: float) -> int:
    return 1 if i >= 0 else 0


def biolek_window(x: float, i: float, p: int) -> float:
    return 1.0 - (x - step_function(-i)) ** (2 * p)


def width_derivative(params: MemristorParams, x: float, i: float) -> float:
    """Rate of change of x (1/s) for device current ``i``."""
    return params.drift_rate * i * biolek_window(x, i, params.p)


def clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


def drive_sinusoidal(params: MemristorParams, x0: float, amplitude: float,
                     frequency: float, cycles: float, dt: float) -> np.ndarray:
    """Drive the device with ``amplitude * sin(2 pi f t)`` and record the response.

    Returns an array with columns ``t, v, i, x``.  The state is advanced with
    classical RK4 and clamped to [0, 1] after every step.
    """
    if not (dt > 0 and frequency > 0):
        raise MemristorError("dt and frequency must be positive")
    if dt * frequency >= 0.01:
        raise MemristorError(
            f"under-resolved drive: dt*frequency = {dt * frequency:g} >= 0.01"
        )
    if not 0.0 <= x0 <= 1.0:
        raise MemristorError(f"x0 must lie in [0, 1], got {x0}")

    omega = 2.0 * math.pi * frequency
    n = int(math.ceil(cycles / (frequency * dt)))

    def rate(t, x):
        v = amplitude * math.sin(omega * t)
        return width_derivative(params, x, v / memristance(params, x))

    out = np.empty((n + 1, 4))
    x = float(x0)
    for k in range(n + 1):
        t = k * dt
        v = amplitude * math.sin(omega * t)
        out[k] = (t, v, v / memristance(params, x), x)
        if k == n:
            break
        k1 = rate(t, x)
        k2 = rate(t + dt / 2, clamp(x + dt / 2 * k1))
        k3 = rate(t + dt / 2, clamp(x + dt / 2 * k2))
        k4 = rate(t + dt, clamp(x + dt * k3))
        x = clamp(x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
    return out


def loop_area(v: np.ndarray, i: np.ndarray) -> float:
    """Unsigned area enclosed by the i-v curve, summed over both lobes.

    A pinched loop has lobes of opposite orientation, so the shoelace sum is
    taken separately over the positive- and negative-voltage halves.
    """
    total = 0.0
    for mask in (v >= 0, v <= 0):
        vv, ii = v[mask], i[mask]
        if len(vv) > 2:
            total += abs(0.5 * np.sum(vv * np.roll(ii, -1) - np.roll(vv, -1) * ii))
    return total
