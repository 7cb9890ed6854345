"""Post-processing of circuit trajectories.

Fourier amplitude spectra, phase-plane projections, a double-scroll check,
per-element average power and a local-maxima bifurcation scan.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from .dynamics import (CircuitParams, NonlinearElement, branch_currents, energy, rates,
                       rescale_time, vector_field)
from .integrator import IntegrationError, IntegratorConfig, Trajectory, integrate

WINDOWS = ("none", "hann")


# --- spectra ---------------------------------------------------------------

@dataclass
class Spectrum:
    frequencies: np.ndarray
    magnitudes: np.ndarray
    window: str
    n_points: int

    @property
    def power(self) -> np.ndarray:
        return self.magnitudes ** 2


def power_spectrum(signal, sample_dt: float, window: str = "none",
                   remove_mean: bool = True) -> Spectrum:
    """One-sided amplitude spectrum of a uniformly sampled signal.

    The signal is trimmed to the largest power of two not exceeding its length.
    Bins are scaled by 2/sum(w) (2/N without a window) so a bin-aligned
    sinusoid shows its own amplitude; DC and Nyquist bins by 1/sum(w).
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise ValueError("signal needs at least two samples")
    if window not in WINDOWS:
        raise ValueError(f"unknown window {window!r}, expected one of {WINDOWS}")
    if not sample_dt > 0:
        raise ValueError("sample_dt must be positive")
    n = 1 << (len(x).bit_length() - 1)
    x = x[:n]
    if remove_mean:
        x = x - x.mean()
    w = np.hanning(n) if window == "hann" else np.ones(n)
    mags = np.abs(np.fft.rfft(x * w)) * (2.0 / w.sum())
    mags[0] /= 2.0
    mags[-1] /= 2.0
    return Spectrum(np.fft.rfftfreq(n, sample_dt), mags, window, n)


def spectrum_energy(sp: Spectrum) -> float:
    """Mean square of the (windowless) signal implied by the amplitudes."""
    a = sp.magnitudes
    return float(a[0] ** 2 + a[-1] ** 2 + 0.5 * np.sum(a[1:-1] ** 2))


def spectral_flatness(sp: Spectrum) -> float:
    """Geometric over arithmetic mean of the power in the non-DC bins."""
    p = sp.power[1:]
    if not np.any(p > 0):
        return 0.0
    return float(np.exp(np.mean(np.log(np.maximum(p, 1e-300)))) / np.mean(p))


# --- phase plane -------------------------------------------------------------

def attractor_projection(traj: Trajectory, x_var: str = "v2", y_var: str = "iL",
                         transient: float = 0.0) -> np.ndarray:
    """(x_var, y_var) sample pairs after dropping ``transient`` time units."""
    kept = traj.after(transient) if transient > 0 else traj
    return np.column_stack([kept.column(x_var), kept.column(y_var)])


@dataclass
class ScrollCount:
    sign_changes: int
    turns: tuple[float, float]          # around (v1 < 0 centre, v1 > 0 centre)
    centers: tuple[tuple[float, float], tuple[float, float]]

    def is_double_scroll(self, min_crossings: int = 20, min_turns: float = 5.0) -> bool:
        c_neg, c_pos = (np.array(c) for c in self.centers)
        distinct = not np.allclose(c_neg, c_pos)
        return (self.sign_changes >= min_crossings and min(self.turns) >= min_turns
                and distinct)


def scroll_count(traj: Trajectory, x_var: str = "v2", y_var: str = "iL",
                 transient: float = 0.0) -> ScrollCount:
    """Count v1 sign changes and winding around the two lobe centres.

    Each lobe centre is the mean projected point of the samples with that
    sign of v1.  Winding is the net signed angle swept about the centre by
    consecutive samples that both lie in the lobe.
    """
    kept = traj.after(transient) if transient > 0 else traj
    v1 = kept.column("v1")
    pts = attractor_projection(kept, x_var, y_var)
    scale = pts.std(axis=0)
    scale[scale == 0] = 1.0
    pts = pts / scale
    sgn = np.sign(v1)
    nz = sgn[sgn != 0]
    crossings = int(np.count_nonzero(nz[1:] != nz[:-1]))
    turns, centers = [], []
    for mask in (v1 < 0, v1 > 0):
        if mask.sum() < 2:
            turns.append(0.0)
            centers.append((math.nan, math.nan))
            continue
        c = pts[mask].mean(axis=0)
        ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
        d = np.angle(np.exp(1j * np.diff(ang)))
        both = mask[1:] & mask[:-1]
        turns.append(abs(float(d[both].sum())) / (2 * math.pi))
        centers.append(tuple(c * scale))
    return ScrollCount(crossings, tuple(turns), tuple(centers))


# --- power accounting ----------------------------------------------------------

@dataclass
class PowerReport:
    resistor: float
    nonlinear: float
    nonlinear_branches: tuple[float, ...]
    c1: float
    c2: float
    inductor: float
    duration: float
    energy_change: float

    @property
    def storage(self) -> float:
        return self.c1 + self.c2 + self.inductor

    @property
    def total(self) -> float:
        return self.resistor + self.nonlinear + self.c1 + self.c2 + self.inductor

    @property
    def energy_rate(self) -> float:
        """(E_end - E_start) / duration, from the endpoint states."""
        return self.energy_change / self.duration

    def rows(self, branch_names: Sequence[str] = ()) -> list[tuple[str, float]]:
        rows = [("Linear resistor R", self.resistor),
                ("Non-linear element (total)", self.nonlinear)]
        names = list(branch_names) or [f"branch {k}" for k in range(len(self.nonlinear_branches))]
        if len(self.nonlinear_branches) > 1:
            rows += [(f"  {nm}", p) for nm, p in zip(names, self.nonlinear_branches)]
        rows += [("Capacitor C1", self.c1), ("Capacitor C2", self.c2),
                 ("Inductor L", self.inductor), ("Energy storage elements", self.storage),
                 ("Total", self.total)]
        return rows

    def table(self, branch_names: Sequence[str] = ()) -> str:
        lines = [f"{'Circuit element':<30}{'Average power (mW)':>20}", "-" * 50]
        lines += [f"{label:<30}{1e3 * p:>20.6f}" for label, p in self.rows(branch_names)]
        return "\n".join(lines)


def _time_average(values: np.ndarray, times: np.ndarray) -> float:
    return float(simpson(values, x=times) / (times[-1] - times[0]))


def power_report(traj: Trajectory, params: CircuitParams, elem: NonlinearElement) -> PowerReport:
    """Time-averaged power absorbed by each element, in watts.

    Storage-element powers use the state derivatives from the circuit
    equations.  By Tellegen's theorem the absorbed powers sum to zero at every
    instant, so ``total`` is a consistency residual rather than a consumption.
    """
    if len(traj) < 2 or traj.duration <= 0:
        raise ValueError("power report needs a trajectory of positive duration")
    s = traj.states
    t = traj.times
    v1, v2, il = s[:, 0], s[:, 1], s[:, 2]
    d = rates(params, elem, s)
    parts = branch_currents(elem, s)
    branch_p = tuple(_time_average(v1 * parts[:, k], t) for k in range(parts.shape[1]))
    e = energy(params, s)
    return PowerReport(
        resistor=_time_average((v1 - v2) ** 2 / params.r, t),
        nonlinear=_time_average(v1 * parts.sum(axis=1), t),
        nonlinear_branches=branch_p,
        c1=_time_average(params.c1 * v1 * d[:, 0], t),
        c2=_time_average(params.c2 * v2 * d[:, 1], t),
        inductor=_time_average(params.l * il * d[:, 2], t),
        duration=float(traj.physical_times[-1] - traj.physical_times[0]),
        energy_change=float(e[-1] - e[0]),
    )


# --- bifurcation scan ------------------------------------------------------------

SWEEPABLE = ("r", "c1", "c2", "l")


@dataclass
class BifurcationPoint:
    value: float
    maxima: np.ndarray
    error: Optional[str] = None


def local_maxima(x: np.ndarray, resolution: float = 1e-4) -> np.ndarray:
    """Distinct local maxima of ``x``, deduplicated on a grid of ``resolution``.

    Each three-point peak is refined to the vertex of the parabola through the
    peak and its neighbours, which removes most of the sampling-phase jitter.
    """
    x = np.asarray(x, dtype=float)
    if len(x) < 3:
        return np.empty(0)
    a, b, c = x[:-2], x[1:-1], x[2:]
    hit = (b > a) & (b >= c)
    a, b, c = a[hit], b[hit], c[hit]
    curv = a - 2 * b + c
    safe = np.where(curv < 0, curv, -1.0)
    peaks = np.where(curv < 0, b - (a - c) ** 2 / (8 * safe), b)
    return np.unique(np.round(peaks / resolution)) * resolution


def _scan_point(args):
    base, elem, name, value, s0, cfg, transient = args
    params = replace(base, **{name: float(value)})
    ts = rescale_time(params)
    try:
        traj = integrate(vector_field(params, elem, ts), s0, cfg,
                         names=elem.state_names, timescale=ts)
    except IntegrationError as exc:
        return BifurcationPoint(float(value), np.empty(0), str(exc))
    return BifurcationPoint(float(value), local_maxima(traj.after(transient).column("v1")))


def bifurcation_scan(base: CircuitParams, elem: NonlinearElement, name: str,
                     values: Sequence[float], s0, cfg: IntegratorConfig,
                     transient: float = 100.0, jobs: int = 1) -> list[BifurcationPoint]:
    """Distinct v1 maxima after ``transient`` for each value of parameter ``name``.

    ``cfg`` and ``transient`` are in units of sqrt(L*C2) of each sweep point.
    A point that diverges is reported with ``error`` set and no maxima.
    """
    if name not in SWEEPABLE:
        raise ValueError(f"cannot sweep {name!r}; choose one of {SWEEPABLE}")
    if any(not v > 0 for v in values):
        raise ValueError("sweep values must be positive")
    tasks = [(base, elem, name, v, s0, cfg, transient) for v in values]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_scan_point, tasks))
    return [_scan_point(t) for t in tasks]
