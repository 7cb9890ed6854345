"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the verdict lines are printed
even under output capture.  Thresholds are the pinned ones and are not tuned.
"""
from __future__ import annotations

import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from memchua import cli
from memchua.analysis import power_report, power_spectrum, scroll_count, spectral_flatness
from memchua.config import load
from memchua.dynamics import CircuitParams, NonlinearElement, linear_field, rescale_time, vector_field
from memchua.integrator import IntegratorConfig, Trajectory, integrate
from memchua.lyapunov import LyapunovConfig, divergence_average, lyapunov_exponents
from memchua.memristor import MemristorParams, biolek_window, drive_sinusoidal, loop_area
from memchua.pwl import MEASURED_POINTS, evaluate, paper_curve
from memchua.rng import (ExtractorConfig, WhiteningExhaustedError, bit_statistics, extract_bits,
                         raw_bits)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def report(capsys):
    def _report(n, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[AC-{n:02d}] {'PASS' if ok else 'FAIL'}  {title}  {detail}")
        assert ok, f"criterion {n} ({title}) failed: {detail}"
    return _report


def _circuit(name):
    rc = load(CONFIGS / f"{name}.ini")
    return rc, rescale_time(rc.circuit)


def test_ac01_pwl_fidelity(report):
    curve = paper_curve()
    # the origin is one of the five points; it must be reproduced exactly
    worst = max(abs(evaluate(curve, v) - i) / abs(i) for v, i in MEASURED_POINTS if i)
    interior = [(-1.27, 0.93e-3), (1.23, -1.15e-3)]
    worst_bp = max(abs(evaluate(curve, v) - i) / abs(i) for v, i in interior)
    ok = worst < 5e-3 and worst_bp < 1e-6 and evaluate(curve, 0.0) == 0.0
    report(1, "PWL fidelity", ok, f"points rel={worst:.2e} breakpoints rel={worst_bp:.2e}")


def test_ac02_window_boundaries(report):
    grid = np.linspace(0.0, 1.0, 1000)
    ok, lo, hi = True, 1.0, 0.0
    for p in (1, 2, 10):
        ok &= biolek_window(1.0, 1e-3, p) == 0.0 and biolek_window(0.0, -1e-3, p) == 0.0
        for i in (-1e-3, 1e-3):
            vals = np.array([biolek_window(x, i, p) for x in grid])
            lo, hi = min(lo, vals.min()), max(hi, vals.max())
    ok &= lo >= 0.0 and hi <= 1.0
    report(2, "Biolek window boundaries", ok, f"range=[{lo:g}, {hi:g}]")


def test_ac03_pinched_hysteresis(report):
    mp = MemristorParams()
    areas, pinched = [], True
    for f, dt in ((1.0, 1e-3), (10.0, 1e-4)):
        out = drive_sinusoidal(mp, 0.5, 1.0, f, 2, dt)
        v, i = out[:, 1], out[:, 2]
        near = np.abs(v) < 1e-6
        pinched &= bool(near.any()) and bool(np.all(np.abs(i[near]) < 1e-6 / mp.r_on))
        areas.append(loop_area(v, i))
    ok = pinched and areas[1] < areas[0]
    report(3, "pinched hysteresis", ok, f"area(1 Hz)={areas[0]:.3e} area(10 Hz)={areas[1]:.3e}")


def test_ac04_rk4_order(report):
    f = linear_field([[-1.0]])
    errs = []
    dts = (1e-2, 5e-3, 2.5e-3)
    for dt in dts:
        tr = integrate(f, [1.0], IntegratorConfig(dt=dt, t_end=1.0))
        errs.append(abs(tr.states[-1, 0] - math.exp(-tr.times[-1])))
    slope = np.polyfit(np.log(dts), np.log(errs), 1)[0]
    report(4, "RK4 order", abs(slope - 4) <= 0.2, f"slope={slope:.3f}")


def test_ac05_lyapunov_oracle(report):
    rd = load(CONFIGS / "linear_decay.ini")
    lam_d = lyapunov_exponents(linear_field(rd.matrix), rd.initial, rd.lyapunov).final
    rel = np.max(np.abs(lam_d - [-1, -2, -3]) / [1, 2, 3])
    ro = load(CONFIGS / "oscillator.ini")
    lam_o = lyapunov_exponents(linear_field(ro.matrix), ro.initial, ro.lyapunov).final
    err = np.max(np.abs(lam_o - [0, 0, -1]))
    report(5, "Lyapunov oracle", rel < 0.02 and err < 0.02,
           f"decay={np.round(lam_d, 5)} rel={rel:.1e}; osc={np.round(lam_o, 5)} abs={err:.1e}")


def test_ac06_chaos_reproduction(report):
    rc, ts = _circuit("chaotic")
    rec = lyapunov_exponents(vector_field(rc.circuit, rc.element, ts), rc.initial, rc.lyapunov,
                             names=rc.state_names, timescale=ts)
    lam = rec.final
    chaos = lam[0] > 0 and lam.sum() < 0 and np.min(np.abs(lam)) < 0.05
    traj = integrate(vector_field(rc.circuit, rc.element, ts), rc.initial, rc.integrator,
                     timescale=ts)
    sc = scroll_count(traj, "v2", "iL", transient=rc.analysis.transient)
    ok = chaos and sc.is_double_scroll(min_crossings=20, min_turns=5)
    report(6, "chaos reproduction", ok,
           f"lambda={np.round(lam, 4)} sum={lam.sum():.4f} crossings={sc.sign_changes} "
           f"turns=({sc.turns[0]:.1f}, {sc.turns[1]:.1f})")


def test_ac07_power_balance(report):
    rc, ts = _circuit("chaotic")
    cfg = replace(rc.integrator, t_end=1e5 * rc.integrator.dt, record_every=1)
    traj = integrate(vector_field(rc.circuit, rc.element, ts), rc.initial, cfg, timescale=ts)
    p = power_report(traj.after(rc.analysis.transient), rc.circuit, rc.element)
    tol = 10 * cfg.rel_tol
    # absorbed powers sum to zero; storage power must match the energy change rate
    tellegen = abs(p.resistor + p.nonlinear + p.storage) / p.resistor
    storage = abs(p.storage - p.energy_rate) / p.resistor
    ok = tellegen < tol and storage < tol and p.resistor > 0 and p.nonlinear < 0
    report(7, "energy/power balance", ok,
           f"P_R={1e3 * p.resistor:.4f} mW P_NR={1e3 * p.nonlinear:.4f} mW "
           f"sum/P_R={tellegen:.1e} (P_st-dE/T)/P_R={storage:.1e} tol={tol:.0e}")


def test_ac08_spectral_evidence(report):
    n, k = 1024, 37
    t = np.arange(n)
    sp = power_spectrum(np.sin(2 * np.pi * k * t / n), 1.0)
    side = np.delete(sp.magnitudes, k).max() / sp.magnitudes[k]
    flat = {}
    for name in ("chaotic", "periodic"):
        rc, ts = _circuit(name)
        cfg = replace(rc.integrator, t_end=rc.analysis.transient + 4096 * 0.1, record_every=20)
        traj = integrate(vector_field(rc.circuit, rc.element, ts), rc.initial, cfg, timescale=ts)
        v2 = traj.after(rc.analysis.transient).column("v2")
        flat[name] = spectral_flatness(power_spectrum(v2, 0.1 * ts, window="hann"))
    ratio = flat["chaotic"] / flat["periodic"]
    ok = side < 1e-10 and ratio >= 5
    report(8, "spectral evidence", ok,
           f"side/peak={side:.1e} flatness chaotic={flat['chaotic']:.2e} "
           f"periodic={flat['periodic']:.2e} ratio={ratio:.1f}")


def test_ac09_lyapunov_sum_rule(report):
    parts, ok = [], True
    for name in ("chaotic", "periodic"):
        rc, ts = _circuit(name)
        rec = lyapunov_exponents(vector_field(rc.circuit, rc.element, ts), rc.initial,
                                 rc.lyapunov, names=rc.state_names, timescale=ts)
        div = divergence_average(rc.circuit, rc.element, rec.trajectory)
        rel = abs(rec.final.sum() - div) / abs(div)
        ok &= rel < 0.05
        parts.append(f"{name}: sum={rec.final.sum():.5f} div={div:.5f} rel={rel:.1e}")
    report(9, "Lyapunov sum rule", ok, "; ".join(parts))


def test_ac10_rng_health(report):
    rc, ts = _circuit("chaotic")
    n_raw = 100_000
    per_bit = rc.rng.sample_stride * rc.integrator.record_every * rc.integrator.dt
    cfg = replace(rc.integrator, t_end=rc.analysis.transient + n_raw * per_bit + 1.0,
                  max_steps=10**9)
    traj = integrate(vector_field(rc.circuit, rc.element, ts), rc.initial, cfg, timescale=ts)
    traj = traj.after(rc.analysis.transient)
    raw = raw_bits(traj, rc.rng)[:n_raw]
    bits = extract_bits(traj.slice(0, n_raw * rc.rng.sample_stride), rc.rng)
    st = bit_statistics(bits)
    constant = Trajectory(np.arange(1000.0), np.ones((1000, 3)))
    try:
        extract_bits(constant, ExtractorConfig(sample_stride=1))
        degenerate = False
    except WhiteningExhaustedError:
        degenerate = True
    ok = (len(raw) == n_raw and 0.45 <= st.ones_fraction <= 0.55 and abs(st.runs_z) < 4
          and degenerate)
    report(10, "RNG health", ok,
           f"raw={len(raw)} whitened={st.n_bits} ones={st.ones_fraction:.4f} "
           f"runs_z={st.runs_z:.2f} constant-source error={degenerate}")


def test_ac11_determinism(report, tmp_path):
    cfg = str(CONFIGS / "chaotic.ini")
    blobs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert cli.main(["simulate", "--config", cfg, "--out", str(out)]) == 0
        blobs.append((out / "trajectory.csv").read_bytes())
    report(11, "determinism", blobs[0] == blobs[1], f"{len(blobs[0])} bytes")
