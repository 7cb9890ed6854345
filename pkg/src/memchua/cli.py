"""Command-line front end: ``memchua <command> --config run.ini``.

Exit status is 0 on success, 1 when the numerics fail (divergence, degenerate
tangent frame, empty bit stream) and 2 when the configuration is invalid.
Every output goes under the configured output directory or ``--out``.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .analysis import (bifurcation_scan, power_report, power_spectrum, scroll_count,
                       spectral_flatness, attractor_projection)
from .config import ConfigError, RunConfig, load
from .dynamics import PWL_PLUS_MEMRISTOR, branch_currents, linear_field, rescale_time, vector_field
from .integrator import IntegrationError, Trajectory, integrate
from .lyapunov import DegenerateFrameError, divergence_average, lyapunov_exponents
from .rng import ExtractionError, bit_statistics, extract_bits

log = logging.getLogger("memchua")

COMMANDS = ("simulate", "fft", "attractor", "lyapunov", "power", "bifurcation", "rng", "validate")


class RuntimeFailure(RuntimeError):
    pass


def build_field(rc: RunConfig):
    """Compiled vector field and the seconds-per-unit of its time variable."""
    if rc.kind == "linear":
        return linear_field(rc.matrix), 1.0
    ts = rescale_time(rc.circuit) if rc.rescale else 1.0
    return vector_field(rc.circuit, rc.element, ts), ts


def _require_circuit(rc, command):
    if rc.kind != "circuit":
        raise ConfigError([("system.kind", f"command {command!r} needs kind = circuit")])


def _with_branches(rc, traj):
    if rc.kind == "circuit" and rc.element.mode == PWL_PLUS_MEMRISTOR:
        return replace(traj, branch_currents=branch_currents(rc.element, traj.states),
                       branch_names=("i_pwl", "i_mem"))
    return traj


def simulate(rc: RunConfig, out: Path, partial_name="trajectory.csv") -> Trajectory:
    """Integrate the configured system; on failure keep a ``.partial`` file."""
    f, ts = build_field(rc)
    try:
        traj = integrate(f, rc.initial, rc.integrator, timescale=ts)
    except IntegrationError as exc:
        if exc.trajectory is not None and len(exc.trajectory):
            path = out / (partial_name + ".partial")
            io.write_trajectory(path, _with_branches(rc, exc.trajectory))
            log.error("partial trajectory written to %s", path)
        raise
    return _with_branches(rc, traj)


def _input_trajectory(rc, out, args):
    if getattr(args, "trajectory", None):
        return io.read_trajectory(args.trajectory)
    return simulate(rc, out)


def _uniform(traj, name):
    t, y = traj.times, traj.column(name)
    steps = np.diff(t)
    if len(steps) and np.ptp(steps) > 1e-9 * steps.mean():
        t_new = np.linspace(t[0], t[-1], len(t))
        return np.interp(t_new, t, y), (t_new[1] - t_new[0]) * traj.timescale
    return y, float(steps.mean()) * traj.timescale


# --- commands ------------------------------------------------------------------

def cmd_simulate(rc, out, args):
    path = io.write_trajectory(out / "trajectory.csv", simulate(rc, out))
    return [path]


def cmd_fft(rc, out, args):
    traj = _input_trajectory(rc, out, args)
    source = args.column or rc.analysis.source
    kept = traj.after(rc.analysis.transient) if not args.trajectory else traj
    if len(kept) < 2:
        raise RuntimeFailure("fewer than two samples left after the transient")
    signal, sample_dt = _uniform(kept, source)
    sp = power_spectrum(signal, sample_dt, rc.analysis.window)
    k = int(np.argmax(sp.magnitudes[1:])) + 1
    summary = (f"source          {source}\n"
               f"points          {sp.n_points}\n"
               f"window          {sp.window}\n"
               f"peak_freq_hz    {sp.frequencies[k]:.9g}\n"
               f"peak_magnitude  {sp.magnitudes[k]:.9g}\n"
               f"flatness        {spectral_flatness(sp):.9g}\n")
    (out / "spectrum.txt").write_text(summary, encoding="utf-8")
    return [io.write_spectrum(out / "spectrum.csv", sp), out / "spectrum.txt"]


def cmd_attractor(rc, out, args):
    traj = _input_trajectory(rc, out, args)
    a = rc.analysis
    kept = traj.after(a.transient) if not args.trajectory else traj
    pts = attractor_projection(kept, a.x_var, a.y_var)
    paths = [io.write_table(out / "attractor.csv", [a.x_var, a.y_var], pts)]
    if "v1" in kept.names:
        sc = scroll_count(kept, a.x_var, a.y_var)
        text = (f"v1_sign_changes  {sc.sign_changes}\n"
                f"turns_negative   {sc.turns[0]:.3f}\n"
                f"turns_positive   {sc.turns[1]:.3f}\n"
                f"double_scroll    {sc.is_double_scroll()}\n")
        (out / "attractor.txt").write_text(text, encoding="utf-8")
        paths.append(out / "attractor.txt")
    return paths


def cmd_lyapunov(rc, out, args):
    f, ts = build_field(rc)
    names = rc.state_names
    rec = lyapunov_exponents(f, rc.initial, rc.lyapunov, names=names, timescale=ts)
    lines = [f"timescale_s   {ts:.9g}"]
    lines += [f"lambda{k + 1:<8d}{v: .6f}" for k, v in enumerate(rec.final)]
    lines.append(f"sum          {rec.final.sum(): .6f}")
    if rc.kind == "circuit":
        lines.append(f"divergence   {divergence_average(rc.circuit, rc.element, rec.trajectory): .6f}")
    else:
        lines.append(f"divergence   {np.trace(rc.matrix): .6f}")
    (out / "lyapunov.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [io.write_lyapunov(out / "lyapunov.csv", rec), out / "lyapunov.txt"]


def cmd_power(rc, out, args):
    _require_circuit(rc, "power")
    traj = simulate(rc, out).after(rc.analysis.transient)
    report = power_report(traj, rc.circuit, rc.element)
    branches = ("PWL diode branch", "Memristor branch") if rc.element.mode == PWL_PLUS_MEMRISTOR else ()
    io.write_power(out / "power.csv", out / "power.txt", report, branches)
    return [out / "power.csv", out / "power.txt"]


def cmd_bifurcation(rc, out, args):
    _require_circuit(rc, "bifurcation")
    a = rc.analysis
    values = args.values or a.bifurcation_values
    if not values:
        raise ConfigError([("analysis.bifurcation_values", "no sweep values given")])
    # peaks need every step; the recording stride only thins saved trajectories
    cfg = replace(rc.integrator, record_every=1)
    pts = bifurcation_scan(rc.circuit, rc.element, a.bifurcation_param, values, rc.initial,
                           cfg, a.bifurcation_transient, jobs=args.jobs)
    for p in pts:
        if p.error:
            log.warning("%s=%g: %s", a.bifurcation_param, p.value, p.error)
    return [io.write_bifurcation(out / "bifurcation.csv", pts, a.bifurcation_param)]


def cmd_rng(rc, out, args):
    traj = simulate(rc, out)
    if rc.kind == "circuit":
        traj = traj.after(rc.analysis.transient)
    bits = extract_bits(traj, rc.rng)
    stats = bit_statistics(bits)
    name = "bits.txt" if args.format == "ascii" else "bits.bin"
    io.write_bits(out / name, bits, args.format)
    io.write_bit_stats(out / "rng_stats.csv", out / "rng_stats.txt", stats)
    return [out / name, out / "rng_stats.csv", out / "rng_stats.txt"]


# --- plot scripts ----------------------------------------------------------------

_PLOT_HEAD = '''"""Plot {csv}; generated by memchua {cmd}."""
import numpy as np
import matplotlib.pyplot as plt

with open("{csv}") as fh:
    lines = [ln for ln in fh if not ln.startswith("#")]
header = lines[0].strip().split(",")
data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
'''

_PLOT_BODY = {
    "simulate": ("trajectory.csv", '''fig, axes = plt.subplots(len(header) - 1, 1, sharex=True)
for k, ax in enumerate(np.atleast_1d(axes), start=1):
    ax.plot(data[:, 0], data[:, k], lw=0.6)
    ax.set_ylabel(header[k])
axes[-1].set_xlabel("t (s)") if len(header) > 2 else None
'''),
    "fft": ("spectrum.csv", '''plt.semilogy(data[1:, 0], data[1:, 1], lw=0.6)
plt.xlabel("frequency (Hz)")
plt.ylabel("amplitude")
'''),
    "attractor": ("attractor.csv", '''plt.plot(data[:, 0], data[:, 1], lw=0.3)
plt.xlabel(header[0])
plt.ylabel(header[1])
'''),
    "lyapunov": ("lyapunov.csv", '''for k in range(1, len(header)):
    plt.plot(data[:, 0], data[:, k], label=header[k])
plt.axhline(0, color="k", lw=0.5)
plt.xlabel("t (scaled)")
plt.legend()
'''),
    "bifurcation": ("bifurcation.csv", '''plt.plot(data[:, 0], data[:, 1], ",k")
plt.xlabel("parameter value")
plt.ylabel("v1 maxima (V)")
'''),
}


def write_plot_script(command, out: Path):
    if command not in _PLOT_BODY:
        log.warning("no plot script for %s", command)
        return None
    csv, body = _PLOT_BODY[command]
    path = out / f"plot_{command}.py"
    text = _PLOT_HEAD.format(csv=csv, cmd=command) + body + "plt.tight_layout()\nplt.show()\n"
    path.write_text(text, encoding="utf-8")
    return path


# --- entry point -------------------------------------------------------------------

HANDLERS = {
    "simulate": cmd_simulate, "fft": cmd_fft, "attractor": cmd_attractor,
    "lyapunov": cmd_lyapunov, "power": cmd_power, "bifurcation": cmd_bifurcation,
    "rng": cmd_rng,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="memchua",
                                 description="Chua oscillator with a PWL/memristive element")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI run configuration")
        if name == "validate":
            continue
        p.add_argument("--out", help="output directory (overrides [output] dir)")
        p.add_argument("--plot-script", action="store_true",
                       help="also write a matplotlib script for the main CSV")
        if name in ("fft", "attractor"):
            p.add_argument("--trajectory", help="analyse this trajectory CSV instead of simulating")
        if name == "fft":
            p.add_argument("--column", help="state column to transform (default: analysis.source)")
        if name == "bifurcation":
            p.add_argument("--jobs", type=int, default=1, help="worker processes")
            p.add_argument("--values", type=float, nargs="+", help="override sweep values")
        if name == "rng":
            p.add_argument("--format", choices=("ascii", "bytes"), default="ascii")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        rc = load(args.config)
    except ConfigError as exc:
        for path, msg in exc.problems:
            print(f"{args.config}: {path}: {msg}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(f"{args.config}: ok")
        return 0
    if getattr(args, "jobs", 1) < 1:
        print("--jobs must be >= 1", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else rc.output_dir
    out.mkdir(parents=True, exist_ok=True)
    try:
        paths = HANDLERS[args.command](rc, out, args)
    except ConfigError as exc:
        for path, msg in exc.problems:
            print(f"{args.config}: {path}: {msg}", file=sys.stderr)
        return 2
    except (IntegrationError, DegenerateFrameError, ExtractionError, RuntimeFailure,
            KeyError, ValueError) as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return 1
    if args.plot_script:
        plot = write_plot_script(args.command, out)
        if plot:
            paths.append(plot)
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
