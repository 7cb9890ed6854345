"""CSV and text writers for run outputs.

All numbers are written with ``%.17g`` and LF line endings, so reruns of the
same configuration produce byte-identical files.  Trajectory times are written
in seconds; a ``# timescale=`` comment records the time unit used internally.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .analysis import BifurcationPoint, PowerReport, Spectrum
from .integrator import Trajectory
from .lyapunov import LyapunovRecord
from .rng import BitStats, bits_to_ascii, pack_bits

FMT = "%.17g"


def _fmt(x) -> str:
    return FMT % x


def write_table(path, header: Sequence[str], rows: np.ndarray, comments: Sequence[str] = ()):
    path = Path(path)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(header) + "\n")
        if rows.size:
            np.savetxt(fh, rows, fmt=FMT, delimiter=",", newline="\n")
    return path


def read_table(path) -> tuple[list[str], np.ndarray, dict]:
    """Header, data rows and ``key=value`` comment metadata of a CSV written here."""
    meta, header, rows = {}, None, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, sep, val = line[1:].strip().partition("=")
                if sep:
                    meta[key.strip()] = val.strip()
            elif header is None:
                header = [h.strip() for h in line.split(",")]
            else:
                rows.append([float(tok) for tok in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header line")
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return header, data, meta


def write_trajectory(path, traj: Trajectory):
    header = ["t", *traj.names, *traj.branch_names]
    cols = [traj.physical_times, traj.states]
    if traj.branch_currents is not None:
        cols.append(traj.branch_currents)
    return write_table(path, header, np.column_stack(cols),
                       comments=[f"timescale={_fmt(traj.timescale)}"])


def read_trajectory(path) -> Trajectory:
    header, data, meta = read_table(path)
    if not header or header[0] != "t":
        raise ValueError(f"{path}: first column must be t")
    ts = float(meta.get("timescale", 1.0))
    names = tuple(h for h in header[1:] if not h.startswith("i_"))
    branch = tuple(h for h in header[1:] if h.startswith("i_"))
    idx = [header.index(h) for h in names]
    bidx = [header.index(h) for h in branch]
    return Trajectory(data[:, 0] / ts, data[:, idx], names, ts,
                      data[:, bidx] if branch else None, branch)


def write_lyapunov(path, rec: LyapunovRecord):
    m = rec.exponents.shape[1]
    header = ["t", *[f"lambda{k + 1}" for k in range(m)]]
    return write_table(path, header, np.column_stack([rec.times, rec.exponents]),
                       comments=[f"timescale={_fmt(rec.timescale)}",
                                 "t and exponents in units of timescale seconds"])


def write_spectrum(path, sp: Spectrum):
    return write_table(path, ["freq_hz", "magnitude"],
                       np.column_stack([sp.frequencies, sp.magnitudes]),
                       comments=[f"window={sp.window}", f"n_points={sp.n_points}"])


def write_bifurcation(path, points: Sequence[BifurcationPoint], name: str):
    rows = [(p.value, m) for p in points for m in p.maxima]
    failed = [p for p in points if p.error]
    comments = [f"param={name}"] + [f"diverged={_fmt(p.value)}" for p in failed]
    return write_table(path, ["param_value", "v1_max"], np.array(rows).reshape(-1, 2), comments)


def write_power(csv_path, txt_path, report: PowerReport, branch_names=()):
    rows = report.rows(branch_names)
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("element,average_power_w\n")
        for label, p in rows:
            fh.write(f"{label.strip()},{_fmt(p)}\n")
        fh.write(f"energy_rate,{_fmt(report.energy_rate)}\n")
    Path(txt_path).write_text(report.table(branch_names) + "\n", encoding="utf-8")


def write_bits(path, bits, fmt: str = "ascii"):
    path = Path(path)
    if fmt == "ascii":
        path.write_text(bits_to_ascii(bits) + "\n", encoding="ascii")
    elif fmt == "bytes":
        path.write_bytes(pack_bits(bits))
    else:
        raise ValueError(f"unknown bit format {fmt!r}")
    return path


def write_bit_stats(csv_path, txt_path, stats: BitStats):
    row = stats.row()
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(row) + "\n")
        fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row.values()) + "\n")
    lines = [f"{k:<16}{v}" for k, v in row.items()]
    if not stats.z_reported:
        lines.append("z-scores not reported: too few bits or a single symbol")
    Path(txt_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
