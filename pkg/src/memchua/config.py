"""Run configuration: an INI file with one section per concern.

Sections and keys (SI units; times in units of sqrt(L*C2) when ``rescale`` is on)::

    [system]        kind = circuit | linear ; matrix = rows separated by ';' (linear)
    [circuit]       c1, c2, l, r
    [element]       mode = pwl-only | pwl-plus-memristor ; pwl = paper | custom
    [element.pwl]   breakpoints, slopes, anchor            (pwl = custom)
    [element.mem]   r_on, r_off, d, mu_v, eta, p           (memristive mode)
    [initial]       state = comma-separated initial state
    [integrator]    method, dt, t_end, rel_tol, abs_tol, max_steps, record_every, rescale
    [analysis]      transient, source, window, x_var, y_var,
                    bifurcation_param, bifurcation_values, bifurcation_transient
    [lyapunov]      renorm_interval, t_transient, t_total, dt, record_every
    [rng]           source, sample_stride, method, whitening, t_cutoff
    [output]        dir

Every violation is collected with its dotted field path before anything runs.
"""
from __future__ import annotations

import configparser
import math
from types import SimpleNamespace
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import memristor as mem
from .dynamics import MODES, PWL_PLUS_MEMRISTOR, CircuitParams, NonlinearElement
from .integrator import IntegratorConfig
from .lyapunov import LyapunovConfig
from .pwl import PwlCurve, PwlError, paper_curve
from .rng import ExtractorConfig

SCHEMA = {
    "system": {"kind", "matrix"},
    "circuit": {"c1", "c2", "l", "r"},
    "element": {"mode", "pwl"},
    "element.pwl": {"breakpoints", "slopes", "anchor"},
    "element.mem": {"r_on", "r_off", "d", "mu_v", "eta", "p"},
    "initial": {"state"},
    "integrator": {"method", "dt", "t_end", "rel_tol", "abs_tol", "max_steps",
                   "record_every", "rescale"},
    "analysis": {"transient", "source", "window", "x_var", "y_var", "bifurcation_param",
                 "bifurcation_values", "bifurcation_transient"},
    "lyapunov": {"renorm_interval", "t_transient", "t_total", "dt", "record_every"},
    "rng": {"source", "sample_stride", "method", "whitening", "t_cutoff"},
    "output": {"dir"},
}


class ConfigError(ValueError):
    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        super().__init__("\n".join(f"{path}: {msg}" for path, msg in problems))


@dataclass
class AnalysisSettings:
    transient: float = 200.0
    source: str = "v2"
    window: str = "hann"
    x_var: str = "v2"
    y_var: str = "iL"
    bifurcation_param: str = "r"
    bifurcation_values: tuple[float, ...] = ()
    bifurcation_transient: float = 200.0


@dataclass
class RunConfig:
    kind: str = "circuit"
    circuit: Optional[CircuitParams] = None
    element: Optional[NonlinearElement] = None
    matrix: Optional[np.ndarray] = None
    initial: tuple[float, ...] = ()
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    rescale: bool = True
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    lyapunov: LyapunovConfig = field(default_factory=LyapunovConfig)
    rng: ExtractorConfig = field(default_factory=ExtractorConfig)
    output_dir: Path = Path("out")
    source_path: Optional[Path] = None

    @property
    def state_names(self) -> tuple[str, ...]:
        if self.kind == "linear":
            return tuple(f"y{k}" for k in range(len(self.initial)))
        return self.element.state_names


class _Reader:
    """Typed access to a parsed INI file that records problems instead of raising."""

    def __init__(self, cp: configparser.ConfigParser):
        self.cp = cp
        self.problems: list[tuple[str, str]] = []

    def has(self, section, key=None):
        if not self.cp.has_section(section):
            return False
        return key is None or self.cp.has_option(section, key)

    def raw(self, section, key, default=None):
        return self.cp.get(section, key) if self.has(section, key) else default

    def number(self, section, key, default=None, integer=False):
        text = self.raw(section, key)
        if text is None:
            if default is None:
                self.problems.append((f"{section}.{key}", "missing"))
            return default
        try:
            val = int(text) if integer else float(text)
        except ValueError:
            kind = "an integer" if integer else "a number"
            self.problems.append((f"{section}.{key}", f"expected {kind}, got {text!r}"))
            return default
        if not integer and not math.isfinite(val):
            self.problems.append((f"{section}.{key}", f"must be finite, got {text!r}"))
            return default
        return val

    def numbers(self, section, key, default=None):
        text = self.raw(section, key)
        if text is None:
            if default is None:
                self.problems.append((f"{section}.{key}", "missing"))
            return default
        try:
            return tuple(float(tok) for tok in text.replace(",", " ").split())
        except ValueError:
            self.problems.append((f"{section}.{key}", f"expected numbers, got {text!r}"))
            return default

    def choice(self, section, key, options, default):
        val = (self.raw(section, key, default) or "").strip()
        if val not in options:
            self.problems.append((f"{section}.{key}", f"expected one of {tuple(options)}, got {val!r}"))
            return default
        return val

    def flag(self, section, key, default):
        text = self.raw(section, key)
        if text is None:
            return default
        try:
            return self.cp.getboolean(section, key)
        except ValueError:
            self.problems.append((f"{section}.{key}", f"expected a boolean, got {text!r}"))
            return default

    def positive(self, section, key, default=None, integer=False):
        val = self.number(section, key, default, integer)
        if val is not None and not val > 0:
            self.problems.append((f"{section}.{key}", f"must be positive, got {val!r}"))
        return val

    def collect(self, section, problems):
        self.problems += [(f"{section}.{k}", msg) for k, msg in problems]


def parse(text: str, source_path: Optional[Path] = None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    try:
        cp.read_string(text, source=str(source_path or "<string>"))
    except configparser.Error as exc:
        raise ConfigError([("<file>", str(exc).replace("\n", " "))]) from None
    rd = _Reader(cp)
    for section in cp.sections():
        if section not in SCHEMA:
            rd.problems.append((section, "unknown section"))
            continue
        for key in cp.options(section):
            if key not in SCHEMA[section]:
                rd.problems.append((f"{section}.{key}", "unknown key"))

    rc = RunConfig(source_path=source_path)
    rc.kind = rd.choice("system", "kind", ("circuit", "linear"), "circuit")
    if rc.kind == "linear":
        _read_linear(rd, rc)
    else:
        _read_circuit(rd, rc)

    _read_integrator(rd, rc)
    _read_analysis(rd, rc)
    _read_lyapunov(rd, rc)
    _read_rng(rd, rc)
    out = rd.raw("output", "dir")
    rc.output_dir = Path(out) if out else Path("out") / (source_path.stem if source_path else "run")

    if rd.problems:
        raise ConfigError(rd.problems)
    return rc


def _read_linear(rd, rc):
    text = rd.raw("system", "matrix")
    if text is None:
        rd.problems.append(("system.matrix", "missing (required for kind = linear)"))
        return
    try:
        rows = [[float(t) for t in row.replace(",", " ").split()] for row in text.split(";")]
        a = np.array(rows, dtype=float)
    except ValueError:
        rd.problems.append(("system.matrix", f"not a numeric matrix: {text!r}"))
        return
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        rd.problems.append(("system.matrix", "must be square"))
        return
    rc.matrix = a
    rc.initial = rd.numbers("initial", "state", tuple([1.0] * a.shape[0]))
    if len(rc.initial) != a.shape[0]:
        rd.problems.append(("initial.state", f"need {a.shape[0]} components"))


def _read_circuit(rd, rc):
    if not rd.has("circuit"):
        rd.problems.append(("circuit", "missing section"))
    else:
        vals = {k: rd.positive("circuit", k) for k in ("c1", "c2", "l", "r")}
        if all(v is not None and v > 0 for v in vals.values()):
            rc.circuit = CircuitParams(**vals)

    mode = rd.choice("element", "mode", MODES, "pwl-only")
    which = rd.choice("element", "pwl", ("paper", "custom"), "paper")
    curve = paper_curve()
    if which == "custom":
        if not rd.has("element.pwl"):
            rd.problems.append(("element.pwl", "missing section (required for pwl = custom)"))
        else:
            bps = rd.numbers("element.pwl", "breakpoints", None)
            slopes = rd.numbers("element.pwl", "slopes", None)
            anchor = rd.numbers("element.pwl", "anchor", (0.0, 0.0))
            if anchor is not None and len(anchor) != 2:
                rd.problems.append(("element.pwl.anchor", "expected a (v, i) pair"))
            elif bps is not None and slopes is not None:
                if len(slopes) != len(bps) + 1:
                    rd.problems.append(("element.pwl.slopes",
                                        f"need len(breakpoints) + 1 = {len(bps) + 1} slopes, "
                                        f"got {len(slopes)}"))
                else:
                    try:
                        curve = PwlCurve(bps, slopes, anchor)
                    except PwlError as exc:
                        rd.problems.append(("element.pwl.breakpoints", str(exc)))
    elif rd.has("element.pwl"):
        rd.problems.append(("element.pwl", "section given but element.pwl = paper"))

    mparams = None
    if mode == PWL_PLUS_MEMRISTOR:
        if not rd.has("element.mem"):
            rd.problems.append(("element.mem", "missing section (required for pwl-plus-memristor)"))
        else:
            d = mem.MemristorParams()
            kw = {}
            for key in ("r_on", "r_off", "d", "mu_v"):
                kw[key] = rd.number("element.mem", key, getattr(d, key))
            for key in ("eta", "p"):
                kw[key] = rd.number("element.mem", key, getattr(d, key), integer=True)
            errs = mem.validate_params(SimpleNamespace(**kw))
            rd.collect("element.mem", errs)
            if not errs:
                mparams = mem.MemristorParams(**kw)
    elif rd.has("element.mem"):
        rd.problems.append(("element.mem", "memristor section given in pwl-only mode"))
    if mode != PWL_PLUS_MEMRISTOR or mparams is not None:
        rc.element = NonlinearElement(curve, mode, mparams)

    n = 4 if mode == PWL_PLUS_MEMRISTOR else 3
    default = (0.1, 0.0, 0.0, 0.5)[:n]
    rc.initial = rd.numbers("initial", "state", default) or default
    if len(rc.initial) != n:
        rd.problems.append(("initial.state", f"need {n} components for mode {mode}"))
    elif n == 4 and not 0.0 <= rc.initial[3] <= 1.0:
        rd.problems.append(("initial.state", "memristor width must lie in [0, 1]"))


def _read_integrator(rd, rc):
    d = IntegratorConfig()
    kw = dict(
        method=rd.raw("integrator", "method", d.method).strip(),
        dt=rd.number("integrator", "dt", d.dt),
        t_end=rd.number("integrator", "t_end", d.t_end),
        rel_tol=rd.number("integrator", "rel_tol", d.rel_tol),
        abs_tol=rd.number("integrator", "abs_tol", d.abs_tol),
        max_steps=rd.number("integrator", "max_steps", d.max_steps, integer=True),
        record_every=rd.number("integrator", "record_every", d.record_every, integer=True),
    )
    rc.rescale = rd.flag("integrator", "rescale", rc.kind == "circuit")
    errs = IntegratorConfig.problems(SimpleNamespace(**kw))
    rd.collect("integrator", errs)
    if not errs:
        rc.integrator = IntegratorConfig(**kw)


def _names(rc):
    # fall back to the circuit names when an earlier section already failed
    if (rc.kind == "linear" and rc.initial) or (rc.kind == "circuit" and rc.element):
        return rc.state_names
    return ("v1", "v2", "iL", "x")


def _read_analysis(rd, rc):
    d = AnalysisSettings()
    names = _names(rc)
    a = AnalysisSettings(
        transient=rd.number("analysis", "transient", d.transient),
        source=rd.choice("analysis", "source", names, names[min(1, len(names) - 1)]),
        window=rd.choice("analysis", "window", ("none", "hann"), d.window),
        x_var=rd.choice("analysis", "x_var", names, names[min(1, len(names) - 1)]),
        y_var=rd.choice("analysis", "y_var", names, names[min(2, len(names) - 1)]),
        bifurcation_param=rd.choice("analysis", "bifurcation_param", ("r", "c1", "c2", "l"),
                                    d.bifurcation_param),
        bifurcation_values=rd.numbers("analysis", "bifurcation_values", ()),
        bifurcation_transient=rd.number("analysis", "bifurcation_transient",
                                        d.bifurcation_transient),
    )
    if a.transient is not None and a.transient < 0:
        rd.problems.append(("analysis.transient", "must be >= 0"))
    if any(v <= 0 for v in a.bifurcation_values or ()):
        rd.problems.append(("analysis.bifurcation_values", "values must be positive"))
    rc.analysis = a


def _read_lyapunov(rd, rc):
    d = LyapunovConfig()
    kw = dict(
        renorm_interval=rd.number("lyapunov", "renorm_interval", d.renorm_interval),
        t_transient=rd.number("lyapunov", "t_transient", d.t_transient),
        t_total=rd.number("lyapunov", "t_total", d.t_total),
        dt=rd.number("lyapunov", "dt", rc.integrator.dt),
        record_every=rd.number("lyapunov", "record_every", 10, integer=True),
    )
    errs = LyapunovConfig.problems(SimpleNamespace(n_exponents=None, **kw))
    rd.collect("lyapunov", errs)
    if not errs:
        rc.lyapunov = LyapunovConfig(**kw)


def _read_rng(rd, rc):
    names = _names(rc)
    d = ExtractorConfig()
    cutoff = rd.raw("rng", "t_cutoff")
    kw = dict(
        source=rd.choice("rng", "source", names, d.source if d.source in names else names[0]),
        sample_stride=rd.number("rng", "sample_stride", d.sample_stride, integer=True),
        method=rd.raw("rng", "method", d.method).strip(),
        whitening=rd.raw("rng", "whitening", d.whitening).strip(),
        t_cutoff=rd.number("rng", "t_cutoff") if cutoff else None,
    )
    errs = ExtractorConfig.problems(SimpleNamespace(**kw))
    rd.collect("rng", errs)
    if not errs:
        rc.rng = ExtractorConfig(**kw)


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([("<file>", f"cannot read {path}: {exc.strerror}")]) from None
    return parse(text, path)
