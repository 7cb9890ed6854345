"""Chua oscillator with a piecewise-linear / memristive nonlinear element."""
from .analysis import (PowerReport, Spectrum, attractor_projection, bifurcation_scan,
                       local_maxima, power_report, power_spectrum, scroll_count,
                       spectral_flatness)
from .config import ConfigError, RunConfig, load
from .dynamics import (PWL_ONLY, PWL_PLUS_MEMRISTOR, CircuitParams, ConfigurationError,
                       NonlinearElement, derivative, energy, jacobian, linear_field,
                       rescale_time, vector_field)
from .integrator import (DivergenceError, IntegrationError, IntegratorConfig, Trajectory,
                         integrate)
from .lyapunov import LyapunovConfig, divergence_average, lyapunov_exponents, lyapunov_spectrum
from .memristor import MemristorParams, biolek_window, drive_sinusoidal, memristance
from .pwl import PwlCurve, evaluate, paper_curve
from .rng import ExtractorConfig, bit_statistics, extract_bits

__version__ = "0.1.0"
