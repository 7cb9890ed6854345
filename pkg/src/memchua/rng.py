"""Random bits from chaotic trajectories, plus a small statistical health check.

Bits are drawn from one state component every ``sample_stride`` samples,
either by comparing against the running median of the earlier draws or by
taking the least significant bit of a 16-bit quantization.  Von Neumann
whitening can then remove first-order bias.  The health check covers
monobit frequency, the Wald-Wolfowitz runs test and lag-1 autocorrelation;
it is a sanity screen, not a certification suite.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .integrator import Trajectory

METHODS = ("threshold-median", "lsb-quantize")
WHITENING = ("none", "von-neumann")


class ExtractionError(ValueError):
    pass


class EmptySourceError(ExtractionError):
    """The trajectory yielded no samples to draw from."""


class WhiteningExhaustedError(ExtractionError):
    """Raw bits existed but whitening discarded every pair."""


@dataclass(frozen=True)
class ExtractorConfig:
    source: str = "v2"
    sample_stride: int = 200
    method: str = "lsb-quantize"
    whitening: str = "von-neumann"
    # ignore samples at or after this time (trajectory units); None keeps all
    t_cutoff: Optional[float] = None

    def problems(self) -> list[tuple[str, str]]:
        errs = []
        if not (isinstance(self.sample_stride, int) and self.sample_stride >= 1):
            errs.append(("sample_stride", "must be an integer >= 1"))
        if self.method not in METHODS:
            errs.append(("method", f"expected one of {METHODS}"))
        if self.whitening not in WHITENING:
            errs.append(("whitening", f"expected one of {WHITENING}"))
        return errs

    def __post_init__(self):
        errs = self.problems()
        if errs:
            raise ValueError("; ".join(f"{k}: {v}" for k, v in errs))


def running_median_bits(samples: np.ndarray) -> np.ndarray:
    """1 where a sample exceeds the median of all earlier samples, else 0.

    The first sample is compared with itself and always yields 0.
    """
    low: list[float] = []   # max-heap via negation
    high: list[float] = []
    bits = np.zeros(len(samples), dtype=np.uint8)
    for k, s in enumerate(samples):
        if k:
            if len(low) > len(high):
                med = -low[0]
            else:
                med = 0.5 * (-low[0] + high[0])
            bits[k] = s > med
        if not low or s <= -low[0]:
            heapq.heappush(low, -s)
        else:
            heapq.heappush(high, s)
        if len(low) > len(high) + 1:
            heapq.heappush(high, -heapq.heappop(low))
        elif len(high) > len(low):
            heapq.heappush(low, -heapq.heappop(high))
    return bits


def lsb_bits(samples: np.ndarray) -> np.ndarray:
    lo, hi = float(samples.min()), float(samples.max())
    if hi == lo:
        return np.zeros(len(samples), dtype=np.uint8)
    q = np.floor((samples - lo) / (hi - lo) * 65535.0 + 0.5).astype(np.int64)
    return (q & 1).astype(np.uint8)


def von_neumann(bits: np.ndarray) -> np.ndarray:
    """Pairwise whitening: 01 -> 0, 10 -> 1, equal pairs dropped."""
    b = np.asarray(bits, dtype=np.uint8)
    pairs = b[: len(b) // 2 * 2].reshape(-1, 2)
    keep = pairs[:, 0] != pairs[:, 1]
    return pairs[keep, 0].copy()


def raw_bits(traj: Trajectory, cfg: ExtractorConfig) -> np.ndarray:
    kept = traj
    if cfg.t_cutoff is not None:
        kept = traj.slice(0, int(np.searchsorted(traj.times, cfg.t_cutoff)))
    samples = kept.column(cfg.source)[:: cfg.sample_stride]
    if len(samples) == 0:
        raise EmptySourceError("no samples to draw bits from")
    if cfg.method == "threshold-median":
        return running_median_bits(samples)
    return lsb_bits(samples)


def extract_bits(traj: Trajectory, cfg: ExtractorConfig) -> np.ndarray:
    bits = raw_bits(traj, cfg)
    if cfg.whitening == "von-neumann":
        out = von_neumann(bits)
        if len(out) == 0:
            raise WhiteningExhaustedError(
                f"von Neumann whitening discarded all {len(bits)} raw bits"
            )
        return out
    return bits


@dataclass
class BitStats:
    n_bits: int
    ones_fraction: float
    runs_count: int
    runs_z: float
    autocorr_lag1: float
    # False when the sample is too short (or degenerate) for z-scores
    z_reported: bool = True

    def row(self) -> dict:
        return dict(n_bits=self.n_bits, ones_fraction=self.ones_fraction,
                    runs_count=self.runs_count, runs_z=self.runs_z,
                    autocorr_lag1=self.autocorr_lag1, z_reported=self.z_reported)


MIN_BITS_FOR_Z = 100


def bit_statistics(bits) -> BitStats:
    b = np.asarray(bits, dtype=np.int64)
    n = len(b)
    if n == 0:
        raise ValueError("no bits")
    ones = int(b.sum())
    zeros = n - ones
    runs = 1 + int(np.count_nonzero(b[1:] != b[:-1]))
    z = math.nan
    reported = False
    if n >= MIN_BITS_FOR_Z and ones and zeros:
        mu = 2.0 * ones * zeros / n + 1.0
        var = 2.0 * ones * zeros * (2.0 * ones * zeros - n) / (n * n * (n - 1.0))
        if var > 0:
            z = (runs - mu) / math.sqrt(var)
            reported = True
    ac = math.nan
    if n > 2:
        a, c = b[:-1].astype(float), b[1:].astype(float)
        if a.std() > 0 and c.std() > 0:
            ac = float(np.corrcoef(a, c)[0, 1])
    return BitStats(n, ones / n, runs, z, ac, reported)


def pack_bits(bits) -> bytes:
    """Pack bits most-significant first; a short final byte is zero-padded."""
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes()


def bits_to_ascii(bits) -> str:
    return "".join("1" if x else "0" for x in bits)
