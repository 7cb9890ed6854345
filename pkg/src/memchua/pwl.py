"""Continuous piecewise-linear i-v curves.

A curve is stored as breakpoints, one slope per segment and a single anchor
point; segment intercepts are derived from the anchor by chaining continuity
across the breakpoints, so the curve is continuous by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# fitted four-slope curve of the composite diode/memristor element (SI units)
BREAKPOINTS = (-1.27, 0.0, 1.23)
ROUNDED_SLOPES = (-0.4691e-3, -0.7323e-3, -0.9350e-3, -0.6735e-3)

# measured (v, i) points the slopes were fitted through
MEASURED_POINTS = (
    (-6.1799, 3.2334e-3),
    (-1.27, 0.93e-3),
    (0.0, 0.0),
    (1.23, -1.15e-3),
    (6.1820, -4.4850e-3),
)


class PwlError(ValueError):
    pass


@dataclass(frozen=True)
class PwlCurve:
    breakpoints: tuple[float, ...]
    slopes: tuple[float, ...]
    anchor: tuple[float, float] = (0.0, 0.0)
    # intercept of each segment line, i = slope * v + offset
    offsets: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        sls = tuple(float(s) for s in self.slopes)
        anchor = (float(self.anchor[0]), float(self.anchor[1]))
        if len(sls) != len(bps) + 1:
            raise PwlError(
                f"need len(breakpoints) + 1 slopes, got {len(sls)} slopes "
                f"for {len(bps)} breakpoints"
            )
        if not all(math.isfinite(x) for x in bps + sls + anchor):
            raise PwlError("breakpoints, slopes and anchor must be finite")
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise PwlError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "slopes", sls)
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "offsets", _chain_offsets(bps, sls, anchor))

    @property
    def n_segments(self) -> int:
        return len(self.slopes)

    def segment(self, v: float) -> int:
        """Index of the segment containing ``v``; breakpoints belong to the right segment."""
        return int(np.searchsorted(self.breakpoints, v, side="right"))

    def __call__(self, v):
        return evaluate(self, v)


def _chain_offsets(bps, slopes, anchor):
    va, ia = anchor
    k0 = int(np.searchsorted(bps, va, side="right"))
    offsets = [0.0] * len(slopes)
    offsets[k0] = ia - slopes[k0] * va
    for k in range(k0 + 1, len(slopes)):
        b = bps[k - 1]
        offsets[k] = offsets[k - 1] + (slopes[k - 1] - slopes[k]) * b
    for k in range(k0 - 1, -1, -1):
        b = bps[k]
        offsets[k] = offsets[k + 1] + (slopes[k + 1] - slopes[k]) * b
    return tuple(offsets)


def paper_curve() -> PwlCurve:
    """The fitted composite-element curve: breakpoints -1.27/0/1.23 V, anchored at the origin.

    Slopes are taken through consecutive measured points rather than from the
    rounded :data:`ROUNDED_SLOPES`, so every measured point lies on the curve;
    they agree with the rounded values to four significant digits.
    """
    pts = MEASURED_POINTS
    slopes = tuple(slope_from_points(a, b) for a, b in zip(pts[:-1], pts[1:]))
    return PwlCurve(BREAKPOINTS, slopes, (0.0, 0.0))


def evaluate(curve: PwlCurve, v):
    """Current through the element at voltage ``v`` (scalar or array)."""
    va = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(va)):
        raise PwlError(f"voltage must be finite, got {v!r}")
    k = np.searchsorted(curve.breakpoints, va, side="right")
    i = np.asarray(curve.slopes)[k] * va + np.asarray(curve.offsets)[k]
    # keep anchor reproduction exact regardless of rounding in the offsets
    i = np.where(va == curve.anchor[0], curve.anchor[1], i)
    return float(i) if i.ndim == 0 else i


def derivative(curve: PwlCurve, v):
    """Local conductance dI/dV; at a breakpoint the right-hand segment wins."""
    va = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(va)):
        raise PwlError(f"voltage must be finite, got {v!r}")
    g = np.asarray(curve.slopes)[np.searchsorted(curve.breakpoints, va, side="right")]
    return float(g) if g.ndim == 0 else g


def slope_from_points(p1, p2) -> float:
    (v1, i1), (v2, i2) = p1, p2
    if v1 == v2:
        raise PwlError(f"degenerate points: both at v={v1}")
    return (i2 - i1) / (v2 - v1)


def shifted(curve: PwlCurve, conductance: float) -> PwlCurve:
    """Same curve with ``conductance`` added to every segment slope (anchor kept)."""
    return PwlCurve(
        curve.breakpoints, tuple(s + conductance for s in curve.slopes), curve.anchor
    )
