"""Boundary trace records, high-order derivative estimates, Hermite bridging."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

import numpy as np
from scipy.interpolate import BPoly

from .errors import ConfigError


@dataclass
class TraceRecord:
    """Uniformly sampled boundary data of one string end.

    ``channels`` maps channel names (subset of {"r", "rt", "rx"}) to arrays of
    shape (nt, 3) sampled at times t0 + k*dt.
    """

    string_id: int
    location: str                     # "0" or "L"
    t0: float
    dt: float
    channels: Dict[str, np.ndarray]
    smoothness: int = 1

    def __post_init__(self):
        lens = {len(v) for v in self.channels.values()}
        if len(lens) > 1:
            raise ConfigError("trace channels must share a common length")

    @property
    def n(self) -> int:
        return len(next(iter(self.channels.values())))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.n - 1)


def _edge_poly_derivatives(seg: np.ndarray, dt: float, at_start: bool, max_order: int):
    """Derivatives 0..max_order at one end of a uniformly sampled segment.

    Uses an interpolating polynomial through max_order + 4 points, giving
    one-sided finite differences of accuracy >= 4 for every order.
    """
    m = min(len(seg), max_order + 4)
    if m <= max_order:
        raise ConfigError("segment too short for requested derivative order")
    pts = seg[:m] if at_start else seg[-m:]
    coords = np.arange(m, dtype=float)
    t_eval = 0.0 if at_start else float(m - 1)
    out = []
    # vectorized over the 3 components
    coeff = np.polynomial.polynomial.polyfit(coords, pts, deg=m - 1)
    for k in range(max_order + 1):
        dk = np.polynomial.polynomial.polyder(coeff, k) if k else coeff
        val = np.polynomial.polynomial.polyval(t_eval, dk)
        out.append(np.asarray(val, dtype=float) / dt**k)
    return out


def uniform_derivative(vals: np.ndarray, dt: float, order: int) -> np.ndarray:
    """First or second time derivative of uniformly sampled data, 4th order.

    Central stencils in the interior, interpolating-polynomial one-sided
    stencils near the edges.
    """
    vals = np.asarray(vals, dtype=float)
    n = len(vals)
    if order not in (1, 2):
        raise ConfigError("uniform_derivative supports orders 1 and 2")
    if n < order + 5:
        raise ConfigError("too few samples for a 4th-order derivative")
    out = np.empty_like(vals)
    if order == 1:
        out[2:-2] = (-vals[4:] + 8 * vals[3:-1] - 8 * vals[1:-3] + vals[:-4]) / (12 * dt)
    else:
        out[2:-2] = (
            -vals[4:] + 16 * vals[3:-1] - 30 * vals[2:-2] + 16 * vals[1:-3] - vals[:-4]
        ) / (12 * dt * dt)
    m = order + 4
    coords = np.arange(m, dtype=float)
    head = np.polynomial.polynomial.polyfit(coords, vals[:m], deg=m - 1)
    tail = np.polynomial.polynomial.polyfit(coords, vals[-m:], deg=m - 1)
    dh = np.polynomial.polynomial.polyder(head, order)
    dtl = np.polynomial.polynomial.polyder(tail, order)
    for j in (0, 1):
        out[j] = np.polynomial.polynomial.polyval(float(j), dh) / dt**order
        out[n - 1 - j] = np.polynomial.polynomial.polyval(float(m - 1 - j), dtl) / dt**order
    return out


def connect_traces(left: TraceRecord, right: TraceRecord, order: int) -> TraceRecord:
    """Bridge two trace records across their gap with a two-point Hermite poly.

    The output grid runs from left.t0 to right.t_end at the shared dt; on the
    native intervals the inputs are copied exactly, in the gap each channel is
    the degree 2*order+1 Hermite interpolant matching value and derivatives up
    to ``order`` at both junction times (derivatives estimated by one-sided
    differences of 4th-order accuracy).
    """
    if abs(left.dt - right.dt) > 1e-14 * max(left.dt, right.dt):
        raise ConfigError("connect_traces requires a shared dt")
    if left.string_id != right.string_id or left.location != right.location:
        raise ConfigError("connect_traces requires records of the same string end")
    dt = left.dt
    gap_steps = int(round((right.t0 - left.t_end) / dt))
    if abs(right.t0 - left.t_end - gap_steps * dt) > 1e-9 * dt:
        raise ConfigError("trace grids are not commensurate")
    if gap_steps < order + 1:
        raise ConfigError(
            f"gap of {gap_steps} steps too short for an order-{order} bridge "
            f"(need at least {order + 1})"
        )
    if set(left.channels) != set(right.channels):
        raise ConfigError("connect_traces requires matching channel sets")

    n_total = left.n + gap_steps - 1 + right.n
    out = {}
    for name in left.channels:
        lv = left.channels[name]
        rv = right.channels[name]
        dl = _edge_poly_derivatives(lv, dt, at_start=False, max_order=order)
        dr = _edge_poly_derivatives(rv, dt, at_start=True, max_order=order)
        bp = BPoly.from_derivatives(
            [left.t_end, right.t0],
            [np.stack(dl, axis=0), np.stack(dr, axis=0)],
        )
        t_gap = left.t_end + dt * np.arange(1, gap_steps)
        arr = np.concatenate([lv, bp(t_gap), rv], axis=0)
        assert len(arr) == n_total
        out[name] = arr
    return TraceRecord(
        string_id=left.string_id,
        location=left.location,
        t0=left.t0,
        dt=dt,
        channels=out,
        smoothness=min(order, left.smoothness, right.smoothness),
    )


def slice_trace(rec: TraceRecord, i0: int, i1: int) -> TraceRecord:
    """Sub-record on sample indices [i0, i1]."""
    if not (0 <= i0 <= i1 < rec.n):
        raise ConfigError("trace slice out of range")
    return TraceRecord(
        string_id=rec.string_id,
        location=rec.location,
        t0=rec.t0 + i0 * rec.dt,
        dt=rec.dt,
        channels={k: v[i0 : i1 + 1].copy() for k, v in rec.channels.items()},
        smoothness=rec.smoothness,
    )
