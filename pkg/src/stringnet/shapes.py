"""Built-in displacement/velocity profiles for initial and target data.

A :class:`VectorShape` is a smooth map x -> R^3 with an analytic (or spline)
first derivative, so strain data w1 = r_x can be seeded consistently with
w3 = r.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError


@dataclass(frozen=True)
class VectorShape:
    """r(x) in R^3 with derivative r_x(x); both vectorized over x."""

    value: Callable
    derivative: Callable

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))


def _directional(prof, dprof, direction) -> VectorShape:
    d = np.asarray(direction, dtype=float)
    return VectorShape(
        value=lambda x: np.asarray(prof(np.asarray(x, dtype=float)))[..., None] * d,
        derivative=lambda x: np.asarray(dprof(np.asarray(x, dtype=float)))[..., None] * d,
    )


def zero_shape() -> VectorShape:
    def z(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape + (3,))

    return VectorShape(value=z, derivative=z)


def bump_shape(amplitude: float, center: float, width: float, direction) -> VectorShape:
    """Compactly supported C^3 bump: A (1 - y^2)^4 on |y| < 1, y = (x-c)/w."""
    if width <= 0:
        raise ConfigError("bump width must be positive")

    def prof(x):
        y = (x - center) / width
        inside = np.abs(y) < 1.0
        out = np.zeros_like(y)
        out[inside] = amplitude * (1.0 - y[inside] ** 2) ** 4
        return out

    def dprof(x):
        y = (x - center) / width
        inside = np.abs(y) < 1.0
        out = np.zeros_like(y)
        out[inside] = -8.0 * amplitude * y[inside] * (1.0 - y[inside] ** 2) ** 3 / width
        return out

    return _directional(prof, dprof, direction)


def gaussian_shape(amplitude: float, center: float, width: float, direction) -> VectorShape:
    """A exp(-((x-c)/w)^2)."""
    if width <= 0:
        raise ConfigError("gaussian width must be positive")
    prof = lambda x: amplitude * np.exp(-(((x - center) / width) ** 2))
    dprof = lambda x: prof(x) * (-2.0 * (x - center) / width**2)
    return _directional(prof, dprof, direction)


def sine_shape(amplitude: float, wavenumber: int, length: float, direction) -> VectorShape:
    """A sin(k pi x / L); vanishes at both ends for integer k."""
    if wavenumber < 1:
        raise ConfigError("sine wavenumber must be a positive integer")
    k = np.pi * wavenumber / length
    return _directional(
        lambda x: amplitude * np.sin(k * x),
        lambda x: amplitude * k * np.cos(k * x),
        direction,
    )


def sampled_shape(x: np.ndarray, values: np.ndarray) -> VectorShape:
    """Cubic-spline interpolant of sampled 3-vector data."""
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape != (len(x), 3):
        raise ConfigError("sampled shape needs values of shape (n, 3)")
    spl = CubicSpline(x, values, axis=0)
    dspl = spl.derivative()
    return VectorShape(value=lambda xx: spl(xx), derivative=lambda xx: dspl(xx))


def shape_from_config(cfg: dict, length: float) -> VectorShape:
    """Build a shape from a scenario-file data block entry."""
    if cfg is None:
        return zero_shape()
    kind = cfg.get("shape", "zero")
    try:
        if kind == "zero":
            return zero_shape()
        if kind == "bump":
            return bump_shape(cfg["amplitude"], cfg["center"], cfg["width"], cfg["direction"])
        if kind == "gaussian":
            return gaussian_shape(cfg["amplitude"], cfg["center"], cfg["width"], cfg["direction"])
        if kind == "sine":
            return sine_shape(cfg["amplitude"], cfg.get("wavenumber", 1), length, cfg["direction"])
        if kind == "sampled":
            data = np.asarray(cfg["samples"], dtype=float)
            return sampled_shape(data[:, 0], data[:, 1:4])
    except KeyError as exc:
        raise ConfigError(f"data shape '{kind}' missing parameter {exc}") from exc
    raise ConfigError(f"unknown data shape '{kind}'")
