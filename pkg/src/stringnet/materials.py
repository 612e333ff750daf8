"""Elastic material laws: stress map, Jacobian, characteristic frames, Riemann variables.

A material is defined by a stored-energy density V(s) of the local stretch
s = |R_x|, with V(1) = 0, V_s(1) = 0 and V_ss > 0 on its domain.  The tension
in a string with strain vector v is

    G(v) = V_s(|v|) * v / |v|

and its Jacobian

    G_v(v) = V_ss(|v|) vv^T/|v|^2 + (V_s(|v|)/|v|) (I - vv^T/|v|^2),

which is symmetric positive definite whenever |v| > 1.  The hyperbolic
structure of the string equations is carried by the eigen-decomposition
rho^-1 G_v = Q diag(mu^2) Q^T with

    mu_1^2 = V_ss(|v|)/rho,   mu_2^2 = mu_3^2 = V_s(|v|)/(|v| rho).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, NumericalAbort

#: Minimum allowed angle (radians) between a strain vector and the frame axis.
THETA_MIN = 1e-3

#: Stretched-regime guard: solver states must keep |R_x| >= 1 + DELTA_STRETCH.
DELTA_STRETCH = 1e-6


@dataclass(frozen=True)
class MaterialLaw:
    """Elastic potential V(s) with first and second derivatives.

    Use :meth:`hookean` or :meth:`custom` to construct; the callables must
    accept numpy arrays.
    """

    name: str
    V: Callable
    Vs: Callable
    Vss: Callable
    domain: tuple = (0.0, np.inf)
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    @classmethod
    def hookean(cls, h: float, name: str = "hookean") -> "MaterialLaw":
        """Quadratic potential V(s) = h (s-1)^2 / 2."""
        if h <= 0:
            raise ConfigError(f"hookean stiffness must be positive, got {h}")
        return cls(
            name=name,
            V=lambda s: 0.5 * h * (s - 1.0) ** 2,
            Vs=lambda s: h * (s - 1.0),
            Vss=lambda s: h * np.ones_like(np.asarray(s, dtype=float)),
            domain=(0.0, np.inf),
            kind="hookean",
            params={"h": h},
        )

    @classmethod
    def custom(cls, V, Vs, Vss, domain, name: str = "custom") -> "MaterialLaw":
        """User-supplied potential; derivative consistency is spot-checked."""
        a, b = domain
        if not (a < 1.0 < b):
            raise ConfigError(f"material domain {domain} must contain s = 1")
        law = cls(name=name, V=V, Vs=Vs, Vss=Vss, domain=(a, b), kind="custom")
        law._check_axioms()
        return law

    def _check_axioms(self, n_samples: int = 32) -> None:
        if abs(float(self.V(1.0))) > 1e-12 or abs(float(self.Vs(1.0))) > 1e-12:
            raise ConfigError(f"material '{self.name}': V(1) and V_s(1) must vanish")
        a, b = self.domain
        lo = max(a, 1.0 - 0.5) + 1e-9
        hi = min(b, 1.0 + 2.0) - 1e-9
        s = np.linspace(lo, hi, n_samples)
        if np.any(self.Vss(s) <= 0):
            raise ConfigError(f"material '{self.name}': V_ss must be positive on the domain")
        # finite-difference spot check of the supplied derivatives
        eps = 1e-6
        fd1 = (self.V(s + eps) - self.V(s - eps)) / (2 * eps)
        fd2 = (self.Vs(s + eps) - self.Vs(s - eps)) / (2 * eps)
        scale = 1.0 + np.max(np.abs(self.Vss(s)))
        if np.max(np.abs(fd1 - self.Vs(s))) > 1e-4 * scale:
            raise ConfigError(f"material '{self.name}': V_s inconsistent with V")
        if np.max(np.abs(fd2 - self.Vss(s))) > 1e-4 * scale:
            raise ConfigError(f"material '{self.name}': V_ss inconsistent with V_s")


def _norms(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    s = np.linalg.norm(v, axis=-1)
    if np.any(s <= 0):
        raise NumericalAbort("zero strain vector: stress direction undefined")
    return s


def _check_domain(law: MaterialLaw, s: np.ndarray) -> None:
    a, b = law.domain
    if np.any(s <= a) or np.any(s >= b):
        raise NumericalAbort(
            f"strain magnitude outside material domain ({a}, {b}): "
            f"range [{np.min(s):.6g}, {np.max(s):.6g}]"
        )


def check_stretched(s, delta: float = DELTA_STRETCH, what: str = "strain") -> None:
    """Assert the stretched regime |v| >= 1 + delta; abort otherwise."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 1.0 + delta):
        idx = np.unravel_index(int(np.argmin(s)), s.shape)
        raise NumericalAbort(
            f"stretched-regime violation: {what} magnitude {float(np.min(s)):.9g} "
            f"< 1 + {delta:g} at index {idx}"
        )


def stress(law: MaterialLaw, v: np.ndarray) -> np.ndarray:
    """Tension G(v) = V_s(|v|) v/|v|.  Vectorized over leading axes of v."""
    v = np.asarray(v, dtype=float)
    s = _norms(v)
    _check_domain(law, s)
    return (law.Vs(s) / s)[..., None] * v


def stress_jacobian(law: MaterialLaw, v: np.ndarray) -> np.ndarray:
    """Jacobian G_v(v), shape (..., 3, 3), symmetric."""
    v = np.asarray(v, dtype=float)
    s = _norms(v)
    _check_domain(law, s)
    unit = v / s[..., None]
    proj = unit[..., :, None] * unit[..., None, :]
    eye = np.broadcast_to(np.eye(3), proj.shape)
    a = law.Vss(s)[..., None, None]
    b = (law.Vs(s) / s)[..., None, None]
    return a * proj + b * (eye - proj)


def stress_jacobian_apply(law: MaterialLaw, v: np.ndarray, u: np.ndarray) -> np.ndarray:
    """G_v(v) @ u without forming the matrices (hot path helper)."""
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    s = _norms(v)
    par = np.sum(v * u, axis=-1) / (s * s)
    a = law.Vss(s)
    b = law.Vs(s) / s
    return b[..., None] * u + ((a - b) * par)[..., None] * v


@dataclass(frozen=True)
class CharacteristicFrame:
    """Orthonormal eigenbasis Q (columns) and positive wave speeds mu of rho^-1 G_v."""

    Q: np.ndarray      # (..., 3, 3), columns are eigenvectors
    mu: np.ndarray     # (..., 3), mu[1] == mu[2]
    skew_axis: np.ndarray


@dataclass(frozen=True)
class RiemannState:
    """Characteristic variables: xi_plus/minus advect at +/-mu; xi_zero carries position."""

    xi_plus: np.ndarray
    xi_minus: np.ndarray
    xi_zero: np.ndarray


def default_skew_axis(tangent: np.ndarray) -> np.ndarray:
    """A unit axis orthogonal to the given equilibrium tangent."""
    t = np.asarray(tangent, dtype=float)
    t = t / np.linalg.norm(t)
    trial = np.array([0.0, 0.0, 1.0])
    if abs(np.dot(trial, t)) > 0.9:
        trial = np.array([0.0, 1.0, 0.0])
    axis = np.cross(t, trial)
    return axis / np.linalg.norm(axis)


def characteristic_frame(
    law: MaterialLaw, rho: float, v: np.ndarray, skew_axis: np.ndarray
) -> CharacteristicFrame:
    """Eigenbasis and speeds at strain v.

    Columns of Q are v/|v|, (axis x v)/|axis x v| and their cross product;
    the construction fails loudly if v is within THETA_MIN of the axis.
    """
    v = np.asarray(v, dtype=float)
    axis = np.asarray(skew_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    s = _norms(v)
    _check_domain(law, s)
    check_stretched(s)
    e1 = v / s[..., None]
    m = np.cross(np.broadcast_to(axis, e1.shape), e1)
    mn = np.linalg.norm(m, axis=-1)
    if np.any(mn < np.sin(THETA_MIN)):
        ang = float(np.arcsin(max(np.min(mn), 0.0)))
        raise NumericalAbort(
            f"characteristic frame degenerate: strain within {ang:.3e} rad "
            f"of the skew axis (minimum allowed {THETA_MIN:g})"
        )
    e2 = m / mn[..., None]
    e3 = np.cross(e1, e2)
    Q = np.stack([e1, e2, e3], axis=-1)
    mu1 = np.sqrt(law.Vss(s) / rho)
    mu2 = np.sqrt(law.Vs(s) / (s * rho))
    mu = np.stack([mu1, mu2, mu2], axis=-1)
    return CharacteristicFrame(Q=Q, mu=mu, skew_axis=axis)


def to_riemann(frame: CharacteristicFrame, w1, w2, w3) -> RiemannState:
    """xi_pm = (Q^T w1 -/+ mu^-1 Q^T w2)/2, xi_zero = w3."""
    qt_w1 = np.einsum("...ij,...i->...j", frame.Q, np.asarray(w1, dtype=float))
    qt_w2 = np.einsum("...ij,...i->...j", frame.Q, np.asarray(w2, dtype=float))
    half_dm = 0.5 * qt_w2 / frame.mu
    half_q1 = 0.5 * qt_w1
    return RiemannState(
        xi_plus=half_q1 - half_dm,
        xi_minus=half_q1 + half_dm,
        xi_zero=np.array(w3, dtype=float),
    )


def from_riemann(frame: CharacteristicFrame, xi: RiemannState):
    """Exact inverse of :func:`to_riemann`."""
    w1 = np.einsum("...ij,...j->...i", frame.Q, xi.xi_plus + xi.xi_minus)
    w2 = np.einsum("...ij,...j->...i", frame.Q, frame.mu * (xi.xi_minus - xi.xi_plus))
    return w1, w2, np.array(xi.xi_zero, dtype=float)
