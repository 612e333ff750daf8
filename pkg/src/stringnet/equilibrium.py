"""Stretched equilibrium configurations of the string network.

An equilibrium profile R^e per string satisfies [G(R^e_x)]_x = rho g e in the
interior, prescribed positions at simple nodes, and static force balance

    eps_a G(R^e_x) + kappa (L p)_a = 0

at every junction local index a (eps = -1 at the x = 0 end, +1 at x = L),
where p stacks the junction endpoint positions.  With g = 0 every profile is
affine; with gravity the profiles solve a two-point BVP handled by shooting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline
from scipy.optimize import root

from .errors import ConfigError, NumericalAbort
from .materials import (
    DELTA_STRETCH,
    MaterialLaw,
    check_stretched,
    stress,
    stress_jacobian,
)
from .network import END_0, END_L, NetworkSpec, laplacian

TOL_EQ = 1e-9


@dataclass(frozen=True)
class StringProfile:
    """R^e(x), R^e_x(x), R^e_xx(x) for one string, as vectorized callables."""

    value: Callable
    tangent: Callable
    curvature: Callable


@dataclass(frozen=True)
class EquilibriumConfig:
    """Equilibrium profiles per string id plus a construction tag."""

    profiles: Dict[int, StringProfile]
    construction: str
    report: Optional[dict] = None

    def value(self, sid: int, x):
        return self.profiles[sid].value(np.asarray(x, dtype=float))

    def tangent(self, sid: int, x):
        return self.profiles[sid].tangent(np.asarray(x, dtype=float))

    def curvature(self, sid: int, x):
        return self.profiles[sid].curvature(np.asarray(x, dtype=float))


def _affine_profile(anchor, tangent) -> StringProfile:
    anchor = np.asarray(anchor, dtype=float)
    tangent = np.asarray(tangent, dtype=float)

    def val(x):
        x = np.asarray(x, dtype=float)
        return anchor + x[..., None] * tangent

    def tan(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(tangent, x.shape + (3,)).copy()

    def cur(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape + (3,))

    return StringProfile(value=val, tangent=tan, curvature=cur)


def stretch_margin(spec: NetworkSpec, eq: EquilibriumConfig, n_samples: int = 65) -> float:
    """min over strings and x of |R^e_x| - 1 (the stretched-regime margin)."""
    margin = np.inf
    for st in spec.strings:
        x = np.linspace(0.0, st.length, n_samples)
        s = np.linalg.norm(eq.tangent(st.id, x), axis=-1)
        margin = min(margin, float(np.min(s)) - 1.0)
    return margin


def zero_gravity_equilibrium(
    spec: NetworkSpec, tangents: Dict[int, np.ndarray], anchors: Dict[int, np.ndarray]
) -> EquilibriumConfig:
    """Affine equilibrium R^e(x) = anchor + x tangent per string (g = 0 only).

    The residual report is attached to the result; imbalanced junction rows
    are reported rather than raised, so pre-tensioned configurations whose
    static load is reacted externally can still be represented.
    """
    if spec.gravity != 0.0:
        raise ConfigError("zero_gravity_equilibrium requires g = 0")
    profiles = {}
    for st in spec.strings:
        if st.id not in tangents or st.id not in anchors:
            raise ConfigError(f"missing tangent/anchor for string {st.id}")
        tau = np.asarray(tangents[st.id], dtype=float)
        check_stretched(np.linalg.norm(tau), what=f"string {st.id} tangent")
        profiles[st.id] = _affine_profile(anchors[st.id], tau)
    eq = EquilibriumConfig(profiles=profiles, construction="ZeroGravityAffine")
    rep = equilibrium_residual(spec, eq)
    return EquilibriumConfig(profiles=profiles, construction="ZeroGravityAffine", report=rep)


def equilibrium_residual(spec: NetworkSpec, eq: EquilibriumConfig, n_samples: int = 201) -> dict:
    """Per-equation residual report.

    Interior: max_x |[G(R^e_x)]_x - rho g e| by 4th-order central differences.
    Junction rows: |eps G(R^e_x) + kappa (L p)_a| per local index.  Clamped
    simple ends are Dirichlet data and carry no residual by definition (the
    reaction force there is implicit); they are listed as satisfied.
    """
    ge = spec.gravity * spec.gravity_direction
    interior = {}
    for st in spec.strings:
        law = spec.law(st)
        x = np.linspace(0.0, st.length, n_samples)
        h = x[1] - x[0]
        gx = stress(law, eq.tangent(st.id, x))
        d = np.zeros_like(gx)
        # 4th-order central in the interior, one-sided 4th-order at the edges
        d[2:-2] = (-gx[4:] + 8 * gx[3:-1] - 8 * gx[1:-3] + gx[:-4]) / (12 * h)
        for j in (0, 1):
            d[j] = (
                -25 * gx[j] + 48 * gx[j + 1] - 36 * gx[j + 2] + 16 * gx[j + 3] - 3 * gx[j + 4]
            ) / (12 * h)
        for j in (-1, -2):
            d[j] = (
                25 * gx[j] - 48 * gx[j - 1] + 36 * gx[j - 2] - 16 * gx[j - 3] + 3 * gx[j - 4]
            ) / (12 * h)
        interior[st.id] = float(np.max(np.linalg.norm(d - st.density * ge, axis=-1)))

    junction = {}
    for nd in spec.multiple_nodes:
        g = nd.springs
        L = laplacian(g)
        pos = np.zeros((g.size, 3))
        force = np.zeros((g.size, 3))
        for a, (sid, end) in enumerate(g.incidence):
            st = spec.string(sid)
            law = spec.law(st)
            xa = 0.0 if end == END_0 else st.length
            epsa = -1.0 if end == END_0 else 1.0
            pos[a] = eq.value(sid, xa)
            force[a] = epsa * stress(law, eq.tangent(sid, xa))
        rows = force + g.kappa * (L @ pos)
        junction[nd.id] = {a: float(np.linalg.norm(rows[a])) for a in range(g.size)}

    max_j = max((r for d in junction.values() for r in d.values()), default=0.0)
    return {
        "interior": interior,
        "junction": junction,
        "max_interior_residual": max(interior.values(), default=0.0),
        "max_junction_residual": max_j,
    }


def star_junction_anchors(
    spec: NetworkSpec, tangents: Dict[int, np.ndarray]
) -> Dict[int, np.ndarray]:
    """Junction endpoint positions balancing the given tangents (least squares).

    For a star (all strings attached to the junction at x = 0) the static
    rows read G^i(tangent_i) = kappa (L p)_i; this solves for p in the
    least-squares sense, so rows made inconsistent by isolated components
    (strings whose tension must be reacted externally) keep a reported
    residual while connected components balance exactly.
    """
    mult = spec.multiple_nodes
    if len(mult) != 1:
        raise ConfigError("star_junction_anchors expects exactly one multiple node")
    g = mult[0].springs
    L = laplacian(g).astype(float)
    rhs = np.zeros((g.size, 3))
    for a, (sid, end) in enumerate(g.incidence):
        st = spec.string(sid)
        epsa = -1.0 if end == END_0 else 1.0
        rhs[a] = -epsa * stress(spec.law(st), np.asarray(tangents[sid], dtype=float))
    p, *_ = np.linalg.lstsq(g.kappa * L, rhs, rcond=None)
    anchors = {}
    for a, (sid, end) in enumerate(g.incidence):
        st = spec.string(sid)
        if end == END_0:
            anchors[sid] = p[a]
        else:
            anchors[sid] = p[a] - st.length * np.asarray(tangents[sid], dtype=float)
    return anchors


def _invert_stress(law: MaterialLaw, f: np.ndarray) -> np.ndarray:
    """Solve G(v) = f for a stretched v (f of shape (..., 3), |f| > 0)."""
    f = np.asarray(f, dtype=float)
    fn = np.linalg.norm(f, axis=-1)
    if np.any(fn <= 0):
        raise NumericalAbort("stress inversion needs a nonzero force (stretched regime)")
    if law.kind == "hookean":
        s = 1.0 + fn / law.params["h"]
    else:
        s = np.full_like(fn, 1.0 + 1e-3)
        for _ in range(80):
            r = law.Vs(s) - fn
            step = r / law.Vss(s)
            s = s - step
            if np.max(np.abs(step)) < 1e-14 * (1.0 + np.max(s)):
                break
        else:
            raise NumericalAbort("stress inversion did not converge")
    check_stretched(s, what="inverted stress")
    return (s / fn)[..., None] * f


def shooting_equilibrium(
    spec: NetworkSpec,
    anchors: Dict[int, np.ndarray],
    guess: Optional[dict] = None,
    tol: float = TOL_EQ,
    max_iter: int = 60,
) -> EquilibriumConfig:
    """Newton shooting for the equilibrium BVP on a star (or a single string).

    Unknowns: per string, the tension constant C_i with G(R^e_x(x)) =
    C_i + rho_i g x e, plus the junction endpoint positions.  ``anchors``
    prescribes the positions of all simple-node string ends; for a network
    without a multiple node it additionally prescribes the x = 0 end.
    """
    tag = spec.topology_tag
    mult = spec.multiple_nodes
    if len(mult) > 1:
        raise ConfigError("shooting_equilibrium handles star topology only")
    ge = spec.gravity * spec.gravity_direction
    strings = list(spec.strings)
    n = len(strings)
    g = mult[0].springs if mult else None
    L = laplacian(g).astype(float) if g is not None else None

    # quadrature nodes for the tangent integral per string
    nq = 64
    quad_x, quad_w = np.polynomial.legendre.leggauss(nq)

    def string_end_position(st, C, p0):
        xq = 0.5 * st.length * (quad_x + 1.0)
        wq = 0.5 * st.length * quad_w
        tau = _invert_stress(spec.law(st), C + st.density * np.outer(xq, ge) + np.zeros((nq, 3)))
        return p0 + wq @ tau

    def unknowns_guess():
        C0 = np.zeros((n, 3))
        p0 = np.zeros((n, 3))
        for i, st in enumerate(strings):
            if g is not None:
                a = g.local_index(st.id, END_0) if (st.id, END_0) in g.incidence else None
            if st.id in (guess or {}).get("tangents", {}):
                tau = np.asarray(guess["tangents"][st.id], dtype=float)
            else:
                # straight line between known/guessed endpoints, mild stretch
                tau = np.array([1.2, 0.0, 0.0])
            check_stretched(np.linalg.norm(tau), what=f"initial guess for string {st.id}")
            C0[i] = stress(spec.law(st), tau)
            p0[i] = np.asarray(
                (guess or {}).get("junction", {}).get(st.id, anchors.get((st.id, END_0), np.zeros(3))),
                dtype=float,
            )
        return C0, p0

    def pack(C, p):
        return np.concatenate([C.ravel(), p.ravel()]) if g is not None else C.ravel()

    def unpack(z):
        if g is not None:
            C = z[: 3 * n].reshape(n, 3)
            p = z[3 * n :].reshape(n, 3)
        else:
            C = z.reshape(n, 3)
            p = np.stack([np.asarray(anchors[(st.id, END_0)], dtype=float) for st in strings])
        return C, p

    def residual(z):
        C, p = unpack(z)
        res = []
        if g is not None:
            pj = np.zeros((g.size, 3))
            for a, (sid, end) in enumerate(g.incidence):
                i = next(k for k, st in enumerate(strings) if st.id == sid)
                pj[a] = p[i]
        for i, st in enumerate(strings):
            endpos = string_end_position(st, C[i], p[i])
            target = np.asarray(anchors[(st.id, END_L)], dtype=float)
            res.append(endpos - target)
        if g is not None:
            rows = g.kappa * (L @ pj)
            for a, (sid, end) in enumerate(g.incidence):
                i = next(k for k, st in enumerate(strings) if st.id == sid)
                epsa = -1.0 if end == END_0 else 1.0
                # eps G(R_x) + kappa (L p)_a = 0; at x=0, G(R_x(0)) = C_i
                res.append(epsa * C[i] + rows[a])
        return np.concatenate(res)

    C0, p0 = unknowns_guess()
    sol = root(residual, pack(C0, p0), method="hybr", tol=1e-13)
    if not sol.success and np.max(np.abs(residual(sol.x))) > tol:
        raise NumericalAbort(
            f"equilibrium shooting did not converge: final residual "
            f"{np.max(np.abs(residual(sol.x))):.3e} ({sol.message})"
        )
    C, p = unpack(sol.x)

    profiles = {}
    for i, st in enumerate(strings):
        law = spec.law(st)
        rho = st.density
        Ci = C[i].copy()
        p0i = p[i].copy()
        if spec.gravity == 0.0:
            tau = _invert_stress(law, Ci)
            profiles[st.id] = _affine_profile(p0i, tau)
            continue

        def tan(x, law=law, Ci=Ci, rho=rho):
            x = np.asarray(x, dtype=float)
            f = Ci + rho * x[..., None] * ge
            return _invert_stress(law, f)

        def cur(x, law=law, Ci=Ci, rho=rho):
            x = np.asarray(x, dtype=float)
            t = tan(x)
            J = stress_jacobian(law, t)
            return np.linalg.solve(J, np.broadcast_to(rho * ge, t.shape).copy())

        xs = np.linspace(0.0, st.length, 4097)
        vals = p0i + cumulative_trapezoid(tan(xs), xs, axis=0, initial=0.0)
        spl = CubicSpline(xs, vals, axis=0)

        def val(x, spl=spl):
            return spl(np.asarray(x, dtype=float))

        profiles[st.id] = StringProfile(value=val, tangent=tan, curvature=cur)

    eq = EquilibriumConfig(profiles=profiles, construction="ShootingSolved")
    rep = equilibrium_residual(spec, eq)
    eq = EquilibriumConfig(profiles=profiles, construction="ShootingSolved", report=rep)
    if rep["max_interior_residual"] > max(tol, 1e-7 * (1.0 + spec.gravity)):
        raise NumericalAbort(
            f"equilibrium interior residual {rep['max_interior_residual']:.3e} above tolerance"
        )
    return eq
