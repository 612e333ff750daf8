"""Sidewise Cauchy solver: x as the evolution direction, t transverse.

With z = r_t and q = r_x the string equation becomes the x-evolution system

    r_x = q
    z_x = q_t
    q_x = rho G_v(R^e_x + q)^{-1} (z_t + g e) - R^e_xx,

hyperbolic in x with transverse characteristic slopes dt/dx = +-1/mu.  The
solver marches from one string end across [0, L] (either direction), fed by
Cauchy data (r, r_x) on the start line; at the t = 0 and t = T rails it
imposes only the rail positions r = phi / r = Phi (and the consistent
q = phi_x / Phi_x) and closes the remaining information by extrapolating the
outgoing transverse mode

    eta_s = (Q^T z + s mu Q^T q) / 2,   s = +-1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .equilibrium import EquilibriumConfig, stretch_margin
from .errors import ConfigError, NumericalAbort
from .materials import characteristic_frame, check_stretched
from .network import END_0, END_L, NetworkSpec
from .shapes import VectorShape
from .solver import Numerics, _StringWork
from .traces import TraceRecord, uniform_derivative


@dataclass
class SideResult:
    """Far-end trace plus rail-row diagnostics of one sidewise solve."""

    string_id: int
    start: str
    x: np.ndarray                  # marching x positions (monotone in a direction)
    far_trace: TraceRecord         # (r, rt, rx) at the far end over the full window
    bottom_rt: np.ndarray          # recovered r_t(x, 0) along the march, (nx+1, 3)
    snapshots: list


def _gv_inv_apply(law, v, f, rho):
    """(G_v(v)/rho)^{-1} f / rho ... returns rho * G_v(v)^{-1} f."""
    s = np.linalg.norm(v, axis=-1)
    check_stretched(s, what="sidewise strain")
    a = law.Vss(s)
    b = law.Vs(s) / s
    par = np.sum(v * f, axis=-1) / (s * s)
    out = f / b[..., None] + ((1.0 / a - 1.0 / b) * par)[..., None] * v
    return rho * out


def sidewise_solve(
    spec: NetworkSpec,
    eq: EquilibriumConfig,
    string_id: int,
    cauchy: TraceRecord,
    rail_bottom: VectorShape,
    rail_top: VectorShape,
    numerics: Numerics,
    snapshots_at=(),
) -> SideResult:
    """March across string ``string_id`` from the end named by ``cauchy.location``.

    ``cauchy`` must carry channels "r" and "rx" on a uniform t-grid spanning
    the full window; the rails are the t = 0 and t = T position profiles.
    """
    st = spec.string(string_id)
    law = spec.law(st)
    rho = st.density
    if "r" not in cauchy.channels or "rx" not in cauchy.channels:
        raise ConfigError("sidewise Cauchy data needs channels 'r' and 'rx'")
    dt = cauchy.dt
    nt = cauchy.n
    if nt < 8:
        raise ConfigError("sidewise solve needs at least 8 time samples")
    ge = spec.gravity * spec.gravity_direction

    # marching step from the sidewise CFL: |dx| <= c * dt * mu_min over the ball
    eps0 = numerics.eps0
    if eps0 is None:
        eps0 = 0.05 * max(stretch_margin(spec, eq), 0.0)
    xs_probe = np.linspace(0.0, st.length, 65)
    s_eq = np.linalg.norm(eq.tangent(string_id, xs_probe), axis=-1)
    s_lo = float(np.min(s_eq)) - eps0
    if s_lo < 1.0 + 1e-6:
        raise NumericalAbort("sidewise eps0 ball leaves the stretched regime")
    mu_min = float(
        min(np.sqrt(law.Vss(s_lo) / rho), np.sqrt(law.Vs(s_lo) / (s_lo * rho)))
    )
    dx_bound = numerics.sidewise_cfl * dt * mu_min
    nx = max(8, int(np.ceil(st.length / dx_bound - 1e-12)))
    dx = st.length / nx

    direction = 1.0 if cauchy.location == END_0 else -1.0
    x0 = 0.0 if cauchy.location == END_0 else st.length
    dxs = direction * dx

    work = _StringWork(spec, st, eq, numerics.N)
    axis = work.axis

    # start line
    r = np.array(cauchy.channels["r"], dtype=float)
    q = np.array(cauchy.channels["rx"], dtype=float)
    z = uniform_derivative(r, dt, 1)

    t_grid = cauchy.times
    bottom_rt = np.zeros((nx + 1, 3))
    bottom_rt[0] = z[0]
    snaps = []
    snap_set = {int(round(xx / dx)) for xx in snapshots_at}

    def rail_values(xx):
        xx = np.array([xx])
        return (
            rail_bottom(xx)[0],
            rail_bottom.derivative(xx)[0],
            rail_top(xx)[0],
            rail_top.derivative(xx)[0],
        )

    for k in range(nx):
        x_old = x0 + k * dxs
        x_half = x_old + 0.5 * dxs
        x_new = x_old + dxs
        rex_h = eq.tangent(string_id, np.array([x_half]))[0]
        rexx_h = eq.curvature(string_id, np.array([x_half]))[0]

        # CFL hard check with the current strain
        s_cur = np.linalg.norm(eq.tangent(string_id, np.array([x_old]))[0] + q, axis=-1)
        mu_min_cur = float(
            np.min(
                np.minimum(np.sqrt(law.Vss(s_cur) / rho), np.sqrt(law.Vs(s_cur) / (s_cur * rho)))
            )
        )
        if dx > numerics.sidewise_cfl * dt * mu_min_cur * (1.0 + 1e-12):
            raise NumericalAbort(
                f"sidewise CFL violation on string {string_id} at x = {x_old:.4g}"
            )

        # half level at t midpoints
        q_avg = 0.5 * (q[:-1] + q[1:])
        z_avg = 0.5 * (z[:-1] + z[1:])
        r_avg = 0.5 * (r[:-1] + r[1:])
        qt = (q[1:] - q[:-1]) / dt
        zt = (z[1:] - z[:-1]) / dt
        r_h = r_avg + 0.5 * dxs * q_avg
        z_h = z_avg + 0.5 * dxs * qt
        q_h = q_avg + 0.5 * dxs * (
            _gv_inv_apply(law, rex_h + q_avg, zt + ge, rho) - rexx_h
        )

        # full step (interior t rows)
        r_new = r.copy()
        z_new = z.copy()
        q_new = q.copy()
        q_mid_t = (q_h[1:] - q_h[:-1]) / dt
        z_mid_t = (z_h[1:] - z_h[:-1]) / dt
        q_hat = 0.5 * (q_h[1:] + q_h[:-1])
        r_new[1:-1] = r[1:-1] + dxs * q_hat
        z_new[1:-1] = z[1:-1] + dxs * q_mid_t
        q_new[1:-1] = q[1:-1] + dxs * (
            _gv_inv_apply(law, rex_h + q_hat, z_mid_t + ge, rho) - rexx_h
        )
        if not np.isfinite(q_new).all():
            raise NumericalAbort(
                f"non-finite sidewise state on string {string_id} at x = {x_new:.4g}"
            )

        # rails
        rb, rbx, rt_, rtx = rail_values(x_new)
        rex_new = eq.tangent(string_id, np.array([x_new]))[0]
        for edge, rail_r, rail_q in ((0, rb, rbx), (nt - 1, rt_, rtx)):
            # frozen frame at the old edge state
            v_edge = eq.tangent(string_id, np.array([x_old]))[0] + q[edge]
            frame = characteristic_frame(law, rho, v_edge, axis)
            Q, mu = frame.Q, frame.mu
            # outgoing transverse mode sign: at the bottom edge the mode moving
            # toward -t leaves the domain when marching in +x (and vice versa)
            s_out = 1.0 if ((edge == 0) == (direction > 0)) else -1.0
            ks = (1, 2, 3) if edge == 0 else (nt - 2, nt - 3, nt - 4)

            def eta(kq):
                return 0.5 * (Q.T @ z_new[kq] + s_out * mu * (Q.T @ q_new[kq]))

            eta_b = 3.0 * eta(ks[0]) - 3.0 * eta(ks[1]) + eta(ks[2])
            r_new[edge] = rail_r
            q_new[edge] = rail_q
            z_new[edge] = Q @ (2.0 * eta_b - s_out * mu * (Q.T @ rail_q))

        r, z, q = r_new, z_new, q_new
        bottom_rt[k + 1] = z[0]
        if (k + 1) in snap_set:
            snaps.append((x_new, (r.copy(), z.copy(), q.copy())))

    far_end = END_L if cauchy.location == END_0 else END_0
    far_trace = TraceRecord(
        string_id=string_id,
        location=far_end,
        t0=cauchy.t0,
        dt=dt,
        channels={"r": r.copy(), "rt": z.copy(), "rx": q.copy()},
        smoothness=cauchy.smoothness,
    )
    xs = x0 + dxs * np.arange(nx + 1)
    return SideResult(
        string_id=string_id,
        start=cauchy.location,
        x=xs,
        far_trace=far_trace,
        bottom_rt=bottom_rt,
        snapshots=snaps,
    )
