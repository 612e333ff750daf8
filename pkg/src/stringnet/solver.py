"""Forward/backward time integration of the string network.

Each string carries the first-order state w = (w1, w2, w3) = (r_x, r_t, r)
of the perturbation r about a stretched equilibrium R^e, governed by

    w1_t = (w2)_x
    w2_t = (rho^-1 G(R^e_x + w1))_x - g e
    w3_t = w2,

advanced by a two-step (Richtmyer) Lax-Wendroff scheme.  Boundaries are
closed characteristically: the outgoing Riemann mode is extrapolated from the
interior in the local frozen frame, the incoming information comes from the
Dirichlet control (simple nodes) or from the spring-mass junction ODE

    m_a r_a'' = -eps_a [G(R^e_x + w1_a) - G(R^e_x)] - kappa (L r)_a

advanced by Heun's method (eps = -1 at the x = 0 end, +1 at x = L).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .equilibrium import EquilibriumConfig, stretch_margin
from .errors import ConfigError, NumericalAbort
from .materials import (
    DELTA_STRETCH,
    characteristic_frame,
    check_stretched,
    default_skew_axis,
    stress,
)
from .network import END_0, END_L, NetworkSpec, NodeSpec, StringSpec, laplacian
from .shapes import VectorShape, zero_shape
from .traces import TraceRecord, uniform_derivative

#: default CFL safety factors
CFL_FORWARD = 0.9
CFL_SIDEWISE = 0.8

#: junction stiffness guard: abort if dt * sqrt(kappa_max / m_min) exceeds this
STIFFNESS_GUARD = 0.5


@dataclass
class Numerics:
    """Discretization and tolerance knobs shared across solver entry points."""

    N: int = 400
    cfl: float = CFL_FORWARD
    sidewise_cfl: float = CFL_SIDEWISE
    eps0: Optional[float] = None
    tol_compat: float = 1e-8
    tol_iface: float = 1e-8
    threads: int = 1

    def __post_init__(self):
        if self.N < 8:
            raise ConfigError("need at least 8 cells per string")
        if not (0 < self.cfl < 1) or not (0 < self.sidewise_cfl < 1):
            raise ConfigError("CFL factors must lie in (0, 1)")


@dataclass
class BoundaryControl:
    """Dirichlet data at a controlled simple node, as perturbation about R^e(L).

    ``u`` is the position perturbation U(t) - R^e(L), ``v`` its derivative.
    """

    u: Callable
    v: Callable

    @classmethod
    def hold(cls, value=None) -> "BoundaryControl":
        val = np.zeros(3) if value is None else np.asarray(value, dtype=float)
        return cls(u=lambda t: val, v=lambda t: np.zeros(3))

    @classmethod
    def from_samples(cls, t0: float, dt: float, u: np.ndarray, v: Optional[np.ndarray] = None):
        u = np.asarray(u, dtype=float)
        t = t0 + dt * np.arange(len(u))
        spl = CubicSpline(t, u, axis=0)
        if v is None:
            dspl = spl.derivative()
            return cls(u=lambda tt: spl(tt), v=lambda tt: dspl(tt))
        vspl = CubicSpline(t, np.asarray(v, dtype=float), axis=0)
        return cls(u=lambda tt: spl(tt), v=lambda tt: vspl(tt))


@dataclass
class SimResult:
    """Output of a forward/backward run."""

    times: np.ndarray
    dt: float
    grids: Dict[int, np.ndarray]
    state: Dict[int, Tuple[np.ndarray, np.ndarray, np.ndarray]]
    junctions: Dict[str, Tuple[np.ndarray, np.ndarray]]
    traces: Dict[Tuple[int, str], TraceRecord]
    energies: np.ndarray
    snapshots: list = field(default_factory=list)


class _StringWork:
    """Per-string precomputed geometry and equilibrium samples."""

    def __init__(self, spec: NetworkSpec, st: StringSpec, eq: EquilibriumConfig, N: int):
        self.st = st
        self.law = spec.law(st)
        self.rho = st.density
        self.N = N
        self.dx = st.length / N
        self.x = np.linspace(0.0, st.length, N + 1)
        self.xm = 0.5 * (self.x[:-1] + self.x[1:])
        self.Rex = eq.tangent(st.id, self.x)
        self.Rexm = eq.tangent(st.id, self.xm)
        self.Re = eq.value(st.id, self.x)
        mean_tangent = self.Rex.mean(axis=0)
        self.axis = default_skew_axis(mean_tangent)

    def end_index(self, end: str) -> int:
        return 0 if end == END_0 else self.N


class _JunctionWork:
    """Per-junction Laplacian, members, and equilibrium prestress."""

    def __init__(self, spec: NetworkSpec, node: NodeSpec, works: Dict[int, _StringWork]):
        g = node.springs
        self.node = node
        self.kappa = g.kappa
        self.masses = g.masses
        self.L = laplacian(g).astype(float)
        guard = np.sqrt(g.kappa / np.min(g.masses))
        self.stiffness_rate = guard
        self.members = []
        for a, (sid, end) in enumerate(g.incidence):
            w = works[sid]
            j = w.end_index(end)
            eps = -1.0 if end == END_0 else 1.0
            Ge = stress(w.law, w.Rex[j])
            self.members.append((a, sid, end, j, eps, Ge))


def _initial_state(work: _StringWork, phi: VectorShape, psi: VectorShape):
    w3 = phi(work.x)
    w1 = phi.derivative(work.x)
    w2 = psi(work.x)
    return [np.array(w1, dtype=float), np.array(w2, dtype=float), np.array(w3, dtype=float)]


def _flux2(work: _StringWork, w1: np.ndarray, rex: np.ndarray):
    """rho^-1 G(R^e_x + w1) plus stretch magnitudes (for guards and CFL)."""
    v = rex + w1
    s = np.linalg.norm(v, axis=-1)
    check_stretched(s, what=f"string {work.st.id} strain")
    law = work.law
    return (law.Vs(s) / s)[:, None] * v / work.rho, s


def _speeds(work: _StringWork, s: np.ndarray):
    law = work.law
    mu1 = np.sqrt(law.Vss(s) / work.rho)
    mu2 = np.sqrt(law.Vs(s) / (s * work.rho))
    return mu1, mu2


def _outgoing_xi(work: _StringWork, state, end: str):
    """Extrapolated outgoing Riemann mode at a boundary, in the frozen frame.

    Returns (frame, xi_out) where xi_out is the linear extrapolation to the
    boundary of the outgoing characteristic variable at the two adjacent
    interior points, evaluated with the frame anchored at the boundary state.
    """
    w1, w2, _ = state
    j = work.end_index(end)
    v_b = work.Rex[j] + w1[j]
    frame = characteristic_frame(work.law, work.rho, v_b, work.axis)
    return _outgoing_xi_with_frame(work, state, end, frame)


def _w1_from_outgoing(frame, xi_out, w2_b, end: str):
    Q, mu = frame.Q, frame.mu
    b = (Q.T @ w2_b) / mu
    coeff = 2.0 * xi_out - b if end == END_0 else 2.0 * xi_out + b
    return Q @ coeff


class _Run:
    """One forward-time integration (backward runs are forward runs in tau)."""

    def __init__(
        self,
        spec: NetworkSpec,
        eq: EquilibriumConfig,
        ic: Dict[int, Tuple[VectorShape, VectorShape]],
        controls: Optional[Dict[str, BoundaryControl]],
        horizon: float,
        numerics: Numerics,
        dt_override: Optional[float] = None,
    ):
        self.spec = spec
        self.eq = eq
        self.num = numerics
        self.horizon = float(horizon)
        if self.horizon <= 0:
            raise ConfigError("horizon must be positive")
        self.works = {st.id: _StringWork(spec, st, eq, numerics.N) for st in spec.strings}
        self.junctions = [_JunctionWork(spec, nd, self.works) for nd in spec.multiple_nodes]
        self.controls = dict(controls or {})

        # time step from the eps0-inflated maximum speed
        eps0 = numerics.eps0
        if eps0 is None:
            eps0 = 0.05 * max(stretch_margin(spec, eq), 0.0)
        dt_bound = np.inf
        for w in self.works.values():
            s = np.linalg.norm(w.Rex, axis=-1)
            s_hi = np.max(s) + eps0
            mu1, mu2 = _speeds(w, np.array([s_hi]))
            mu_max = float(max(mu1[0], mu2[0]))
            dt_bound = min(dt_bound, numerics.cfl * w.dx / mu_max)
        if dt_override is not None:
            self.n_steps = max(1, int(round(self.horizon / dt_override)))
            if abs(self.n_steps * dt_override - self.horizon) > 1e-9 * dt_override:
                raise ConfigError("dt_override does not divide the horizon")
            if dt_override > dt_bound * (1.0 + 1e-12):
                raise NumericalAbort(
                    f"dt_override {dt_override:.3e} violates the CFL bound {dt_bound:.3e}"
                )
            self.dt = dt_override
        else:
            self.n_steps = max(1, int(np.ceil(self.horizon / dt_bound - 1e-12)))
            self.dt = self.horizon / self.n_steps

        for jw in self.junctions:
            if self.dt * jw.stiffness_rate > STIFFNESS_GUARD:
                raise NumericalAbort(
                    f"junction '{jw.node.id}' too stiff for the explicit integrator: "
                    f"dt*sqrt(kappa/m) = {self.dt * jw.stiffness_rate:.3g} > {STIFFNESS_GUARD}"
                )

        self.state = {sid: _initial_state(w, *ic[sid]) for sid, w in self.works.items()}
        self.jstate = {}
        for jw in self.junctions:
            r = np.zeros((len(jw.members), 3))
            s = np.zeros((len(jw.members), 3))
            for a, sid, end, j, eps, Ge in jw.members:
                r[a] = self.state[sid][2][j]
                s[a] = self.state[sid][1][j]
            self.jstate[jw.node.id] = (r, s)

        # simple-node bookkeeping: (sid, end, node)
        self.simple_ends = []
        for st in spec.strings:
            for end, nid in ((END_0, st.node_at_0), (END_L, st.node_at_L)):
                nd = spec.node(nid)
                if nd.kind != "multiple":
                    ctrl = self.controls.get(nid)
                    if ctrl is None:
                        hold_at = self.state[st.id][2][self.works[st.id].end_index(end)]
                        ctrl = BoundaryControl.hold(hold_at)
                    self.simple_ends.append((st.id, end, nd, ctrl))

        nt = self.n_steps + 1
        self.trace_buf = {}
        for st in spec.strings:
            for end in (END_0, END_L):
                self.trace_buf[(st.id, end)] = {
                    "r": np.zeros((nt, 3)),
                    "rt": np.zeros((nt, 3)),
                    "rx": np.zeros((nt, 3)),
                }
        self.energies = np.zeros(nt)
        self._record(0)
        self.energies[0] = self.energy()

    # ----- recording -------------------------------------------------------

    def _record(self, k: int):
        for (sid, end), buf in self.trace_buf.items():
            w = self.works[sid]
            j = w.end_index(end)
            w1, w2, w3 = self.state[sid]
            buf["r"][k] = w3[j]
            buf["rt"][k] = w2[j]
            buf["rx"][k] = w1[j]

    def energy(self) -> float:
        return total_energy_state(self.spec, self.eq, self.works, self.state, self.jstate)

    # ----- stepping --------------------------------------------------------

    def _interior_step(self, w: _StringWork, state):
        w1, w2, w3 = state
        dt, dx = self.dt, w.dx
        F2, s = _flux2(w, w1, w.Rex)
        mu1, mu2 = _speeds(w, s)
        mu_max = float(max(np.max(mu1), np.max(mu2)))
        if dt > self.num.cfl * dx / mu_max * (1.0 + 1e-12):
            raise NumericalAbort(
                f"CFL violation on string {w.st.id}: dt={dt:.3e} > "
                f"{self.num.cfl:.2f}*dx/mu_max={self.num.cfl * dx / mu_max:.3e}"
            )
        ge = self.spec.gravity * self.spec.gravity_direction

        # half step at cell midpoints
        r = dt / (2.0 * dx)
        h1 = 0.5 * (w1[:-1] + w1[1:]) + r * (w2[1:] - w2[:-1])
        h2 = 0.5 * (w2[:-1] + w2[1:]) + r * (F2[1:] - F2[:-1]) - 0.5 * dt * ge
        h3 = 0.5 * (w3[:-1] + w3[1:]) + 0.25 * dt * (w2[:-1] + w2[1:])

        F2h, _ = _flux2(w, h1, w.Rexm)
        q = dt / dx
        n1 = w1.copy()
        n2 = w2.copy()
        n3 = w3.copy()
        n1[1:-1] = w1[1:-1] + q * (h2[1:] - h2[:-1])
        n2[1:-1] = w2[1:-1] + q * (F2h[1:] - F2h[:-1]) - dt * ge
        n3[1:-1] = w3[1:-1] + 0.5 * dt * (h2[1:] + h2[:-1])
        if not np.isfinite(n2).all():
            bad = np.argwhere(~np.isfinite(n2))[0]
            raise NumericalAbort(
                f"non-finite state on string {w.st.id} at grid index {int(bad[0])}"
            )
        return [n1, n2, n3]

    def _junction_force(self, jw: _JunctionWork, r: np.ndarray, w1_ends: np.ndarray):
        """Accelerations of the junction masses (incremental force convention)."""
        acc = np.empty_like(r)
        spring = jw.kappa * (jw.L @ r)
        for a, sid, end, j, eps, Ge in jw.members:
            w = self.works[sid]
            dG = stress(w.law, w.Rex[j] + w1_ends[a]) - Ge
            acc[a] = (-eps * dG - spring[a]) / jw.masses[a]
        return acc

    def step(self, k: int):
        """Advance from t_k to t_{k+1}."""
        t_new = (k + 1) * self.dt
        old_state = self.state
        new_state = {sid: self._interior_step(self.works[sid], st) for sid, st in old_state.items()}

        # boundary frames / outgoing modes at the new time level
        out_modes = {}
        for sid, w in self.works.items():
            for end in (END_0, END_L):
                # frame frozen at the old boundary state
                frame, _ = _outgoing_xi(w, old_state[sid], end)
                _, xi_new = _outgoing_xi_with_frame(w, new_state[sid], end, frame)
                out_modes[(sid, end)] = (frame, xi_new)

        # simple nodes
        for sid, end, nd, ctrl in self.simple_ends:
            w = self.works[sid]
            j = w.end_index(end)
            frame, xi_out = out_modes[(sid, end)]
            w2_b = np.asarray(ctrl.v(t_new), dtype=float)
            w3_b = np.asarray(ctrl.u(t_new), dtype=float)
            new_state[sid][1][j] = w2_b
            new_state[sid][2][j] = w3_b
            new_state[sid][0][j] = _w1_from_outgoing(frame, xi_out, w2_b, end)

        # multiple nodes: Heun on the mass ODE
        for jw in self.junctions:
            r, s = self.jstate[jw.node.id]
            w1_old = np.stack(
                [old_state[sid][0][j] for a, sid, end, j, eps, Ge in jw.members]
            )
            acc1 = self._junction_force(jw, r, w1_old)
            r_star = r + self.dt * s
            s_star = s + self.dt * acc1
            w1_star = np.stack(
                [
                    _w1_from_outgoing(*out_modes[(sid, end)], s_star[a], end)
                    for a, sid, end, j, eps, Ge in jw.members
                ]
            )
            acc2 = self._junction_force(jw, r_star, w1_star)
            r_new = r + 0.5 * self.dt * (s + s_star)
            s_new = s + 0.5 * self.dt * (acc1 + acc2)
            self.jstate[jw.node.id] = (r_new, s_new)
            for a, sid, end, j, eps, Ge in jw.members:
                frame, xi_out = out_modes[(sid, end)]
                new_state[sid][1][j] = s_new[a]
                new_state[sid][2][j] = r_new[a]
                new_state[sid][0][j] = _w1_from_outgoing(frame, xi_out, s_new[a], end)

        self.state = new_state
        self._record(k + 1)
        self.energies[k + 1] = self.energy()

    def run(self, snapshot_steps=()) -> SimResult:
        snaps = []
        snapshot_steps = set(snapshot_steps)
        if 0 in snapshot_steps:
            snaps.append((0.0, _copy_state(self.state)))
        for k in range(self.n_steps):
            self.step(k)
            if (k + 1) in snapshot_steps:
                snaps.append(((k + 1) * self.dt, _copy_state(self.state)))
        traces = {
            key: TraceRecord(
                string_id=key[0],
                location=key[1],
                t0=0.0,
                dt=self.dt,
                channels={name: arr for name, arr in buf.items()},
                smoothness=2,
            )
            for key, buf in self.trace_buf.items()
        }
        return SimResult(
            times=self.dt * np.arange(self.n_steps + 1),
            dt=self.dt,
            grids={sid: w.x.copy() for sid, w in self.works.items()},
            state=_copy_state(self.state),
            junctions={k: (r.copy(), s.copy()) for k, (r, s) in self.jstate.items()},
            traces=traces,
            energies=self.energies.copy(),
            snapshots=snaps,
        )


def _copy_state(state):
    return {sid: tuple(a.copy() for a in arrs) for sid, arrs in state.items()}


def _outgoing_xi_with_frame(work: _StringWork, state, end: str, frame):
    """Quadratic extrapolation of the outgoing mode to the boundary."""
    w1, w2, _ = state
    js = (1, 2, 3) if end == END_0 else (work.N - 1, work.N - 2, work.N - 3)
    Q, mu = frame.Q, frame.mu

    def xi_out(jq):
        a = Q.T @ w1[jq]
        b = (Q.T @ w2[jq]) / mu
        return 0.5 * (a + b) if end == END_0 else 0.5 * (a - b)

    return frame, 3.0 * xi_out(js[0]) - 3.0 * xi_out(js[1]) + xi_out(js[2])


# --------------------------------------------------------------------------
# public entry points
# --------------------------------------------------------------------------


def simulate_forward(
    spec: NetworkSpec,
    eq: EquilibriumConfig,
    ic: Dict[int, Tuple[VectorShape, VectorShape]],
    controls: Optional[Dict[str, BoundaryControl]],
    horizon: float,
    numerics: Numerics,
    snapshot_steps=(),
) -> SimResult:
    """Integrate the network forward over [0, horizon]."""
    run = _Run(spec, eq, _complete_ic(spec, ic), controls, horizon, numerics)
    return run.run(snapshot_steps=snapshot_steps)


def simulate_backward(
    spec: NetworkSpec,
    eq: EquilibriumConfig,
    fc: Dict[int, Tuple[VectorShape, VectorShape]],
    controls: Optional[Dict[str, BoundaryControl]],
    horizon: float,
    numerics: Numerics,
    t_final: Optional[float] = None,
) -> SimResult:
    """Integrate backward from final data over a window of the given length.

    The system is time-reversible: the run integrates forward in tau = T - t
    from (Phi, -Psi) with time-reflected controls, then relabels the output in
    original time.  ``t_final`` (default ``horizon``) is the original time of
    the final condition, so returned traces live on [t_final - horizon,
    t_final].
    """
    T = horizon if t_final is None else t_final
    ic_rev = {
        sid: (phi, _negate_shape(psi)) for sid, (phi, psi) in _complete_ic(spec, fc).items()
    }
    controls_rev = None
    if controls:
        controls_rev = {
            nid: BoundaryControl(
                u=lambda tau, c=c: c.u(T - tau), v=lambda tau, c=c: -np.asarray(c.v(T - tau))
            )
            for nid, c in controls.items()
        }
    res = _Run(spec, eq, ic_rev, controls_rev, horizon, Numerics(**vars(numerics))).run()
    return _reverse_result(res, T)


def _negate_shape(shape: VectorShape) -> VectorShape:
    return VectorShape(
        value=lambda x: -np.asarray(shape.value(x)),
        derivative=lambda x: -np.asarray(shape.derivative(x)),
    )


def _reverse_result(res: SimResult, T: float) -> SimResult:
    horizon = res.times[-1]
    traces = {}
    for key, rec in res.traces.items():
        traces[key] = TraceRecord(
            string_id=rec.string_id,
            location=rec.location,
            t0=T - horizon,
            dt=rec.dt,
            channels={
                "r": rec.channels["r"][::-1].copy(),
                "rt": -rec.channels["rt"][::-1].copy(),
                "rx": rec.channels["rx"][::-1].copy(),
            },
            smoothness=rec.smoothness,
        )
    state = {sid: (w1, -w2, w3) for sid, (w1, w2, w3) in res.state.items()}
    junctions = {k: (r, -s) for k, (r, s) in res.junctions.items()}
    return SimResult(
        times=(T - horizon) + res.times,
        dt=res.dt,
        grids=res.grids,
        state=state,
        junctions=junctions,
        traces=traces,
        energies=res.energies[::-1].copy(),
        snapshots=[(T - t, st) for t, st in reversed(res.snapshots)],
    )


def _complete_ic(spec: NetworkSpec, ic) -> Dict[int, Tuple[VectorShape, VectorShape]]:
    full = {}
    for st in spec.strings:
        phi, psi = ic.get(st.id, (zero_shape(), zero_shape()))
        full[st.id] = (phi, psi)
    return full


# --------------------------------------------------------------------------
# diagnostics: energy, traveling times, compatibility
# --------------------------------------------------------------------------


def total_energy_state(spec, eq, works, state, jstate) -> float:
    """Total mechanical energy relative to the equilibrium configuration."""
    ge = spec.gravity * spec.gravity_direction
    E = 0.0
    for sid, w in works.items():
        w1, w2, w3 = state[sid]
        v = w.Rex + w1
        s = np.linalg.norm(v, axis=-1)
        s0 = np.linalg.norm(w.Rex, axis=-1)
        dens = 0.5 * w.rho * np.sum(w2 * w2, axis=-1) + (w.law.V(s) - w.law.V(s0))
        if spec.gravity != 0.0:
            dens = dens + w.rho * (w3 @ ge)
        E += float(simpson(dens, x=w.x))
    for nd in spec.multiple_nodes:
        g = nd.springs
        r, s = jstate[nd.id]
        E += 0.5 * float(np.sum(g.masses * np.sum(s * s, axis=-1)))
        pos_eq = np.zeros((g.size, 3))
        for a, (sid, end) in enumerate(g.incidence):
            st = spec.string(sid)
            xa = 0.0 if end == END_0 else st.length
            pos_eq[a] = eq.value(sid, xa)
        pos = pos_eq + r
        A = g.adjacency
        for a in range(g.size):
            for b in range(a + 1, g.size):
                if A[a, b]:
                    E += 0.5 * g.kappa * (
                        float(np.sum((pos[a] - pos[b]) ** 2))
                        - float(np.sum((pos_eq[a] - pos_eq[b]) ** 2))
                    )
    return E


def total_energy(spec: NetworkSpec, eq: EquilibriumConfig, result: SimResult) -> float:
    """Energy of a result's final state (relative to equilibrium)."""
    works = {st.id: _StringWork(spec, st, eq, len(result.grids[st.id]) - 1) for st in spec.strings}
    return total_energy_state(spec, eq, works, result.state, result.junctions)


@dataclass(frozen=True)
class TravelTimes:
    """Conservative per-string traversal times and the control-horizon gate."""

    T: Dict[int, float]          # eps0-inflated times
    T_eq: Dict[int, float]       # times at the exact equilibrium strain
    min_speed: Dict[int, float]
    clamped_id: int
    T_bar: float
    T_min_control: float

    @property
    def T_star(self) -> float:
        return self.T_bar - self.T[self.clamped_id]


def traveling_times(spec: NetworkSpec, eq: EquilibriumConfig, eps0: Optional[float] = None) -> TravelTimes:
    """T_i = max over the eps0 strain ball of L_i / min_j mu_j; T_bar = T_1 + max_i T_i."""
    if eps0 is None:
        eps0 = 0.05 * max(stretch_margin(spec, eq), 0.0)
    clamped = [st for st in spec.strings if _is_clamped(spec, st)]
    if len(clamped) != 1:
        raise ConfigError("traveling_times needs exactly one clamped simple node")
    T, T_eq, mins = {}, {}, {}
    for st in spec.strings:
        law = spec.law(st)
        x = np.linspace(0.0, st.length, 129)
        s = np.linalg.norm(eq.tangent(st.id, x), axis=-1)
        lo = float(np.min(s)) - eps0
        hi = float(np.max(s)) + eps0
        if lo < 1.0 + DELTA_STRETCH:
            raise NumericalAbort(
                f"eps0 = {eps0:g} leaves the stretched regime on string {st.id}; "
                "use a smaller eps0"
            )
        grid = np.linspace(lo, hi, 101)
        mu_min = float(np.min(np.minimum(np.sqrt(law.Vss(grid) / st.density),
                                         np.sqrt(law.Vs(grid) / (grid * st.density)))))
        mu_min_eq = float(np.min(np.minimum(np.sqrt(law.Vss(s) / st.density),
                                            np.sqrt(law.Vs(s) / (s * st.density)))))
        T[st.id] = st.length / mu_min
        T_eq[st.id] = st.length / mu_min_eq
        mins[st.id] = mu_min
    cid = clamped[0].id
    T_bar = T[cid] + max(T.values())
    return TravelTimes(
        T=T, T_eq=T_eq, min_speed=mins, clamped_id=cid, T_bar=T_bar, T_min_control=2.0 * T_bar
    )


def _is_clamped(spec: NetworkSpec, st: StringSpec) -> bool:
    return any(
        spec.node(nid).kind == "clamped" for nid in (st.node_at_0, st.node_at_L)
    )


def check_compatibility(
    spec: NetworkSpec,
    eq: EquilibriumConfig,
    ic: Dict[int, Tuple[VectorShape, VectorShape]],
    controls: Optional[Dict[str, BoundaryControl]] = None,
    numerics: Optional[Numerics] = None,
) -> dict:
    """Numerical residuals of the C^2 compatibility conditions at t = 0.

    At simple nodes: U(0) = r(x_j, 0), U_t(0) = r_t(x_j, 0) and U_tt(0) =
    rho^-1 [G(R^e_x + r_x)]_x - g e evaluated at the node.  Junction masses
    satisfy an ODE, so their initial data impose no extra constraint; the
    report lists their initial accelerations for information.
    """
    num = numerics or Numerics()
    ic = _complete_ic(spec, ic)
    controls = controls or {}
    report = {"simple": {}, "junction_acc": {}}
    ge = spec.gravity * spec.gravity_direction
    works = {st.id: _StringWork(spec, st, eq, num.N) for st in spec.strings}
    for st in spec.strings:
        w = works[st.id]
        phi, psi = ic[st.id]
        for end, nid in ((END_0, st.node_at_0), (END_L, st.node_at_L)):
            nd = spec.node(nid)
            if nd.kind == "multiple":
                continue
            j = w.end_index(end)
            xj = w.x[j]
            ctrl = controls.get(nid)
            if ctrl is None:
                # clamped / uncontrolled: the boundary holds the equilibrium value
                u0 = np.zeros(3)
                v0 = np.zeros(3)
            else:
                u0 = np.asarray(ctrl.u(0.0), dtype=float)
                v0 = np.asarray(ctrl.v(0.0), dtype=float)
            # second time derivative demanded by the PDE at the node
            h = w.dx
            xs = xj + (np.arange(5) * h if j == 0 else -np.arange(5) * h)
            gx = stress(w.law, eq.tangent(st.id, xs) + phi.derivative(xs))
            d = (-25 * gx[0] + 48 * gx[1] - 36 * gx[2] + 16 * gx[3] - 3 * gx[4]) / (12 * h)
            if j != 0:
                d = -d
            utt_pde = d / st.density - ge
            rep = {
                "u": float(np.linalg.norm(u0 - phi(np.array([xj]))[0])),
                "ut": float(np.linalg.norm(v0 - psi(np.array([xj]))[0])),
                "utt_pde": utt_pde,
            }
            report["simple"][nid] = rep
    for nd in spec.multiple_nodes:
        g = nd.springs
        r0 = np.zeros((g.size, 3))
        acc = np.zeros((g.size, 3))
        spring_rows = np.zeros((g.size, 3))
        for a, (sid, end) in enumerate(g.incidence):
            w = works[sid]
            phi, psi = ic[sid]
            j = w.end_index(end)
            r0[a] = phi(np.array([w.x[j]]))[0]
        spring_rows = g.kappa * (laplacian(g).astype(float) @ r0)
        for a, (sid, end) in enumerate(g.incidence):
            w = works[sid]
            phi, _ = ic[sid]
            j = w.end_index(end)
            eps = -1.0 if end == END_0 else 1.0
            dG = stress(w.law, w.Rex[j] + phi.derivative(np.array([w.x[j]]))[0]) - stress(
                w.law, w.Rex[j]
            )
            acc[a] = (-eps * dG - spring_rows[a]) / g.masses[a]
        report["junction_acc"][nd.id] = acc
    report["max_simple_residual"] = max(
        (max(v["u"], v["ut"]) for v in report["simple"].values()), default=0.0
    )
    return report
