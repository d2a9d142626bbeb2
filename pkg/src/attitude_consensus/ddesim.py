"""Fixed-step RK4 integration of the delayed consensus dynamics.

Two simulation paths share the same stepping machinery:

  * simulate: the full nonlinear per-craft pipeline. Each right-hand-side
    evaluation rebuilds sigma_dot = P(sigma) omega, forms the delayed
    consensus command, converts it to a physical torque through the
    linearizing inner loop, and propagates the Euler equation.
  * simulate_linear: the stacked delayed linear system
    x_dot = A0 x + sum_e Ae x(t - tau_e) used as a cross-check.

Delayed arguments are read from a history of accepted samples. The public
lookup is linear interpolation; the integrator's internal lookups upgrade to
cubic Hermite once both bracket derivatives are known (derivatives are
backfilled from the first stage of the following step, costing nothing extra),
which keeps the overall scheme at fourth order. Stage lookups slightly ahead
of the newest sample (possible when a delay passes through zero) clamp to the
newest sample; delays are orders of magnitude larger than the step in every
scenario of interest, so the clamp is almost never exercised.

Pre-history is constant: x(s) = x(0) for s < 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .attitude import MRP_GUARD_NORM, kinematics_matrix, kinematics_matrix_inverse, \
    kinematics_rate_matrix
from .controller import ClosedLoopMatrices, build_consensus_operator
from .scenario import Scenario
from .topology import DelayedEdge

BLOWUP_LIMIT = 1e6


@dataclass(frozen=True)
class DelayProfile:
    """Delay waveform tau(t) staying inside 0 <= tau <= h, |tau_dot| <= d.

    constant:   tau(t) = h (d is unused but must be >= 0)
    sinusoidal: tau(t) = (h/2) (1 + sin(2 d t / h))
    """

    kind: str
    h: float
    d: float

    def __post_init__(self):
        if self.kind not in ("constant", "sinusoidal"):
            raise ValueError(f"unknown delay profile kind '{self.kind}'")
        if self.h <= 0.0:
            raise ValueError(f"delay bound h must be > 0, got {self.h}")
        if self.d < 0.0:
            raise ValueError(f"rate bound d must be >= 0, got {self.d}")


def delay_at(profile: DelayProfile, t: float) -> float:
    """tau(t) for one profile; t in seconds, t >= 0."""
    if profile.kind == "constant":
        return profile.h
    return 0.5 * profile.h * (1.0 + math.sin(2.0 * profile.d * t / profile.h))


def profile_for_edge(edge: DelayedEdge) -> DelayProfile:
    return DelayProfile(kind=edge.profile, h=edge.h, d=edge.d)


class HistoryBuffer:
    """Strictly time-ordered samples of the stacked state.

    lookup(s) interpolates linearly and returns the initial sample for any
    s at or before the start (constant pre-history); asking beyond the
    newest sample is an error. The integrator-facing lookup_many applies
    cubic Hermite interpolation on brackets whose end derivatives were
    backfilled, falling back to linear otherwise, and clamps small stage
    lookaheads to the newest sample.
    """

    def __init__(self, t0: float, x0, dt: float, capacity: int = 1024):
        x0 = np.asarray(x0, dtype=float).reshape(-1)
        self.dim = x0.size
        self.dt = float(dt)
        capacity = max(int(capacity), 2)
        self._t = np.empty(capacity)
        self._x = np.empty((capacity, self.dim))
        self._dx = np.zeros((capacity, self.dim))
        self._has_dx = np.zeros(capacity, dtype=bool)
        self._count = 0
        self._append_unchecked(float(t0), x0)

    def _append_unchecked(self, t: float, x: np.ndarray):
        if self._count == self._t.shape[0]:
            grow = 2 * self._count
            self._t = np.concatenate([self._t, np.empty(self._count)])
            self._x = np.vstack([self._x, np.empty((self._count, self.dim))])
            self._dx = np.vstack([self._dx, np.zeros((self._count, self.dim))])
            self._has_dx = np.concatenate(
                [self._has_dx, np.zeros(self._count, dtype=bool)])
            assert self._t.shape[0] == grow
        self._t[self._count] = t
        self._x[self._count] = x
        self._has_dx[self._count] = False
        self._count += 1

    @property
    def latest_time(self) -> float:
        return float(self._t[self._count - 1])

    @property
    def earliest_time(self) -> float:
        return float(self._t[0])

    def append(self, t: float, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.dim:
            raise ValueError(f"sample dimension {x.size} != {self.dim}")
        if t <= self.latest_time:
            raise ValueError(
                f"timestamps must be strictly increasing: {t} after "
                f"{self.latest_time}")
        self._append_unchecked(float(t), x)

    def backfill_derivative(self, dx):
        """Record the exact state derivative of the newest sample."""
        dx = np.asarray(dx, dtype=float).reshape(-1)
        if dx.size != self.dim:
            raise ValueError(f"derivative dimension {dx.size} != {self.dim}")
        self._dx[self._count - 1] = dx
        self._has_dx[self._count - 1] = True

    def lookup(self, s: float) -> np.ndarray:
        """Linearly interpolated state at time s <= latest sample time."""
        if s > self.latest_time + 1e-9:
            raise ValueError(
                f"lookup at {s} is ahead of the newest sample "
                f"{self.latest_time}")
        c = self._count
        if s <= self._t[0]:
            return self._x[0].copy()
        idx = int(np.searchsorted(self._t[:c], s, side="right")) - 1
        if idx >= c - 1:
            return self._x[c - 1].copy()
        t0, t1 = self._t[idx], self._t[idx + 1]
        th = (s - t0) / (t1 - t0)
        return (1.0 - th) * self._x[idx] + th * self._x[idx + 1]

    def lookup_many(self, s) -> np.ndarray:
        """Smooth vectorized lookup for m times at once; returns (m, dim).

        Uses cubic Hermite interpolation where bracket derivatives exist,
        linear interpolation otherwise. Times up to one-and-a-half steps
        ahead of the newest sample clamp to it (RK4 stage lookahead when a
        delay passes through zero); beyond that is an error.
        """
        s = np.asarray(s, dtype=float).reshape(-1)
        c = self._count
        latest = self._t[c - 1]
        if np.any(s > latest + 1.5 * self.dt + 1e-12):
            raise ValueError(
                f"lookup at {float(np.max(s))} is beyond the stage window "
                f"of the newest sample {latest}")
        s_eff = np.minimum(s, latest)
        if c == 1:
            return np.broadcast_to(self._x[0], (s.size, self.dim)).copy()
        idx = np.searchsorted(self._t[:c], s_eff, side="right") - 1
        idx = np.clip(idx, 0, c - 2)
        t0 = self._t[idx]
        t1 = self._t[idx + 1]
        y0 = self._x[idx]
        y1 = self._x[idx + 1]
        th = np.clip((s_eff - t0) / (t1 - t0), 0.0, 1.0)[:, None]
        linear = (1.0 - th) * y0 + th * y1
        have = self._has_dx[idx] & self._has_dx[idx + 1]
        if not np.any(have):
            return linear
        hstep = (t1 - t0)[:, None]
        d0 = self._dx[idx]
        d1 = self._dx[idx + 1]
        th2 = th * th
        th3 = th2 * th
        hermite = ((2.0 * th3 - 3.0 * th2 + 1.0) * y0
                   + (th3 - 2.0 * th2 + th) * hstep * d0
                   + (-2.0 * th3 + 3.0 * th2) * y1
                   + (th3 - th2) * hstep * d1)
        return np.where(have[:, None], hermite, linear)

    def lookup_smooth(self, s: float) -> np.ndarray:
        return self.lookup_many([s])[0]


@dataclass
class Trace:
    """Uniform-grid record of a simulation run.

    Per-craft arrays are shaped (T, N, 3). torque is NaN for runs of the
    linear comparison model, which has no physical torque path. A truncated
    trace carries the divergence flag and reason ("mrp_singularity" or
    "state_blowup"); the sample that tripped the guard is retained.
    """

    t: np.ndarray
    sigma: np.ndarray
    sigma_dot: np.ndarray
    omega: np.ndarray
    torque: np.ndarray
    error: np.ndarray
    dt: float
    diverged: bool = False
    divergence_reason: str | None = None

    @property
    def n(self) -> int:
        return self.sigma.shape[1]

    @property
    def final_time(self) -> float:
        return float(self.t[-1])


def _tau_arrays(profiles):
    kinds = np.array([p.kind == "constant" for p in profiles])
    h = np.array([p.h for p in profiles])
    d = np.array([p.d for p in profiles])

    def taus_at(t: float) -> np.ndarray:
        sin_part = 0.5 * h * (1.0 + np.sin(2.0 * d * t / h))
        return np.where(kinds, h, sin_part)

    return taus_at


def _check_guards(y: np.ndarray, n: int):
    """Divergence reason for an accepted state, or None."""
    sig = y[: 3 * n].reshape(n, 3)
    norms2 = np.einsum("ni,ni->n", sig, sig)
    if np.any(~np.isfinite(y)):
        return "state_blowup"
    if np.any(norms2 >= MRP_GUARD_NORM * MRP_GUARD_NORM):
        return "mrp_singularity"
    if np.any(np.abs(y) > BLOWUP_LIMIT):
        return "state_blowup"
    return None


def simulate(scenario: Scenario) -> Trace:
    """Integrate the full nonlinear N-craft closed loop for a scenario.

    Deterministic: the same scenario always produces the identical trace.
    On divergence the trace is truncated and flagged instead of raising.
    """
    scenario.validate()
    topo = scenario.build_topology()
    n = scenario.n
    gamma = scenario.gamma
    dt = scenario.dt
    nsteps = int(round(scenario.t_final / dt))
    L = topo.laplacian
    J = scenario.inertias
    Jinv = np.linalg.inv(J)

    edge_slots = [(3 * e.src, 3 * e.dst, L[e.dst, e.src]) for e in scenario.edges]
    taus_at = _tau_arrays([profile_for_edge(e) for e in scenario.edges])
    E = build_consensus_operator(n).E if n >= 2 else None

    sig0 = scenario.sigma0
    om0 = scenario.omega0
    x2_0 = np.einsum("nij,nj->ni", kinematics_matrix(sig0), om0)
    y = np.concatenate([sig0.ravel(), om0.ravel()])
    x0 = np.concatenate([sig0.ravel(), x2_0.ravel()])

    hist = HistoryBuffer(0.0, x0, dt, capacity=nsteps + 1)

    def delayed_command(t: float) -> np.ndarray:
        """Delayed part of the consensus command, depends only on t."""
        du = np.zeros(3 * n)
        if not edge_slots:
            return du
        xs = hist.lookup_many(t - taus_at(t))
        for k, (si, sj, g) in enumerate(edge_slots):
            xd = xs[k]
            du[sj : sj + 3] -= g * (xd[si : si + 3]
                                    + gamma * xd[3 * n + si : 3 * n + si + 3])
        return du

    def rhs(t: float, yv: np.ndarray, du: np.ndarray):
        sig = yv[: 3 * n].reshape(n, 3)
        om = yv[3 * n :].reshape(n, 3)
        P = kinematics_matrix(sig)
        sd = np.einsum("nij,nj->ni", P, om)
        u = -yv[: 3 * n] - gamma * sd.ravel() + du
        v = u.reshape(n, 3)
        # linearizing inner loop: torque for sigma_dd = v, then Euler dynamics
        dots = np.einsum("ni,ni->n", sig, sig)
        Pinv = (16.0 / (1.0 + dots) ** 2)[:, None, None] * np.swapaxes(P, 1, 2)
        Pdot = kinematics_rate_matrix(sig, sd)
        wdot_des = np.einsum(
            "nij,nj->ni", Pinv, v - np.einsum("nij,nj->ni", Pdot, om))
        Jw = np.einsum("nij,nj->ni", J, om)
        tau = np.einsum("nij,nj->ni", J, wdot_des) + np.cross(om, Jw)
        wdot = np.einsum("nij,nj->ni", Jinv, -np.cross(om, Jw) + tau)
        ydot = np.concatenate([sd.ravel(), wdot.ravel()])
        return ydot, sd, u, tau

    T = nsteps + 1
    out_t = np.arange(T) * dt
    out_sigma = np.empty((T, n, 3))
    out_sd = np.empty((T, n, 3))
    out_omega = np.empty((T, n, 3))
    out_tau = np.empty((T, n, 3))
    out_err = np.zeros(T)

    def record_state(k: int, yv: np.ndarray, xv: np.ndarray):
        out_sigma[k] = yv[: 3 * n].reshape(n, 3)
        out_omega[k] = yv[3 * n :].reshape(n, 3)
        if E is not None:
            out_err[k] = np.linalg.norm(E @ xv)

    record_state(0, y, x0)
    diverged_reason = None
    last = nsteps
    for k in range(nsteps):
        t = out_t[k]
        du1 = delayed_command(t)
        k1, sd1, u1, tau1 = rhs(t, y, du1)
        hist.backfill_derivative(np.concatenate([sd1.ravel(), u1]))
        out_sd[k] = sd1
        out_tau[k] = tau1

        du2 = delayed_command(t + 0.5 * dt)
        k2, _, _, _ = rhs(t + 0.5 * dt, y + (0.5 * dt) * k1, du2)
        k3, _, _, _ = rhs(t + 0.5 * dt, y + (0.5 * dt) * k2, du2)
        du4 = delayed_command(t + dt)
        k4, _, _, _ = rhs(t + dt, y + dt * k3, du4)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        sig = y[: 3 * n].reshape(n, 3)
        om = y[3 * n :].reshape(n, 3)
        x = np.concatenate([sig.ravel(),
                            np.einsum("nij,nj->ni", kinematics_matrix(sig), om).ravel()])
        record_state(k + 1, y, x)
        diverged_reason = _check_guards(y, n)
        if diverged_reason is not None:
            last = k + 1
            break
        hist.append(out_t[k + 1], x)

    # fill the derivative-based columns of the final retained sample
    with np.errstate(all="ignore"):
        _, sd_f, _, tau_f = rhs(out_t[last], y, delayed_command(out_t[last]))
    out_sd[last] = sd_f
    out_tau[last] = tau_f

    end = last + 1
    return Trace(
        t=out_t[:end], sigma=out_sigma[:end], sigma_dot=out_sd[:end],
        omega=out_omega[:end], torque=out_tau[:end], error=out_err[:end],
        dt=dt, diverged=diverged_reason is not None,
        divergence_reason=diverged_reason,
    )


def _edge_pattern(n: int, edge, A_e: np.ndarray, gamma: float):
    """Extract the single-coefficient structure of one delayed-edge matrix.

    Returns (si, sj, g) if A_e has exactly the assembled form for this edge,
    else None (caller falls back to a dense matrix-vector product).
    """
    i, j = edge
    g = -A_e[3 * n + 3 * j, 3 * i]
    M = np.zeros_like(A_e)
    for a in range(3):
        M[3 * n + 3 * j + a, 3 * i + a] = -g
        M[3 * n + 3 * j + a, 3 * n + 3 * i + a] = -gamma * g
    if np.array_equal(M, A_e):
        return (3 * i, 3 * j, g)
    return None


def simulate_linear(closed_loop: ClosedLoopMatrices, delays, x0, dt: float,
                    t_final: float) -> Trace:
    """Integrate the stacked delayed linear system x_dot = A0 x + sum Ae x_d.

    delays maps each edge of closed_loop.Aij to a DelayProfile (a list of
    DelayedEdge objects is also accepted). The trace reports omega as
    P(sigma)^-1 sigma_dot and NaN torque.
    """
    if isinstance(delays, dict):
        profiles = {k: (profile_for_edge(v) if isinstance(v, DelayedEdge) else v)
                    for k, v in delays.items()}
    else:
        profiles = {(e.src, e.dst): profile_for_edge(e) for e in delays}
    missing = set(closed_loop.Aij) - set(profiles)
    if missing:
        raise ValueError(f"missing delay profile for edges {sorted(missing)}")

    n = closed_loop.n
    gamma = closed_loop.gamma
    if dt <= 0.0 or t_final <= 0.0:
        raise ValueError("dt and t_final must be > 0")
    x = np.asarray(x0.concat() if hasattr(x0, "concat") else x0,
                   dtype=float).reshape(-1)
    if x.size != 6 * n:
        raise ValueError(f"x0 dimension {x.size} != {6 * n}")

    edge_keys = sorted(closed_loop.Aij)
    taus_at = _tau_arrays([profiles[k] for k in edge_keys])
    # lookups are issued in edge_keys order, so pos indexes the lookup rows
    sparse, dense = [], []
    for pos, key in enumerate(edge_keys):
        pat = _edge_pattern(n, key, closed_loop.Aij[key], gamma)
        if pat is not None:
            sparse.append((pos, pat))
        else:
            dense.append((pos, closed_loop.Aij[key]))

    A0 = closed_loop.A0
    E = build_consensus_operator(n).E if n >= 2 else None
    nsteps = int(round(t_final / dt))

    hist = HistoryBuffer(0.0, x, dt, capacity=nsteps + 1)

    def rhs(t: float, xv: np.ndarray, xs) -> np.ndarray:
        dx = A0 @ xv
        for pos, (si, sj, g) in sparse:
            xd = xs[pos]
            dx[3 * n + sj : 3 * n + sj + 3] -= g * (
                xd[si : si + 3] + gamma * xd[3 * n + si : 3 * n + si + 3])
        for pos, A_e in dense:
            dx += A_e @ xs[pos]
        return dx

    def stage_lookups(t: float):
        if not edge_keys:
            return np.zeros((0, 6 * n))
        return hist.lookup_many(t - taus_at(t))

    T = nsteps + 1
    out_t = np.arange(T) * dt
    xs_all = np.empty((T, 6 * n))
    out_err = np.zeros(T)
    xs_all[0] = x
    if E is not None:
        out_err[0] = np.linalg.norm(E @ x)

    diverged_reason = None
    last = nsteps
    for k in range(nsteps):
        t = out_t[k]
        k1 = rhs(t, x, stage_lookups(t))
        hist.backfill_derivative(k1)
        mid = stage_lookups(t + 0.5 * dt)
        k2 = rhs(t + 0.5 * dt, x + (0.5 * dt) * k1, mid)
        k3 = rhs(t + 0.5 * dt, x + (0.5 * dt) * k2, mid)
        k4 = rhs(t + dt, x + dt * k3, stage_lookups(t + dt))
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        xs_all[k + 1] = x
        if E is not None:
            out_err[k + 1] = np.linalg.norm(E @ x)
        if not np.all(np.isfinite(x)) or np.any(np.abs(x) > BLOWUP_LIMIT):
            diverged_reason = "state_blowup"
            last = k + 1
            break
        hist.append(out_t[k + 1], x)

    end = last + 1
    sigma = xs_all[:end, : 3 * n].reshape(end, n, 3)
    sigma_dot = xs_all[:end, 3 * n :].reshape(end, n, 3)
    with np.errstate(all="ignore"):
        omega = np.einsum("tnij,tnj->tni", kinematics_matrix_inverse(sigma),
                          sigma_dot)
    return Trace(
        t=out_t[:end], sigma=sigma, sigma_dot=sigma_dot, omega=omega,
        torque=np.full((end, n, 3), np.nan), error=out_err[:end], dt=dt,
        diverged=diverged_reason is not None, divergence_reason=diverged_reason,
    )


def calibrate_scalar_dde(dt: float = 0.01, t_final: float = 3.0):
    """Integrate the scalar calibration problem xdot = -x(t - 1).

    Pre-history x(s) = 1 for s <= 0. The method-of-steps solution gives
    x(1) = 0, x(2) = -1/2, x(3) = -1/6, which pins down the integrator and
    history machinery end to end. Returns (times, values).
    """
    if dt <= 0.0 or t_final <= 0.0:
        raise ValueError("dt and t_final must be > 0")
    nsteps = int(round(t_final / dt))
    times = np.arange(nsteps + 1) * dt
    vals = np.empty(nsteps + 1)
    y = 1.0
    vals[0] = y
    hist = HistoryBuffer(0.0, [1.0], dt, capacity=nsteps + 1)
    for k in range(nsteps):
        t = times[k]
        d1 = -hist.lookup_smooth(t - 1.0)[0]
        hist.backfill_derivative([d1])
        dmid = -hist.lookup_smooth(t + 0.5 * dt - 1.0)[0]
        d4 = -hist.lookup_smooth(t + dt - 1.0)[0]
        k1, k2, k3, k4 = d1, dmid, dmid, d4
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        vals[k + 1] = y
        hist.append(times[k + 1], [y])
    return times, vals
