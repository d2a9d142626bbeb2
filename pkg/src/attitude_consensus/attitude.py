"""Single-spacecraft attitude kinematics, dynamics, and feedback linearization.

Attitude is parameterized by Modified Rodrigues Parameters (MRP),
sigma = n_hat * tan(Phi/4) for principal axis n_hat and principal angle Phi.
The parameterization is singular at Phi = 2*pi; rotations are assumed to stay
below that, and a guard raises a diagnostic well before the singularity.

The coordinate change sigma2 = P(sigma) * omega turns the rigid-body equations
into a second-order system in sigma alone, and the linearizing control renders
it an exact double integrator sigma_dd = v. All heavy math helpers broadcast
over leading axes so N spacecraft can be evaluated in one call.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .matcore import skew

# Guard angle: raise before the MRP singularity at principal angle 2*pi.
MRP_GUARD_ANGLE = 2.0 * math.pi - 0.1
MRP_GUARD_NORM = math.tan(MRP_GUARD_ANGLE / 4.0)


class MrpSingularityError(RuntimeError):
    """Attitude approached the MRP singularity (principal angle near 2*pi)."""


def _vec3(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True)
class Mrp:
    """MRP attitude vector; valid while the principal angle stays below 2*pi."""

    sigma: np.ndarray

    def __post_init__(self):
        s = _vec3(self.sigma, "sigma")
        object.__setattr__(self, "sigma", s)
        if float(np.linalg.norm(s)) >= MRP_GUARD_NORM:
            raise MrpSingularityError(
                f"principal angle {self.principal_angle_of(s):.4f} rad >= guard "
                f"{MRP_GUARD_ANGLE:.4f} rad"
            )

    @staticmethod
    def principal_angle_of(sigma) -> float:
        return 4.0 * math.atan(float(np.linalg.norm(sigma)))

    @property
    def principal_angle(self) -> float:
        return self.principal_angle_of(self.sigma)


@dataclass(frozen=True)
class RigidBodyParams:
    """Rigid-body inertia in kg*m^2; must be symmetric positive definite."""

    J: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        if J.shape != (3, 3):
            raise ValueError(f"inertia must be 3x3, got {J.shape}")
        if not np.all(np.isfinite(J)):
            raise ValueError("inertia has non-finite entries")
        if np.max(np.abs(J - J.T)) > 1e-9:
            raise ValueError("inertia matrix must be symmetric")
        if np.linalg.eigvalsh(0.5 * (J + J.T))[0] <= 0.0:
            raise ValueError("inertia matrix must be positive definite")
        object.__setattr__(self, "J", J)


@dataclass(frozen=True)
class SpacecraftState:
    """Physical state: attitude sigma and body angular velocity omega (rad/s)."""

    sigma: Mrp
    omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", _vec3(self.omega, "omega"))


@dataclass(frozen=True)
class LinearizedState:
    """Double-integrator coordinates: sigma1 = sigma, sigma2 = sigma_dot."""

    sigma1: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "sigma1", _vec3(self.sigma1, "sigma1"))
        object.__setattr__(self, "sigma2", _vec3(self.sigma2, "sigma2"))


def _skew_batch(v: np.ndarray) -> np.ndarray:
    # v: (..., 3) -> (..., 3, 3)
    out = np.zeros(v.shape + (3,), dtype=float)
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def kinematics_matrix(sigma) -> np.ndarray:
    """P(sigma) = 1/4 (2[sigma~] + 2 sigma sigma^T + (1 - sigma^T sigma) I).

    Accepts a single 3-vector or an array of shape (..., 3); returns (..., 3, 3).
    sigma_dot = P(sigma) @ omega.
    """
    s = np.asarray(sigma, dtype=float)
    outer = np.einsum("...i,...j->...ij", s, s)
    dot = np.einsum("...i,...i->...", s, s)
    eye = np.eye(3)
    return 0.25 * (2.0 * _skew_batch(s) + 2.0 * outer
                   + (1.0 - dot)[..., None, None] * eye)


def kinematics_matrix_inverse(sigma) -> np.ndarray:
    """P(sigma)^-1 via the closed identity (16 / (1 + sigma^T sigma)^2) P^T.

    Falls back to a direct solve if the closed form ever produces
    non-finite entries.
    """
    s = np.asarray(sigma, dtype=float)
    P = kinematics_matrix(s)
    dot = np.einsum("...i,...i->...", s, s)
    scale = 16.0 / (1.0 + dot) ** 2
    Pinv = scale[..., None, None] * np.swapaxes(P, -1, -2)
    if not np.all(np.isfinite(Pinv)):
        Pinv = np.linalg.solve(P, np.broadcast_to(np.eye(3), P.shape).copy())
    return Pinv


def kinematics_rate_matrix(sigma, sigma_dot) -> np.ndarray:
    """Pdot: time derivative of P(sigma) along sigma_dot (chain rule, exact)."""
    s = np.asarray(sigma, dtype=float)
    sd = np.asarray(sigma_dot, dtype=float)
    cross_outer = (np.einsum("...i,...j->...ij", sd, s)
                   + np.einsum("...i,...j->...ij", s, sd))
    ddot = np.einsum("...i,...i->...", s, sd)
    eye = np.eye(3)
    return 0.25 * (2.0 * _skew_batch(sd) + 2.0 * cross_outer
                   - 2.0 * ddot[..., None, None] * eye)


def euler_omega_dot(omega, torque, J) -> np.ndarray:
    """omega_dot = J^-1 (-[omega~] J omega + torque); broadcasts over (..., 3)."""
    w = np.asarray(omega, dtype=float)
    t = np.asarray(torque, dtype=float)
    Jw = np.einsum("...ij,...j->...i", J, w)
    rhs = -np.cross(w, Jw) + t
    return np.linalg.solve(J, rhs[..., None])[..., 0]


def euler_dynamics(state: SpacecraftState, torque, params: RigidBodyParams) -> np.ndarray:
    """Angular acceleration of a rigid body under a control torque."""
    return euler_omega_dot(state.omega, _vec3(torque, "torque"), params.J)


def to_linearized(state: SpacecraftState) -> LinearizedState:
    """Map (sigma, omega) to (sigma1, sigma2) with sigma2 = P(sigma) omega."""
    P = kinematics_matrix(state.sigma.sigma)
    return LinearizedState(sigma1=state.sigma.sigma, sigma2=P @ state.omega)


def from_linearized(lin: LinearizedState) -> SpacecraftState:
    """Inverse of to_linearized: omega = P(sigma)^-1 sigma_dot."""
    Pinv = kinematics_matrix_inverse(lin.sigma1)
    return SpacecraftState(sigma=Mrp(lin.sigma1), omega=Pinv @ lin.sigma2)


def linearizing_matrices(lin: LinearizedState, params: RigidBodyParams):
    """First-principles M(sigma1) and C(sigma1, sigma2).

    Substituting omega = P^-1 sigma_dot into the Euler equation gives
        M = P^-1 J P^-1
        C = P^-1 (-J P^-1 Pdot P^-1 + [(P^-1 sigma_dot)~] J P^-1)
    so that M sigma_dd + C sigma_dot = u with torque = P u.
    """
    J = params.J
    Pinv = kinematics_matrix_inverse(lin.sigma1)
    Pdot = kinematics_rate_matrix(lin.sigma1, lin.sigma2)
    omega = Pinv @ lin.sigma2
    M = Pinv @ J @ Pinv
    C = Pinv @ (-J @ Pinv @ Pdot @ Pinv + skew(omega) @ J @ Pinv)
    return M, C


def feedback_linearize(lin: LinearizedState, v, params: RigidBodyParams):
    """Control pair (u, torque) achieving sigma_dd = v exactly.

    u = C sigma2 + M v cancels the nonlinear terms; the physical torque is
    recovered as torque = P(sigma1) u.
    """
    vv = _vec3(v, "v")
    M, C = linearizing_matrices(lin, params)
    u = C @ lin.sigma2 + M @ vv
    P = kinematics_matrix(lin.sigma1)
    return u, P @ u


def torque_for_acceleration(sigma, sigma_dot, v, J) -> np.ndarray:
    """Torque giving sigma_dd = v, computed on the omega side; broadcasts.

    Algebraically equal to P @ u from feedback_linearize but avoids the
    double P^-1 sandwich: omega_dot_des = P^-1 (v - Pdot omega), then
    torque = J omega_dot_des + omega x (J omega).
    """
    s = np.asarray(sigma, dtype=float)
    sd = np.asarray(sigma_dot, dtype=float)
    a = np.asarray(v, dtype=float)
    Pinv = kinematics_matrix_inverse(s)
    Pdot = kinematics_rate_matrix(s, sd)
    omega = np.einsum("...ij,...j->...i", Pinv, sd)
    wdot_des = np.einsum("...ij,...j->...i", Pinv,
                         a - np.einsum("...ij,...j->...i", Pdot, omega))
    Jw = np.einsum("...ij,...j->...i", J, omega)
    return np.einsum("...ij,...j->...i", J, wdot_des) + np.cross(omega, Jw)
