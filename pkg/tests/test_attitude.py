"""Attitude kinematics, rigid-body dynamics, and the linearizing control."""

import numpy as np
import pytest

from attitude_consensus.attitude import (
    MRP_GUARD_NORM,
    LinearizedState,
    Mrp,
    MrpSingularityError,
    RigidBodyParams,
    SpacecraftState,
    euler_dynamics,
    euler_omega_dot,
    feedback_linearize,
    from_linearized,
    kinematics_matrix,
    kinematics_matrix_inverse,
    kinematics_rate_matrix,
    linearizing_matrices,
    to_linearized,
    torque_for_acceleration,
)
from oracle_helpers import (
    pmat_reference,
    random_linearization_residuals,
    rk4_step,
    second_difference_residual,
)


def random_attitudes(count, scale=1.0, seed=0):
    np.random.seed(seed)
    return np.random.uniform(-scale, scale, size=(count, 3))


# ---------------------------------------------------------------- kinematics


def test_kinematics_matrix_at_origin():
    assert np.array_equal(kinematics_matrix(np.zeros(3)), 0.25 * np.eye(3))


def test_kinematics_matrix_unit_x():
    expected = 0.25 * np.array([
        [2.0, 0.0, 0.0],
        [0.0, 0.0, -2.0],
        [0.0, 2.0, 0.0],
    ])
    assert np.allclose(kinematics_matrix([1.0, 0.0, 0.0]), expected, atol=1e-15)


def test_kinematics_matrix_orthogonality_scalar():
    # P P^T collapses to a scalar multiple of the identity
    sigma = np.array([0.8, 0.8, 0.8])
    P = kinematics_matrix(sigma)
    s2 = float(sigma @ sigma)
    scale = ((1.0 + s2) / 4.0) ** 2
    assert abs(scale - 0.5329) < 1e-12
    assert np.allclose(P @ P.T, scale * np.eye(3), atol=1e-13)


def test_kinematics_matrix_orthogonality_property():
    for sigma in random_attitudes(100, scale=3.0, seed=5):
        P = kinematics_matrix(sigma)
        scale = ((1.0 + float(sigma @ sigma)) / 4.0) ** 2
        assert np.allclose(P @ P.T, scale * np.eye(3), atol=1e-10 * max(1.0, scale))


def test_kinematics_matrix_matches_reference():
    for sigma in random_attitudes(50, scale=2.0, seed=9):
        assert np.allclose(kinematics_matrix(sigma), pmat_reference(sigma),
                           atol=1e-14)


def test_kinematics_inverse_is_inverse():
    for sigma in random_attitudes(100, scale=3.0, seed=13):
        P = kinematics_matrix(sigma)
        Pinv = kinematics_matrix_inverse(sigma)
        assert np.allclose(P @ Pinv, np.eye(3), atol=1e-10)
        assert np.allclose(Pinv @ P, np.eye(3), atol=1e-10)


def test_kinematics_rate_matrix_matches_finite_difference():
    np.random.seed(17)
    for _ in range(30):
        sigma = np.random.uniform(-1.0, 1.0, 3)
        sigma_dot = np.random.uniform(-1.0, 1.0, 3)
        eps = 1e-6
        fd = (kinematics_matrix(sigma + eps * sigma_dot)
              - kinematics_matrix(sigma - eps * sigma_dot)) / (2.0 * eps)
        assert np.allclose(kinematics_rate_matrix(sigma, sigma_dot), fd, atol=1e-8)


def test_kinematics_rate_zero_for_constant_attitude():
    sigma = np.array([0.3, -0.2, 0.5])
    assert np.allclose(kinematics_rate_matrix(sigma, np.zeros(3)), 0.0, atol=0.0)


# ------------------------------------------------------------------- attitude


def test_mrp_guard_rejects_near_singular():
    direction = np.array([1.0, 0.0, 0.0])
    with pytest.raises(MrpSingularityError):
        Mrp(direction * MRP_GUARD_NORM)
    with pytest.raises(MrpSingularityError):
        Mrp(direction * (MRP_GUARD_NORM * 1.5))
    # just inside the guard is fine
    Mrp(direction * (MRP_GUARD_NORM * 0.999))


def test_mrp_principal_angle():
    assert Mrp(np.zeros(3)).principal_angle == 0.0
    # sigma = tan(pi/8) along any axis is a quarter turn
    half = np.tan(np.pi / 8.0)
    assert abs(Mrp([half, 0.0, 0.0]).principal_angle - np.pi / 2.0) < 1e-12


def test_rigid_body_params_validation():
    with pytest.raises(ValueError):
        RigidBodyParams(J=np.diag([1.0, 1.0, -1.0]))
    J = np.diag([1.0, 2.0, 3.0]).astype(float)
    J[0, 1] = 1e-6
    with pytest.raises(ValueError):
        RigidBodyParams(J=J)
    RigidBodyParams(J=np.diag([1.0, 2.0, 3.0]))


# ------------------------------------------------------------------ dynamics


def test_euler_gyroscopic_example():
    omega_dot = euler_omega_dot(np.array([1.0, 1.0, 0.0]), np.zeros(3),
                                np.diag([1.0, 2.0, 3.0]))
    assert np.allclose(omega_dot, [0.0, 0.0, -1.0 / 3.0], atol=1e-14)


def test_euler_equilibria():
    J = np.diag([2.0, 3.0, 4.0])
    assert np.allclose(euler_omega_dot(np.zeros(3), np.zeros(3), J), 0.0)
    # spin about a principal axis is torque-free stationary
    assert np.allclose(euler_omega_dot([0.7, 0.0, 0.0], np.zeros(3), J), 0.0,
                       atol=1e-15)


def test_euler_energy_drift_is_small_torque_free():
    J = np.diag([20.0, 30.0, 40.0])
    params = RigidBodyParams(J=J)

    def rhs(_t, w):
        return euler_omega_dot(w, np.zeros(3), J)

    np.random.seed(21)
    w = np.random.uniform(-0.5, 0.5, 3)
    e0 = 0.5 * w @ (J @ w)
    for _ in range(200):
        w = rk4_step(rhs, 0.0, w, 0.01)
    e1 = 0.5 * w @ (J @ w)
    assert abs(e1 - e0) < 1e-9 * max(1.0, abs(e0))
    state = SpacecraftState(sigma=Mrp(np.zeros(3)), omega=w)
    assert np.allclose(euler_dynamics(state, np.zeros(3), params),
                       euler_omega_dot(w, np.zeros(3), J))


# -------------------------------------------------------- state conversions


def test_linearized_rate_at_origin():
    state = SpacecraftState(sigma=Mrp(np.zeros(3)), omega=np.array([4.0, 0.0, 0.0]))
    lin = to_linearized(state)
    assert np.allclose(lin.sigma2, [1.0, 0.0, 0.0], atol=1e-15)


def test_benchmark_initial_rate_row():
    sigma = np.array([0.8, 0.8, 0.8])
    omega = 0.06849 * np.ones(3)
    lin = to_linearized(SpacecraftState(sigma=Mrp(sigma), omega=omega))
    assert np.allclose(lin.sigma2, pmat_reference(sigma) @ omega, atol=1e-14)


def test_linearized_round_trip():
    np.random.seed(25)
    for _ in range(50):
        sigma = np.random.uniform(-1.2, 1.2, 3)
        omega = np.random.uniform(-0.5, 0.5, 3)
        state = SpacecraftState(sigma=Mrp(sigma), omega=omega)
        back = from_linearized(to_linearized(state))
        assert np.allclose(back.sigma.sigma, sigma, atol=1e-12)
        assert np.allclose(back.omega, omega, atol=1e-11)


# ------------------------------------------------------- linearizing control


def test_linearizing_matrices_at_origin():
    J = np.diag([20.0, 30.0, 40.0])
    M, C = linearizing_matrices(LinearizedState(np.zeros(3), np.zeros(3)),
                                RigidBodyParams(J=J))
    assert np.allclose(M, 16.0 * J, atol=1e-12)
    assert np.allclose(C, 0.0, atol=1e-12)


def test_feedback_linearize_at_origin():
    J = np.diag([20.0, 30.0, 40.0])
    v = np.array([0.1, -0.2, 0.3])
    u, torque = feedback_linearize(LinearizedState(np.zeros(3), np.zeros(3)), v,
                                   RigidBodyParams(J=J))
    assert np.allclose(u, 16.0 * (J @ v), atol=1e-12)
    assert np.allclose(torque, 4.0 * (J @ v), atol=1e-12)


def test_torque_paths_agree():
    # dense path P @ u and the omega-side path must coincide
    np.random.seed(29)
    J = np.diag([20.0, 30.0, 40.0])
    params = RigidBodyParams(J=J)
    for _ in range(40):
        sigma = np.random.uniform(-1.0, 1.0, 3)
        sigma_dot = np.random.uniform(-0.5, 0.5, 3)
        v = np.random.uniform(-0.5, 0.5, 3)
        _u, torque = feedback_linearize(LinearizedState(sigma, sigma_dot), v, params)
        direct = torque_for_acceleration(sigma, sigma_dot, v, J)
        assert np.allclose(torque, direct, atol=1e-9 * max(1.0, np.max(np.abs(torque))))


def test_torque_for_acceleration_broadcasts():
    np.random.seed(33)
    sig = np.random.uniform(-0.8, 0.8, (5, 3))
    sigd = np.random.uniform(-0.3, 0.3, (5, 3))
    v = np.random.uniform(-0.2, 0.2, (5, 3))
    J = np.stack([np.diag(np.random.uniform(5.0, 50.0, 3)) for _ in range(5)])
    batched = torque_for_acceleration(sig, sigd, v, J)
    for k in range(5):
        single = torque_for_acceleration(sig[k], sigd[k], v[k], J[k])
        assert np.allclose(batched[k], single, atol=1e-12)


def test_linearizing_torque_enforces_constant_acceleration():
    # spot-check here; the full 50-state sweep runs in the acceptance suite
    residual = second_difference_residual(
        sigma0=[0.4, -0.2, 0.1], omega0=[0.05, 0.1, -0.02],
        J=np.diag([20.0, 30.0, 40.0]), v=[0.3, 0.1, -0.2])
    assert residual < 1e-6


def test_linearizing_torque_random_batch_small():
    residuals = random_linearization_residuals(count=8, seed=77)
    assert residuals.max() < 1e-4
