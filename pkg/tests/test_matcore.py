"""Checks for the small dense linear-algebra helpers."""

import numpy as np
import pytest

from attitude_consensus.matcore import (
    MAX_EIG_DIM,
    ComplexEigenSet,
    eigenset_distance,
    eigenvalues,
    is_negative_definite,
    is_positive_definite,
    kron,
    require_symmetric,
    skew,
    solve,
    symmetric_eigenvalues,
)


def test_skew_example():
    expected = np.array([
        [0.0, -3.0, 2.0],
        [3.0, 0.0, -1.0],
        [-2.0, 1.0, 0.0],
    ])
    assert np.array_equal(skew([1.0, 2.0, 3.0]), expected)


def test_skew_matches_cross_product():
    np.random.seed(7)
    for _ in range(50):
        v = np.random.randn(3)
        w = np.random.randn(3)
        assert np.allclose(skew(v) @ w, np.cross(v, w), atol=1e-14)
        # antisymmetry
        assert np.array_equal(skew(v), -skew(v).T)


def test_skew_rejects_bad_input():
    with pytest.raises(ValueError):
        skew([1.0, 2.0])
    with pytest.raises(ValueError):
        skew([1.0, np.nan, 0.0])


def test_kron_identity_blocks():
    assert np.array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    K = kron(A, np.eye(3))
    assert K.shape == (6, 6)
    assert np.array_equal(K[0:3, 3:6], 2.0 * np.eye(3))


def test_kron_mixed_product_rule():
    np.random.seed(11)
    for _ in range(20):
        A = np.random.randn(2, 3)
        B = np.random.randn(3, 2)
        C = np.random.randn(3, 2)
        D = np.random.randn(2, 3)
        left = kron(A, B) @ kron(C, D)
        right = kron(A @ C, B @ D)
        assert np.allclose(left, right, atol=1e-12)


def test_rotation_generator_eigenvalues():
    es = eigenvalues([[0.0, 1.0], [-1.0, 0.0]])
    got = es.as_array()
    expected = np.array([-1j, 1j])
    assert eigenset_distance(got, expected) < 1e-12


def test_companion_matrix_eigenvalues():
    # roots of s^2 + 5 s + 1
    es = eigenvalues([[0.0, 1.0], [-1.0, -5.0]])
    expected = np.array([(-5.0 - np.sqrt(21.0)) / 2.0,
                         (-5.0 + np.sqrt(21.0)) / 2.0], dtype=complex)
    assert eigenset_distance(es.as_array(), expected) < 1e-12


def test_cycle_adjacency_eigenvalues():
    A = np.array([
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0],
    ])
    expected = np.exp(2j * np.pi * np.arange(3) / 3.0)
    assert eigenset_distance(eigenvalues(A).as_array(), expected) < 1e-12


def test_eigenvalues_sorted_and_deterministic():
    np.random.seed(3)
    M = np.random.randn(8, 8)
    a = eigenvalues(M).as_array()
    b = eigenvalues(M.copy()).as_array()
    assert np.array_equal(a, b)
    keys = [(z.real, z.imag) for z in a]
    assert keys == sorted(keys)


def test_eigenvalue_product_matches_determinant():
    np.random.seed(19)
    for _ in range(25):
        n = np.random.randint(2, 11)
        M = np.random.randn(n, n)
        prod = np.prod(eigenvalues(M).as_array())
        det = np.linalg.det(M)
        assert abs(prod - det) < 1e-8 * max(1.0, abs(det))


def test_eigenvalues_rejects_oversized_and_nonsquare():
    with pytest.raises(ValueError):
        eigenvalues(np.zeros((MAX_EIG_DIM + 1, MAX_EIG_DIM + 1)))
    with pytest.raises(ValueError):
        eigenvalues(np.zeros((3, 4)))
    # the cap itself is fine
    vals = eigenvalues(np.eye(MAX_EIG_DIM)).as_array()
    assert np.allclose(vals, 1.0)


def test_eigenset_distance_pairs_conjugates_correctly():
    base = np.array([1.0 + 2.0j, 1.0 - 2.0j, -3.0 + 0.0j])
    jig = base + 1e-13 * np.array([1.0, -1.0, 1.0])
    assert eigenset_distance(base, jig) < 1e-12
    far = np.array([1.0 + 2.0j, 1.0 - 2.0j, 4.0 + 0.0j])
    assert abs(eigenset_distance(base, far) - 7.0) < 1e-12


def test_eigenset_distance_size_mismatch():
    with pytest.raises(ValueError):
        eigenset_distance(np.array([1.0 + 0j]), np.array([1.0 + 0j, 2.0 + 0j]))


def test_eigenset_dataclass_roundtrip():
    es = ComplexEigenSet(values=(1 + 0j, 2 + 0j), tolerance=1e-8)
    assert len(es) == 2
    assert np.array_equal(es.as_array(), np.array([1 + 0j, 2 + 0j]))


def test_require_symmetric_accepts_and_rejects():
    S = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert np.array_equal(require_symmetric(S), S)
    bad = S.copy()
    bad[0, 1] += 1e-6
    with pytest.raises(ValueError):
        require_symmetric(bad)
    # within the absolute tolerance is still accepted
    ok = S.copy()
    ok[0, 1] += 1e-10
    require_symmetric(ok)


def test_symmetric_eigenvalues_sorted_real():
    np.random.seed(23)
    A = np.random.randn(6, 6)
    S = A + A.T
    vals = symmetric_eigenvalues(S)
    assert vals.dtype == float
    assert np.all(np.diff(vals) >= 0.0)
    assert eigenset_distance(vals.astype(complex), eigenvalues(S).as_array()) < 1e-9


def test_negative_definite_boundary():
    assert is_negative_definite(-np.eye(3))
    assert not is_negative_definite(np.eye(3))
    # a tiny nonnegative eigenvalue must not count as negative definite
    assert not is_negative_definite(np.diag([-1.0, 1e-12]))
    assert is_negative_definite(np.diag([-1.0, -1e-6]), tol=1e-9)


def test_positive_definite():
    assert is_positive_definite(np.eye(2))
    assert not is_positive_definite(np.diag([1.0, -1e-6]))
    assert not is_positive_definite(np.diag([1.0, 1e-12]))


def test_solve_matches_numpy():
    np.random.seed(31)
    A = np.random.randn(5, 5) + 5.0 * np.eye(5)
    b = np.random.randn(5)
    x = solve(A, b)
    assert np.allclose(A @ x, b, atol=1e-10)
    with pytest.raises(ValueError):
        solve(A, [np.inf] * 5)
