import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flapsim.spatial import (attitude_error, euler_zyx_to_rotation, expm_so3, hat, integrate_rotation,
                             log_so3, orthogonality_error, orthonormalize, rot_x, rot_z,
                             rotation_to_euler_zyx, vee, velocity_error)

finite = st.floats(-10.0, 10.0, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)
small_angle_vec = st.tuples(*[st.floats(-1.8, 1.8)] * 3).map(np.array)


def test_hat_examples():
    np.testing.assert_array_equal(hat([0, 0, 0]), np.zeros((3, 3)))
    np.testing.assert_array_equal(vee(hat([1, 2, 3])), [1, 2, 3])
    np.testing.assert_allclose(hat([0, 0, 1]) @ [1, 0, 0], [0, 1, 0])


def test_vee_rejects_non_skew():
    with pytest.raises(ValueError):
        vee(np.eye(3))
    with pytest.raises(ValueError):
        vee(np.zeros((2, 2)))


@given(vec3)
def test_vee_hat_roundtrip(v):
    np.testing.assert_array_equal(vee(hat(v)), v)
    S = hat(v)
    np.testing.assert_allclose(hat(vee(S)), S, atol=1e-12)


@given(vec3, vec3)
def test_hat_is_cross(a, b):
    np.testing.assert_allclose(hat(a) @ b, np.cross(a, b), atol=1e-9)


@given(vec3)
def test_expm_is_rotation(w):
    R = expm_so3(w)
    assert orthogonality_error(R) < 1e-12
    assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


@given(small_angle_vec)
def test_log_expm_roundtrip(w):
    np.testing.assert_allclose(log_so3(expm_so3(w)), w, atol=1e-9)


def test_log_near_pi():
    w = np.array([0.0, 0.0, math.pi - 1e-9])
    np.testing.assert_allclose(np.abs(log_so3(expm_so3(w))), np.abs(w), atol=1e-6)
    np.testing.assert_allclose(np.abs(log_so3(rot_x(math.pi))), [math.pi, 0, 0], atol=1e-9)


def test_integrate_identity_and_quarter_turns():
    assert np.array_equal(integrate_rotation(np.eye(3), [0, 0, 0], 0.1), np.eye(3))
    R = np.eye(3)
    for _ in range(1000):
        R = integrate_rotation(R, [0.0, 0.0, math.pi], 1e-3)
    ang = np.linalg.norm(log_so3(rot_z(math.pi).T @ R))
    assert ang < 1e-3
    with pytest.raises(ValueError):
        integrate_rotation(R, [0, 0, 1], 0.0)


@settings(max_examples=25)
@given(st.lists(vec3, min_size=1, max_size=50))
def test_integration_stays_on_so3(rates):
    R = np.eye(3)
    for w in rates:
        R = integrate_rotation(R, w, 1e-3)
        assert orthogonality_error(R) < 1e-9
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-9)


def test_orthonormalize_projects():
    rng = np.random.default_rng(1)
    R = expm_so3([0.3, -0.2, 0.5]) + 1e-3 * rng.normal(size=(3, 3))
    Q = orthonormalize(R)
    assert orthogonality_error(Q) < 1e-12
    assert np.linalg.det(Q) > 0


def test_attitude_error_examples():
    psi, e = attitude_error(np.eye(3), np.eye(3))
    assert psi == 0.0
    np.testing.assert_array_equal(e, 0.0)
    psi, e = attitude_error(rot_z(math.pi), np.eye(3))
    assert psi == pytest.approx(2.0)
    np.testing.assert_allclose(e, 0.0, atol=1e-12)
    psi, _ = attitude_error(rot_x(math.pi / 2), np.eye(3))
    assert psi == pytest.approx(1.0)


@given(small_angle_vec, small_angle_vec, small_angle_vec)
def test_attitude_error_properties(a, b, c):
    R, R_d, L = expm_so3(a), expm_so3(b), expm_so3(c)
    psi, _ = attitude_error(R, R_d)
    assert -1e-12 <= psi <= 2.0 + 1e-12
    assert attitude_error(R, R)[0] == pytest.approx(0.0, abs=1e-12)
    psi_l, _ = attitude_error(L @ R, L @ R_d, 3.0 * np.eye(3))
    assert psi_l == pytest.approx(3.0 * psi, abs=1e-9)


def test_velocity_error_examples():
    np.testing.assert_array_equal(velocity_error([1, 2, 3], np.eye(3), np.eye(3), [1, 2, 3]), 0.0)
    np.testing.assert_array_equal(velocity_error([1, 0, 0], np.eye(3), np.eye(3), [0, 0, 0]), [1, 0, 0])
    np.testing.assert_allclose(velocity_error([0, 0, 0], rot_z(math.pi), np.eye(3), [1, 0, 0]), [1, 0, 0],
                               atol=1e-12)


@given(st.floats(-3.0, 3.0), st.floats(-1.5, 1.5), st.floats(-3.0, 3.0))
def test_euler_roundtrip(roll, pitch, yaw):
    R = euler_zyx_to_rotation(roll, pitch, yaw)
    np.testing.assert_allclose(euler_zyx_to_rotation(*rotation_to_euler_zyx(R)), R, atol=1e-9)
