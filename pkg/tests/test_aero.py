import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from flapsim import aero
from flapsim.aero import (AeroEnvironment, StripKinematics, aero_coefficients, angle_of_attack,
                          effective_velocity, force_arrays, induced_velocity, moment_arrays,
                          re_power_laws, rotational_coefficient, strip_forces, strip_moment)
from flapsim.geometry import BladeElement

ENV = AeroEnvironment()
unit = st.tuples(*[st.floats(-1.0, 1.0)] * 3).map(np.array).filter(lambda v: np.linalg.norm(v) > 0.1)


def test_power_laws_oracle():
    A_L, A_D, C_D0 = re_power_laws(7000.0)
    assert A_L == pytest.approx(1.966 - 3.94 * 7000.0 ** -0.429, abs=1e-12)
    assert A_L == pytest.approx(1.878, abs=1e-3)
    assert A_D == pytest.approx(1.753, abs=1e-3)
    assert C_D0 == pytest.approx(0.0431, abs=1e-4)
    with pytest.raises(ValueError):
        re_power_laws(0.0)


def test_coefficients_examples():
    A_L, _, C_D0 = re_power_laws(7000.0)
    C_L, C_D = aero_coefficients(0.0, 7000.0)
    assert C_L == 0.0 and C_D == pytest.approx(C_D0)
    assert aero_coefficients(math.pi / 4, 7000.0)[0] == pytest.approx(A_L)


@given(st.floats(0.0, math.pi))
def test_coefficient_symmetry(alpha):
    C_L, C_D = aero_coefficients(alpha, 7000.0)
    C_L2, _ = aero_coefficients(math.pi - alpha, 7000.0)
    assert C_L == pytest.approx(-C_L2, abs=1e-12)
    assert C_D <= aero_coefficients(math.pi / 2, 7000.0)[1] + 1e-12


def test_rotational_coefficient():
    assert rotational_coefficient(0.75) == 0.0
    assert rotational_coefficient(0.0) == pytest.approx(2.3562, abs=1e-4)
    assert rotational_coefficient(1.0) == pytest.approx(-0.7854, abs=1e-4)
    with pytest.raises(ValueError):
        rotational_coefficient(1.5)


def test_effective_velocity_examples():
    z = np.zeros(3)
    np.testing.assert_array_equal(effective_velocity(z, z, z, z, [0, 1, 0]), z)
    np.testing.assert_allclose(effective_velocity([0, 3, 0], z, z, z, [0, 1, 0]), z)
    np.testing.assert_allclose(effective_velocity([1, 1, 0], z, z, z, [0, 1, 0]), [1, 0, 0])


def test_angle_of_attack_examples():
    c = np.array([1.0, 0.0, 0.0])
    assert angle_of_attack([2.0, 0, 0], c)[0] == pytest.approx(0.0)
    assert angle_of_attack([0, 2.0, 0], c)[0] == pytest.approx(math.pi / 2)
    assert angle_of_attack([1.0, 1.0, 0], c)[0] == pytest.approx(math.pi / 4)
    assert angle_of_attack([0, 0, 0], c) == (0.0, False)


def _one(u, c_hat, n_s, u_dot=(0, 0, 0), a_dot=0.0, chord=0.05, dr=0.0035):
    row = lambda v: np.asarray(v, dtype=float).reshape(1, 3)
    return force_arrays(row(u), row(u_dot), np.array([a_dot]), row(c_hat), row(n_s),
                        np.array([chord]), np.array([dr]), ENV)


def test_lift_magnitude_oracle():
    # flow at 45 degrees to the chord in the x-z plane, span along y
    u = 2.0 * np.array([math.cos(math.pi / 4), 0.0, math.sin(math.pi / 4)])
    lift, drag, rot, added, alpha, cop = _one(u, [1, 0, 0], [0, 1, 0])
    A_L = re_power_laws(7000.0)[0]
    assert alpha[0] == pytest.approx(math.pi / 4)
    assert np.linalg.norm(lift[0]) == pytest.approx(0.5 * 1.29 * 0.05 * 4 * A_L * 0.0035, rel=1e-9)
    assert np.linalg.norm(lift[0]) == pytest.approx(8.479e-4, abs=1e-6)
    assert cop[0] == pytest.approx(0.25)


def test_zero_velocity_gives_zero_forces():
    for f in _one([0, 0, 0], [1, 0, 0], [0, 1, 0])[:4]:
        np.testing.assert_array_equal(f, 0.0)


def test_translational_cop_at_right_angle():
    *_, alpha, cop = _one([0, 0, 2.0], [1, 0, 0], [0, 1, 0])
    assert cop[0] == pytest.approx(0.5)


@given(unit, unit, st.floats(-50.0, 50.0), unit)
def test_lift_perpendicular_drag_parallel(u_dir, c_dir, a_dot, udot):
    n_s = np.array([0.0, 1.0, 0.0])
    u = 3.0 * u_dir
    u = u - (u @ n_s) * n_s
    c = c_dir - (c_dir @ n_s) * n_s
    if np.linalg.norm(u) < 0.1 or np.linalg.norm(c) < 0.1:
        return
    c /= np.linalg.norm(c)
    lift, drag, rot, added, *_ = _one(u, c, n_s, u_dot=udot, a_dot=a_dot)
    assert abs(lift[0] @ u) < 1e-9
    np.testing.assert_allclose(np.cross(drag[0], u), 0.0, atol=1e-9)
    # rotational and added-mass forces act along the chord normal
    assert abs(rot[0] @ c) < 1e-9
    assert abs(added[0] @ c) < 1e-9


def test_total_is_sum_of_components():
    k = StripKinematics(u_w=np.array([1.5, 0.0, 0.7]), u_dot=np.array([3.0, 0.0, -2.0]), alpha=0.0,
                        alpha_dot=4.0, c_hat=np.array([0.0, 0.0, -1.0]), n_s=np.array([0.0, 1.0, 0.0]))
    f = strip_forces(k, BladeElement(r=0.05, chord=0.04, dr=0.003), ENV)
    np.testing.assert_array_equal(f.total, f.lift + f.drag + f.rot + f.added)
    assert f.cop_r == 0.5 and f.cop_a == 9.0 / 16.0


def test_added_mass_literal_formula():
    u = np.array([1.0, 0.0, 1.0])
    ud = np.array([2.0, 0.0, 0.0])
    *_, added, alpha, _ = _one(u, [1, 0, 0], [0, 1, 0], u_dot=ud, chord=0.04, dr=0.01)
    a = alpha[0]
    along = u @ ud / np.linalg.norm(u)
    mag = 1.29 * math.pi * 0.04 ** 2 / 4 * (along * math.sin(a) + 2.0 * a * math.cos(a)) * 0.01
    assert abs(np.linalg.norm(added[0])) == pytest.approx(abs(mag), rel=1e-12)


def test_moments():
    z = np.zeros((1, 3))
    c_hat = np.array([[1.0, 0.0, 0.0]])
    axis = np.array([[0.0, 1.0, 0.0]])
    assert moment_arrays(z, z, z, z, np.array([0.3]), c_hat, np.array([0.05]), axis)[0] == 0.0
    F = np.array([[0.0, 0.0, 2.0]])
    m = moment_arrays(z, z, F, z, np.array([0.3]), c_hat, np.array([0.05]), axis)[0]
    assert abs(m) == pytest.approx(2.0 * 0.05 / 2)


def test_strip_moment_matches_per_term_sum():
    k = StripKinematics(u_w=np.array([1.5, 0.0, 0.7]), u_dot=np.array([3.0, 0.0, -2.0]), alpha=0.0,
                        alpha_dot=4.0, c_hat=np.array([0.0, 0.0, -1.0]), n_s=np.array([0.0, 1.0, 0.0]))
    el = BladeElement(r=0.05, chord=0.04, dr=0.003)
    f = strip_forces(k, el, ENV)
    axis = np.array([0.0, 1.0, 0.0])
    arm = lambda frac: frac * el.chord * k.c_hat
    expected = (np.cross(arm(f.cop_t), f.lift) + np.cross(arm(f.cop_t), f.drag)
                + np.cross(arm(0.5), f.rot) + np.cross(arm(9.0 / 16.0), f.added)) @ axis
    assert strip_moment(f, el, k.c_hat, axis) == pytest.approx(expected, rel=1e-12)


def test_induced_velocity():
    np.testing.assert_array_equal(induced_velocity([0, 0, 0], 0.02, 1.29), 0.0)
    u = induced_velocity([0.0, 0.0, 0.2156], 0.02, 1.29)
    assert np.linalg.norm(u) == pytest.approx(1.022, abs=1e-3)
    np.testing.assert_allclose(u / np.linalg.norm(u), [0, 0, 1])
    with pytest.raises(ValueError):
        induced_velocity([0, 0, 1], 0.0, 1.29)


def test_environment_validation():
    with pytest.raises(ValueError):
        AeroEnvironment(rho=0.0)
    with pytest.raises(ValueError):
        AeroEnvironment(Re=-1.0)
    assert aero.EPS_V > 0
