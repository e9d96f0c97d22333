"""Rotation-group helpers: hat/vee maps, on-manifold integration and attitude errors."""

import math

import numpy as np

_EYE = np.eye(3)


def hat(v):
    """Skew-symmetric matrix such that ``hat(v) @ w == np.cross(v, w)``."""
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def vee(S, tol=1e-12):
    """Inverse of :func:`hat`.

    Raises
    ------
    ValueError
        If ``S`` departs from antisymmetry by more than ``tol``.
    """
    S = np.asarray(S, dtype=float)
    if S.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {S.shape}")
    asym = np.max(np.abs(S + S.T))
    if asym > tol:
        raise ValueError(f"matrix is not antisymmetric (|S + S^T|max = {asym:.3e})")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def _vee(S):
    # unchecked fast path, callers guarantee antisymmetry by construction
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def expm_so3(w):
    """Closed-form exponential of ``hat(w)`` (Rodrigues)."""
    x, y, z = float(w[0]), float(w[1]), float(w[2])
    th2 = x * x + y * y + z * z
    if th2 < 1e-16:
        # second order series; exact to rounding for tiny angles
        a = 1.0 - th2 / 6.0
        b = 0.5 - th2 / 24.0
    else:
        th = math.sqrt(th2)
        a = math.sin(th) / th
        b = (1.0 - math.cos(th)) / th2
    K = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return _EYE + a * K + b * (K @ K)


def log_so3(R):
    """Rotation vector of ``R`` (angle in [0, pi])."""
    R = np.asarray(R, dtype=float)
    c = max(-1.0, min(1.0, 0.5 * (np.trace(R) - 1.0)))
    th = math.acos(c)
    if th < 1e-8:
        return _vee(0.5 * (R - R.T))
    if math.pi - th < 1e-6:
        # near pi: axis from the symmetric part
        B = 0.5 * (R + _EYE)
        k = int(np.argmax(np.diag(B)))
        axis = B[:, k] / math.sqrt(max(B[k, k], 1e-300))
        axis /= np.linalg.norm(axis)
        if np.dot(_vee(R - R.T), axis) < 0.0:
            axis = -axis
        return th * axis
    return th / (2.0 * math.sin(th)) * _vee(R - R.T)


def orthonormalize(R):
    """Closest rotation matrix to ``R`` in the Frobenius sense."""
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0.0:
        U[:, -1] = -U[:, -1]
        Q = U @ Vt
    return Q


def integrate_rotation(R, omega, dt):
    """Advance ``R_dot = R hat(omega)`` over ``dt`` with body rate held constant."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return R @ expm_so3(np.asarray(omega, dtype=float) * dt)


def orthogonality_error(R):
    return float(np.max(np.abs(R @ R.T - _EYE)))


def attitude_error(R, R_d, G=None):
    """Trace error function and its configuration error vector.

    Returns ``(psi, e_R)`` with ``psi = 0.5 tr[G (I - R_d^T R)]`` and
    ``e_R = 0.5 vee(G R_d^T R - R^T R_d G)``.
    """
    G = _EYE if G is None else np.asarray(G, dtype=float)
    RdtR = R_d.T @ R
    psi = 0.5 * float(np.trace(G @ (_EYE - RdtR)))
    M = G @ RdtR - RdtR.T @ G
    return psi, 0.5 * _vee(M)


def velocity_error(omega, R, R_d, omega_d):
    """Angular velocity error ``Omega - R^T R_d Omega_d``."""
    return np.asarray(omega, dtype=float) - R.T @ (R_d @ np.asarray(omega_d, dtype=float))


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_zyx_to_rotation(roll, pitch, yaw):
    """Body-to-inertia rotation from ZYX Euler angles (yaw, then pitch, then roll)."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def rotation_to_euler_zyx(R):
    """ZYX Euler angles ``(roll, pitch, yaw)``; used for reporting only."""
    pitch = math.asin(max(-1.0, min(1.0, -R[2, 0])))
    roll = math.atan2(R[2, 1], R[2, 2])
    yaw = math.atan2(R[1, 0], R[0, 0])
    return roll, pitch, yaw
