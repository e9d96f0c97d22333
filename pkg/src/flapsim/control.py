"""Attitude and position control stack.

Contents: a second-order low-pass filter, the three attitude laws with the
adaptive inertia estimate, the extended state observer, the three position
laws, thrust-vector to attitude mapping, a differential reference tracker on
SO(3) and the thrust-to-frequency map.
"""

import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .spatial import attitude_error, expm_so3, hat, orthonormalize, velocity_error

GRAVITY = 9.81
E3 = np.array([0.0, 0.0, 1.0])


def _diag(x):
    return np.diag(np.asarray(x, dtype=float))


@dataclass
class GainSet:
    """All controller, observer, filter and tracker parameters.

    Diagonal matrices are stored as 3-vectors of their diagonal entries.
    """

    # attitude
    G: list = field(default_factory=lambda: [1.0, 1.0, 1.0])
    k_R: float = 2.0
    k_Omega: float = 0.2
    delta_b: float = 0.2
    eps: float = 0.1
    k_J: float = 0.1
    sigma: float = 20.0
    c: float = 1.0
    k_v: float = 0.15
    rho_v: float = 0.5
    # position, u_t1
    K_s: list = field(default_factory=lambda: [1.0, 1.0, 1.0])
    K_p: list = field(default_factory=lambda: [0.8, 0.8, 0.8])
    K_v: list = field(default_factory=lambda: [0.5, 0.5, 0.5])
    K_ep: list = field(default_factory=lambda: [10.0, 10.0, 10.0])
    K_ev: list = field(default_factory=lambda: [0.5, 0.5, 0.5])
    K_eI: list = field(default_factory=lambda: [0.01, 0.01, 0.01])
    K_Ip: list = field(default_factory=lambda: [0.8, 0.8, 0.8])
    K_Iv: list = field(default_factory=lambda: [0.5, 0.5, 0.5])
    c_s: float = 2.0
    rho_s: float = 0.5
    e_Ib: float = 1.0
    # observer
    G_p: list = field(default_factory=lambda: [20.0, 20.0, 20.0])
    G_v: list = field(default_factory=lambda: [10.0, 10.0, 10.0])
    G_z: list = field(default_factory=lambda: [5.0, 5.0, 5.0])
    rho_e: float = 0.5
    z_max: float = 5.0
    # u_t2
    K_ep2: list = field(default_factory=lambda: [10.0, 10.0, 10.0])
    K_p2: list = field(default_factory=lambda: [0.8, 0.8, 0.8])
    K_ev2: list = field(default_factory=lambda: [1.0, 1.0, 1.0])
    # u_t3
    K_s3: list = field(default_factory=lambda: [0.5, 0.5, 0.5])
    K_v3: list = field(default_factory=lambda: [0.5, 0.5, 0.5])
    K_ep3: list = field(default_factory=lambda: [8.0, 8.0, 8.0])
    K_ev3: list = field(default_factory=lambda: [0.5, 0.5, 0.5])
    # attitude generation, filter and tracker
    eps_k: float = 1e-9
    omega_n: float = 2.0 * math.pi * 8.0
    zeta: float = 0.8
    k_Rf: float = 25.0
    K_omega_f: float = 10.0
    G_f: list = field(default_factory=lambda: [1.0, 1.0, 1.0])
    f_hover: float = 12.0
    f_min: float = 9.0
    f_max: float = 15.0
    d_T: list = field(default_factory=lambda: [1.0, 0.0, 0.0])

    def __post_init__(self):
        for name in ("rho_v", "rho_s", "rho_e"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (list, tuple, np.ndarray)) and f.name != "d_T":
                if len(v) != 3 or min(v) < 0.0:
                    raise ValueError(f"{f.name} must be a non-negative 3-vector diagonal")

    def updated(self, **overrides):
        data = asdict(self)
        unknown = set(overrides) - set(data)
        if unknown:
            raise KeyError(f"unknown gain(s): {sorted(unknown)}")
        data.update(overrides)
        return GainSet(**data)

    def to_json(self):
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls().updated(**json.loads(text))


# ---------------------------------------------------------------- filter

class LowPass2:
    """Three-channel second-order low-pass, bilinear transform of ``w^2/(s^2+2 z w s+w^2)``.

    Direct form II transposed, one instance per signal.
    """

    def __init__(self, dt, omega_n=2.0 * math.pi * 8.0, zeta=0.8, dim=3):
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        K = 2.0 / dt
        w2 = omega_n * omega_n
        a0 = K * K + 2.0 * zeta * omega_n * K + w2
        self.b = np.array([w2, 2.0 * w2, w2]) / a0
        self.a = np.array([1.0, (2.0 * w2 - 2.0 * K * K) / a0, (K * K - 2.0 * zeta * omega_n * K + w2) / a0])
        self.dt = dt
        self.s1 = np.zeros(dim)
        self.s2 = np.zeros(dim)

    def reset(self, value):
        """Set the state so a constant ``value`` passes through unchanged."""
        value = np.asarray(value, dtype=float)
        b, a = self.b, self.a
        self.s2 = (b[2] - a[2]) * value
        self.s1 = value - b[0] * value

    def step(self, x):
        x = np.asarray(x, dtype=float)
        b, a = self.b, self.a
        y = b[0] * x + self.s1
        self.s1 = b[1] * x - a[1] * y + self.s2
        self.s2 = b[2] * x - a[2] * y
        return y

    def gain(self, freq):
        """Magnitude of the discrete response at ``freq`` Hz."""
        z = np.exp(1j * 2.0 * math.pi * freq * self.dt)
        num = self.b[0] + self.b[1] / z + self.b[2] / z ** 2
        den = self.a[0] + self.a[1] / z + self.a[2] / z ** 2
        return float(abs(num / den))


def lowpass2_step(filt, x, dt=None):
    """Functional wrapper: advance ``filt`` by one sample and return its output."""
    if dt is not None and abs(dt - filt.dt) > 1e-15:
        raise ValueError("filter was designed for a different step")
    return filt.step(x)


# ---------------------------------------------------------------- attitude

def spow(x, p):
    """Signed power ``sgn(x) |x|^p``, elementwise."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** p


def desired_acceleration(R, R_d, Omega, Omega_d, dOmega_d):
    """``alpha_d = -hat(Omega) R^T R_d Omega_d + R^T R_d dOmega_d``."""
    RtRd = R.T @ R_d
    return -np.cross(Omega, RtRd @ Omega_d) + RtRd @ dOmega_d


def robust_terms(e_A, gains):
    """Boundary-layer term ``v1`` and its finite-time companion ``v2``."""
    e_A = np.asarray(e_A, dtype=float)
    n = float(np.linalg.norm(e_A))
    db = gains.delta_b
    v1 = -db * db * e_A / (db * n + gains.eps)
    v2 = -gains.k_v * np.sign(e_A) * n ** gains.rho_v + v1
    return v1, v2


def adaptive_inertia_update(J_bar, Omega, alpha_d, e_A, gains, dt):
    """One Euler step of the inertia estimate; the increment is symmetric."""
    if dt == 0.0:
        return np.array(J_bar, dtype=float)
    a = np.asarray(alpha_d, dtype=float)
    e = np.asarray(e_A, dtype=float)
    W = np.outer(Omega, Omega)
    E = hat(e)
    dJ = 0.5 * gains.k_J * (-np.outer(a, e) - np.outer(e, a) + W @ E - E @ W - 2.0 * gains.sigma * J_bar)
    return J_bar + dt * dJ


@dataclass
class AttitudeOutput:
    tau: np.ndarray
    psi: float
    e_R: np.ndarray
    e_Omega: np.ndarray
    e_A: np.ndarray
    alpha_d: np.ndarray


def attitude_torque(variant, R, R_d, Omega, Omega_d, dOmega_d, gains, J_bar=None):
    """Torque command of law ``variant`` in {1, 2, 3}.

    Returns an :class:`AttitudeOutput`; the adaptive estimate ``J_bar`` is
    only read here (see :class:`AttitudeController` for its update).
    """
    if variant not in (1, 2, 3):
        raise ValueError(f"unknown attitude law {variant}")
    psi, e_R = attitude_error(R, R_d, _diag(gains.G))
    e_O = velocity_error(Omega, R, R_d, Omega_d)
    e_A = e_O + gains.c * e_R
    a_d = desired_acceleration(R, R_d, np.asarray(Omega, float), np.asarray(Omega_d, float),
                               np.asarray(dOmega_d, float))
    tau = -gains.k_R * e_R - gains.k_Omega * e_O
    v1, v2 = robust_terms(e_A, gains)
    if variant == 2:
        J = np.zeros((3, 3)) if J_bar is None else J_bar
        tau = tau + v1 + np.cross(Omega, J @ Omega) + J @ a_d
    elif variant == 3:
        tau = tau + v2
    return AttitudeOutput(tau, psi, e_R, e_O, e_A, a_d)


class AttitudeController:
    """Stateful wrapper holding the adaptive inertia estimate."""

    def __init__(self, variant, gains, J0=None):
        self.variant = variant
        self.gains = gains
        self.J_bar = np.zeros((3, 3)) if J0 is None else np.array(J0, dtype=float)

    def __call__(self, R, R_d, Omega, Omega_d, dOmega_d, dt):
        out = attitude_torque(self.variant, R, R_d, Omega, Omega_d, dOmega_d, self.gains, self.J_bar)
        if self.variant == 2:
            self.J_bar = adaptive_inertia_update(self.J_bar, Omega, out.alpha_d, out.e_A, self.gains, dt)
        return out


# ---------------------------------------------------------------- observer

@dataclass
class EsoState:
    p_o: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_o: np.ndarray = field(default_factory=lambda: np.zeros(3))
    z: np.ndarray = field(default_factory=lambda: np.zeros(3))


def eso_step(s, p_meas, u_t, gains, m, dt, g=GRAVITY):
    """Euler step of the extended state observer.

    ``u_t`` is the commanded specific thrust (m/s^2) and ``z`` estimates the
    lumped disturbance force in newtons.
    """
    err = s.p_o - np.asarray(p_meas, dtype=float)
    e_half = spow(err, 0.5 * (gains.rho_e + 1.0))
    p_dot = s.v_o - np.asarray(gains.G_p) * e_half
    v_dot = u_t - g * E3 + (-np.asarray(gains.G_v) * e_half + s.z) / m
    z_dot = -np.asarray(gains.G_z) * spow(err, gains.rho_e)
    z = np.clip(s.z + dt * z_dot, -gains.z_max, gains.z_max)
    return EsoState(s.p_o + dt * p_dot, s.v_o + dt * v_dot, z)


# ---------------------------------------------------------------- position

def integral_update(e_I, R, e_p, e_v, gains, dt):
    """Projected Euler step of ``e_I_dot = R^T (K_Ip e_p + K_Iv e_v)``."""
    rate = R.T @ (np.asarray(gains.K_Ip) * e_p + np.asarray(gains.K_Iv) * e_v)
    b = gains.e_Ib
    at_bound = ((e_I >= b) & (rate > 0.0)) | ((e_I <= -b) & (rate < 0.0))
    rate = np.where(at_bound, 0.0, rate)
    return np.clip(e_I + dt * rate, -b, b)


def position_control(variant, e_p, e_v, e_I, z, dv_d, R, gains, m, g=GRAVITY):
    """Specific thrust command ``u_t`` (m/s^2) of law ``variant`` in {1, 2, 3}.

    Errors are desired minus estimated.
    """
    e_p = np.asarray(e_p, dtype=float)
    e_v = np.asarray(e_v, dtype=float)
    if variant == 1:
        tp = np.tanh(np.asarray(gains.K_p) * e_p)
        s = gains.c_s * tp + np.asarray(gains.K_v) * e_v
        return (np.asarray(gains.K_s) * spow(s, gains.rho_s) + np.asarray(gains.K_ep) * tp
                + np.asarray(gains.K_ev) * e_v + R @ (np.asarray(gains.K_eI) * e_I)
                + dv_d - np.asarray(z) / m + g * E3)
    if variant == 2:
        return np.asarray(gains.K_ep2) * np.tanh(np.asarray(gains.K_p2) * e_p) + np.asarray(gains.K_ev2) * e_v
    if variant == 3:
        s3 = e_p + np.asarray(gains.K_v3) * e_v
        return (np.asarray(gains.K_s3) * np.sign(s3) + np.asarray(gains.K_ep3) * e_p
                + np.asarray(gains.K_ev3) * e_v + dv_d + g * E3)
    raise ValueError(f"unknown position law {variant}")


def _align(a, b, eps):
    """Rotation taking unit ``a`` onto unit ``b`` by the regularised Rodrigues form."""
    k = np.cross(a, b)
    cth = float(a @ b)
    s2 = float(k @ k)
    K = hat(k)
    if s2 < 1e-18 and cth < 0.0:
        # antiparallel: half turn about any axis normal to a
        axis = np.cross(a, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-6:
            axis = np.cross(a, [0.0, 1.0, 0.0])
        axis /= np.linalg.norm(axis)
        return 2.0 * np.outer(axis, axis) - np.eye(3)
    coef = 1.0 / (1.0 + cth) if eps == 0.0 else (1.0 - cth) / (s2 + eps)
    if s2 < 1e-6:
        coef = 1.0 / (1.0 + cth)  # same limit, better conditioned
    return np.eye(3) + K + coef * (K @ K)


def thrust_to_attitude(u_t, d_T=(1.0, 0.0, 0.0), v_d=(0.0, 0.0, 0.0), eps_k=1e-9, eps_v=1e-6):
    """Desired attitude ``R_d = R_tilt R_Z`` from a thrust vector and a heading reference.

    ``R_tilt`` turns the body z axis onto the thrust direction. ``R_Z`` turns
    the body direction ``d_T`` toward the horizontal desired velocity about the
    body z axis; it is the identity when that velocity is below ``eps_v``.
    """
    u_t = np.asarray(u_t, dtype=float)
    n = float(np.linalg.norm(u_t))
    if n <= 0.0:
        raise ValueError("zero thrust has no direction")
    R_tilt = _align(E3, u_t / n, eps_k)
    v_xy = np.array([v_d[0], v_d[1], 0.0], dtype=float)
    nv = float(np.linalg.norm(v_xy))
    d = np.array([d_T[0], d_T[1], 0.0], dtype=float)
    if nv < eps_v or np.linalg.norm(d) < 1e-12:
        R_Z = np.eye(3)
    else:
        R_Z = _align(d / np.linalg.norm(d), v_xy / nv, eps_k)
    return orthonormalize(R_tilt @ R_Z)


# ---------------------------------------------------------------- tracker

def reference_tracker_step(R_f, Omega_f, R_d, gains, dt):
    """Second-order smoothing of ``R_d`` on SO(3); returns ``(R_f, Omega_f, dOmega_f)``."""
    _, e_Rf = attitude_error(R_f, R_d, _diag(gains.G_f))
    dOmega = -gains.K_omega_f * Omega_f - gains.k_Rf * e_Rf
    Omega_new = Omega_f + dt * dOmega
    R_new = orthonormalize(R_f @ expm_so3(Omega_new * dt))
    return R_new, Omega_new, dOmega


def thrust_to_frequency(u_t, f_hover, g=GRAVITY, f_min=9.0, f_max=15.0):
    """Flapping frequency from thrust magnitude, clamped to the motor range."""
    if f_hover <= 0.0:
        raise ValueError("hover frequency must be positive")
    f = f_hover / g * float(np.linalg.norm(u_t))
    return min(max(f, f_min), f_max)
