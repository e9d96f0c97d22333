"""Quasi-steady blade-element aerodynamics.

Every strip carries four forces: translational lift and drag, a rotational
circulation force and an added-mass force. The functions here work on stacked
arrays of strips (shape ``(n, 3)`` for vectors) so a whole panel is evaluated
in one call; the single-strip helpers wrap the same code with ``n = 1``.

Conventions
-----------
``u_w`` is the velocity of the air relative to the strip, with the spanwise
component removed. ``c_hat`` is the unit chord direction from the leading
edge to the trailing edge, so ``alpha = arccos(u_hat . c_hat)`` is small when
the leading edge meets the flow first.
"""

from dataclasses import dataclass, field

import numpy as np

EPS_V = 1e-6   # m/s, below this the strip is treated as still air
EPS_F = 1e-9   # N, below this the disk carries no wake

COP_ROTATIONAL = 0.5
COP_ADDED_MASS = 9.0 / 16.0


@dataclass(frozen=True)
class AeroEnvironment:
    rho: float = 1.29
    U_inf: np.ndarray = field(default_factory=lambda: np.zeros(3))
    Re: float = 7000.0

    def __post_init__(self):
        if self.rho <= 0.0:
            raise ValueError("air density must be positive")
        if self.Re <= 0.0:
            raise ValueError("Reynolds number must be positive")
        object.__setattr__(self, "U_inf", np.asarray(self.U_inf, dtype=float).reshape(3))


@dataclass
class StripKinematics:
    u_w: np.ndarray
    u_dot: np.ndarray
    alpha: float
    alpha_dot: float
    c_hat: np.ndarray
    n_s: np.ndarray


@dataclass
class StripForces:
    lift: np.ndarray
    drag: np.ndarray
    rot: np.ndarray
    added: np.ndarray
    cop_t: float
    cop_r: float = COP_ROTATIONAL
    cop_a: float = COP_ADDED_MASS

    @property
    def total(self):
        return self.lift + self.drag + self.rot + self.added


def re_power_laws(Re):
    """Return ``(A_L, A_D, C_D0)`` for a Reynolds number."""
    if Re <= 0.0:
        raise ValueError("Reynolds number must be positive")
    A_L = 1.966 - 3.94 * Re ** -0.429
    A_D = 1.873 - 3.14 * Re ** -0.369
    C_D0 = 0.031 + 10.48 * Re ** -0.764
    return A_L, A_D, C_D0


def aero_coefficients(alpha, Re):
    """Translational lift and drag coefficients ``(C_L, C_D)``."""
    A_L, A_D, C_D0 = re_power_laws(Re)
    alpha = np.asarray(alpha, dtype=float)
    return A_L * np.sin(2.0 * alpha), C_D0 + A_D * (1.0 - np.cos(2.0 * alpha))


def rotational_coefficient(x0):
    """Rotational force coefficient for a pitch axis at chord fraction ``x0``."""
    if not 0.0 <= x0 <= 1.0:
        raise ValueError(f"pitch-axis chord fraction must lie in [0, 1], got {x0}")
    return np.pi * (0.75 - x0)


def effective_velocity(U_inf, v_W, v_Bt, v_Br, n_s):
    """Relative air velocity with the component along ``n_s`` removed.

    All inputs broadcast, so ``(n, 3)`` arrays give one result per strip.
    """
    u = np.asarray(U_inf, dtype=float) - v_W - v_Bt - v_Br
    n_s = np.asarray(n_s, dtype=float)
    return u - np.sum(u * n_s, axis=-1, keepdims=True) * n_s


def angle_of_attack(u_w, c_hat):
    """AoA in ``[0, pi]``; returns ``(alpha, moving)`` where ``moving`` is False below ``EPS_V``."""
    u_w = np.asarray(u_w, dtype=float)
    speed = np.linalg.norm(u_w, axis=-1)
    moving = speed > EPS_V
    safe = np.where(moving, speed, 1.0)
    cosang = np.clip(np.sum(u_w * c_hat, axis=-1) / safe, -1.0, 1.0)
    alpha = np.where(moving, np.arccos(cosang), 0.0)
    if alpha.ndim == 0:
        return float(alpha), bool(moving)
    return alpha, moving


def _unit_rows(a):
    n = np.linalg.norm(a, axis=-1, keepdims=True)
    return np.divide(a, n, out=np.zeros_like(a), where=n > 1e-12), n[..., 0]


def force_arrays(u_w, u_dot, alpha_dot, c_hat, n_s, chord, dr, env):
    """Vectorised strip forces.

    Parameters
    ----------
    u_w, u_dot, c_hat, n_s : (n, 3) arrays
    alpha_dot, chord, dr : (n,) arrays
    env : AeroEnvironment

    Returns
    -------
    lift, drag, rot, added : (n, 3) arrays
    alpha : (n,) AoA
    cop_t : (n,) translational centre-of-pressure chord fraction
    """
    rho = env.rho
    speed = np.linalg.norm(u_w, axis=1)
    moving = speed > EPS_V
    safe = np.where(moving, speed, 1.0)
    u_hat = u_w / safe[:, None] * moving[:, None]
    cosang = np.clip(np.sum(u_hat * c_hat, axis=1), -1.0, 1.0)
    alpha = np.where(moving, np.arccos(cosang), 0.0)

    C_L, C_D = aero_coefficients(alpha, env.Re)
    q = 0.5 * rho * chord * speed ** 2 * dr * moving

    # lift: perpendicular to u_w in the strip plane, on the side the leading edge faces
    c_perp, _ = _unit_rows(c_hat - cosang[:, None] * u_hat)
    lift = -(q * C_L)[:, None] * c_perp
    drag = (q * C_D)[:, None] * u_hat

    # chord normal on the side the flow strikes
    # (zero when the flow runs exactly along the chord: no side is preferred)
    n_u, _ = _unit_rows(u_hat - cosang[:, None] * c_hat)

    C_r = rotational_coefficient(0.0)
    rot_mag = rho * chord ** 2 * np.abs(alpha_dot) * speed * C_r * dr * moving
    rot = (np.sign(alpha_dot) * rot_mag)[:, None] * n_u

    # added mass, with the alpha*cos(alpha) term kept literally
    udot_norm = np.linalg.norm(u_dot, axis=1)
    along = np.sum(u_w * u_dot, axis=1) / safe * moving
    am_mag = rho * np.pi * chord ** 2 / 4.0 * (along * np.sin(alpha) + udot_norm * alpha * np.cos(alpha)) * dr
    added = am_mag[:, None] * n_u

    return lift, drag, rot, added, alpha, alpha / np.pi


def strip_forces(k, elem, env):
    """Forces on one blade element from its kinematics."""
    one = lambda v: np.asarray(v, dtype=float).reshape(1, 3)
    lift, drag, rot, added, _, cop = force_arrays(
        one(k.u_w), one(k.u_dot), np.array([k.alpha_dot], dtype=float), one(k.c_hat), one(k.n_s),
        np.array([elem.chord]), np.array([elem.dr]), env)
    return StripForces(lift[0], drag[0], rot[0], added[0], float(cop[0]))


def moment_arrays(lift, drag, rot, added, cop_t, c_hat, chord, axis):
    """Moments of the strip forces about the leading-edge hinge, projected on ``axis``.

    Each force acts at ``cop * chord * c_hat`` measured from the leading edge.
    Returns an ``(n,)`` array in N*m.
    """
    arm_t = (cop_t * chord)[:, None] * c_hat
    arm_r = (COP_ROTATIONAL * chord)[:, None] * c_hat
    arm_a = (COP_ADDED_MASS * chord)[:, None] * c_hat
    m = np.cross(arm_t, lift + drag) + np.cross(arm_r, rot) + np.cross(arm_a, added)
    return np.sum(m * axis, axis=-1)


def strip_moment(forces, elem, c_hat, axis):
    """Pitch moment of one strip's forces about its leading-edge hinge ``axis``."""
    f = forces
    row = lambda v: np.asarray(v, dtype=float).reshape(1, 3)
    m = moment_arrays(row(f.lift), row(f.drag), row(f.rot), row(f.added), np.array([f.cop_t]),
                      row(c_hat), np.array([elem.chord]), row(axis))
    return float(m[0])


def induced_velocity(F_sum, S_d, rho):
    """Actuator-disk induced velocity along the resultant lift direction.

    The caller applies it opposite to the lift.
    """
    if S_d <= 0.0:
        raise ValueError("disk area must be positive")
    F_sum = np.asarray(F_sum, dtype=float)
    mag = float(np.linalg.norm(F_sum))
    if mag < EPS_F:
        return np.zeros(3)
    return 0.5 * (F_sum / mag) * np.sqrt(mag / (2.0 * rho * S_d))
