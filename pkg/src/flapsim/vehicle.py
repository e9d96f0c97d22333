"""X-wing tailed flapping robot: kinematics, passive pitch, allocation and 6-DoF stepping.

Body frame: X ventral, Y left, Z cephalad. Four wings flap in the body X-Y
plane about a stroke axis parallel to Z, two per side in a clap-and-fling
pair. Wing ``k`` has side ``s`` (+1 left, -1 right) and pair member ``m``
(+1 the ventral wing ``A``, -1 the dorsal wing ``B``). Its span direction is

    e = (m sin(beta), s cos(beta), 0),   beta = beta0 + phi(t)

so ``phi`` opens both wings of a pair at once. The chord hangs from the
leading edge along -Z and passively rotates by ``theta`` about the hinge
(the leading edge); positive ``theta`` moves the trailing edge dorsally.

A fixed horizontal tail (span along Y) and a vertical tail whose rudder
rotates the chord about the body X axis sit below the centre of mass and
see the free stream plus the delayed wing wake.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import aero
from .aero import AeroEnvironment
from .geometry import ChordFunction, WingOutline, build_blade_elements, fit_edge
from .spatial import expm_so3, orthonormalize
from .wake import WakeBuffer

log = logging.getLogger(__name__)

GRAVITY = 9.81
WING_LAYOUT = ((1, 1), (1, -1), (-1, 1), (-1, -1))  # (side, member): LA, LB, RA, RB
WING_NAMES = ("LA", "LB", "RA", "RB")


class SimulationDiverged(RuntimeError):
    def __init__(self, step, what):
        super().__init__(f"non-finite {what} at step {step}")
        self.step = step


def default_data_path(name):
    return resources.files("flapsim") / "data" / name


@dataclass
class RobotConfig:
    """Physical parameters of the robot. Lengths in m, angles in rad."""

    mass: float = 0.022
    J: list = field(default_factory=lambda: [[6.0e-5, 0.0, 0.0], [0.0, 5.5e-5, 0.0], [0.0, 0.0, 2.5e-5]])
    # wings
    wing_outline: str = "wing_outline.csv"
    wing_chord: float = 0.0          # > 0 overrides the outline with a constant chord
    chord_scale: float = 1.0         # multiplies the outline chord
    chord_degree: int = 4
    wing_span: float = 0.14
    wing_root_offset: float = 0.01
    wing_strips: int = 40
    beta0: float = math.pi / 8.0
    stroke_center: list = field(default_factory=lambda: [-0.003, 0.0, 0.05])
    amplitude: float = math.pi / 4.0
    k_s: float = 0.025
    stop_angle: float = math.pi / 4.0
    c_damp: float = 1e-5
    areal_density: float = 0.135
    eq_range: float = math.pi / 4.0
    # tails
    htail_span: float = 0.10
    htail_chord: float = 0.04
    htail_center: list = field(default_factory=lambda: [0.0, 0.0, -0.08])
    vtail_span: float = 0.06
    vtail_chord: float = 0.04
    vtail_center: list = field(default_factory=lambda: [0.0, 0.0, -0.08])
    tail_strips: int = 20
    rudder_range: float = math.pi / 4.0
    # environment and wake
    rho: float = 1.29
    Re: float = 7000.0
    d_wt: float = 0.15
    S_d: float = 0.0018               # <= 0 selects the swept sector area
    f_hover: float = 13.0
    # controller torque to command angle (rad per unit output), roll/pitch/yaw; pitch and
    # yaw are scaled down so each axis gives about the same torque per unit output
    command_gain: list = field(default_factory=lambda: [1.0, 0.4, 0.4])
    # closed-loop command bounds (rad), kept inside the range where each torque is monotone
    command_limit: list = field(default_factory=lambda: [math.pi / 4.0, math.pi / 8.0, 0.1])
    # rad, added after the gain; the pitch entry cancels the hover pitching moment of the stroke offset
    command_trim: list = field(default_factory=lambda: [0.0, -0.07, 0.0])
    # servo slew rate of the wing-root and rudder actuators, rad/s; 0 = instantaneous
    servo_rate: float = 0.0

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        J = np.asarray(self.J, dtype=float)
        if J.shape != (3, 3) or np.max(np.abs(J - J.T)) > 1e-15 or np.min(np.linalg.eigvalsh(J)) <= 0.0:
            raise ValueError("J must be symmetric positive definite")
        if self.k_s <= 0.0 or self.stop_angle <= 0.0:
            raise ValueError("spring constant and stop angle must be positive")
        if self.servo_rate < 0.0:
            raise ValueError("servo rate must be non-negative")

    @property
    def disk_area(self):
        if self.S_d > 0.0:
            return self.S_d
        r0, r1 = self.wing_root_offset, self.wing_root_offset + self.wing_span
        return 0.5 * self.amplitude * (r1 * r1 - r0 * r0)

    def updated(self, **kw):
        data = asdict(self)
        unknown = set(kw) - set(data)
        if unknown:
            raise KeyError(f"unknown robot field(s): {sorted(unknown)}")
        data.update(kw)
        return RobotConfig(**data)

    def to_json(self):
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls().updated(**json.loads(text))

    @classmethod
    def load(cls, path):
        return cls.from_json(Path(path).read_text())

    def chord_function(self):
        if self.wing_chord > 0.0:
            return ChordFunction.constant(self.wing_chord, self.wing_span)
        path = Path(self.wing_outline)
        if not path.is_file():
            path = default_data_path(self.wing_outline)
        outline = WingOutline.from_csv(path)
        fn = fit_edge(outline, self.chord_degree)
        scale = self.wing_span / outline.span
        # rescale the outline to the configured span, chord scaled with it
        k = scale ** (1 - np.arange(len(fn.coeffs))[::-1]) * self.chord_scale
        return ChordFunction(fn.coeffs * k, self.wing_span, fn.residual_rms * scale * self.chord_scale)

    def wing_elements(self):
        return build_blade_elements(self.chord_function(), self.wing_span, self.wing_strips,
                                    root_offset=self.wing_root_offset)

    def wing_pitch_inertia(self):
        """Pitch inertia of one wing about its leading edge: membrane plus entrained air."""
        els = self.wing_elements()
        c = np.array([e.chord for e in els])
        dr = np.array([e.dr for e in els])
        return float(np.sum((self.areal_density * c ** 3 / 3.0 + 9.0 * math.pi / 128.0 * self.rho * c ** 4) * dr))


def inertia_from_components(parts):
    """Inertia tensor about the origin of point masses and slender rods.

    ``parts`` holds tuples ``(mass, position)`` for points or
    ``(mass, position, axis, length)`` for rods.
    """
    J = np.zeros((3, 3))
    for part in parts:
        m, p = part[0], np.asarray(part[1], dtype=float)
        J += m * (p @ p * np.eye(3) - np.outer(p, p))
        if len(part) == 4:
            a = np.asarray(part[2], dtype=float)
            a = a / np.linalg.norm(a)
            J += m * part[3] ** 2 / 12.0 * (np.eye(3) - np.outer(a, a))
    return J


# ---------------------------------------------------------------- kinematics

def stroke_angle(t, f, amplitude):
    """Sinusoidal stroke ``(phi, phi_dot, phi_ddot)`` with peak-to-peak ``amplitude``."""
    if f <= 0.0:
        raise ValueError("frequency must be positive")
    w = 2.0 * math.pi * f
    a = 0.5 * amplitude
    return a * math.sin(w * t), a * w * math.cos(w * t), -a * w * w * math.sin(w * t)


@dataclass
class ActuationCommand:
    f: float = 12.0
    pitch: float = 0.0
    yaw: float = 0.0
    roll: float = 0.0


@dataclass
class Allocation:
    theta0: np.ndarray  # per wing, order LA, LB, RA, RB
    rudder: float
    saturated: bool


def allocate(cmd, eq_range=math.pi / 4.0, rudder_range=math.pi / 4.0):
    """Map pitch/yaw/roll commands to equilibrium pitches and the rudder angle.

    Pitch moves both sides dorsally (positive) together, yaw moves them
    oppositely (left = pitch - yaw, right = pitch + yaw), roll drives the
    rudder one to one. Results are clamped to the ranges.
    """
    left = cmd.pitch - cmd.yaw
    right = cmd.pitch + cmd.yaw
    raw = np.array([left, left, right, right])
    th0 = np.clip(raw, -eq_range, eq_range)
    rud = min(max(cmd.roll, -rudder_range), rudder_range)
    sat = bool(np.any(th0 != raw) or rud != cmd.roll)
    if sat:
        log.debug("actuation command clamped: %s", cmd)
    return Allocation(th0, rud, sat)


@dataclass
class WingHingeState:
    theta: np.ndarray = field(default_factory=lambda: np.zeros(4))
    theta_dot: np.ndarray = field(default_factory=lambda: np.zeros(4))


def passive_pitch_step(theta, theta_dot, moment, theta0, k_s, I_w, dt, c_damp=1e-5, stop=math.pi / 4.0):
    """Semi-implicit Euler step of the spring-hinged wing pitch with hard stops.

    Works elementwise on arrays. Returns ``(theta, theta_dot)``; the rate is
    zeroed whenever a stop is hit.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    acc = (moment - k_s * (theta - theta0) - c_damp * theta_dot) / I_w
    rate = theta_dot + dt * acc
    th = theta + dt * rate
    hit = np.abs(th) >= stop
    th = np.clip(th, -stop, stop)
    rate = np.where(hit, 0.0, rate)
    return th, rate


@dataclass
class BodyState:
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    Omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def copy(self):
        return BodyState(self.R.copy(), self.Omega.copy(), self.p.copy(), self.v.copy())


@dataclass
class StepOutput:
    F_body: np.ndarray       # total aerodynamic force, body frame
    tau_body: np.ndarray     # total aerodynamic torque about the CoM, body frame
    F_wings: np.ndarray      # (4, 3)
    tau_wings: np.ndarray    # (4, 3)
    F_tails: np.ndarray      # (2, 3) horizontal, vertical
    tau_tails: np.ndarray
    u_i: np.ndarray          # applied wake velocity, body frame
    u_tail: np.ndarray       # delayed wake seen by the tails
    delay: float
    alloc: Allocation


class Simulation:
    """One robot in one environment, advanced with a fixed step.

    Parameters
    ----------
    config : RobotConfig
    dt : float
        Simulation step in seconds.
    wind : array_like
        Free-stream velocity in the inertial frame.
    fixed : bool
        Hold the body still (test rig); forces are still computed.
    lock_translation : bool
        Gimbal rig: the centre of mass stays put while the body rotates freely.
    aero_on, gravity_on : bool
        Switches used by the property tests.
    """

    def __init__(self, config=None, dt=1e-3, wind=(0.0, 0.0, 0.0), state=None, fixed=False,
                 aero_on=True, gravity_on=True, lock_translation=False):
        self.cfg = cfg = config or RobotConfig()
        self.dt = float(dt)
        self.env = AeroEnvironment(cfg.rho, np.asarray(wind, dtype=float), cfg.Re)
        self.state = state.copy() if state is not None else BodyState()
        self.fixed = fixed
        self.lock_translation = lock_translation
        self.aero_on = aero_on
        self.g = GRAVITY if gravity_on else 0.0
        self.J = np.asarray(cfg.J, dtype=float)
        self.J_inv = np.linalg.inv(self.J)
        self.t = 0.0
        self.k = 0
        self.phase = 0.0
        self.hinge = WingHingeState()
        self.wake = WakeBuffer(cfg.d_wt, self.dt)
        self._setup_geometry()
        self._prev_u = None
        self._prev_rudder = 0.0
        self._servo_pos = None
        self.last = None

    # ------------------------------------------------------------ geometry
    def _setup_geometry(self):
        cfg = self.cfg
        els = cfg.wing_elements()
        nw = len(els)
        self.nw = nw
        r = np.array([e.r for e in els])
        c = np.array([e.chord for e in els])
        dr = np.array([e.dr for e in els])
        self.I_w = cfg.wing_pitch_inertia()
        # chordwise first moment of membrane mass times radius, per wing
        self.S_w = float(np.sum(cfg.areal_density * c ** 2 / 2.0 * r * dr))
        self.wing_r = np.tile(r, 4)
        side = np.repeat([s for s, _ in WING_LAYOUT], nw).astype(float)
        member = np.repeat([m for _, m in WING_LAYOUT], nw).astype(float)
        self.w_side, self.w_member = side, member
        self.w_index = np.repeat(np.arange(4), nw)

        nt = cfg.tail_strips
        # horizontal tail: span along Y, strips symmetric about the midplane
        hs = (np.arange(nt) + 0.5) / nt * cfg.htail_span - 0.5 * cfg.htail_span
        h_le = np.asarray(cfg.htail_center, float) + np.outer(hs, [0.0, 1.0, 0.0])
        # vertical tail: span along X
        vs = (np.arange(nt) + 0.5) / nt * cfg.vtail_span - 0.5 * cfg.vtail_span
        v_le = np.asarray(cfg.vtail_center, float) + np.outer(vs, [1.0, 0.0, 0.0])
        self.tail_le = np.vstack([h_le, v_le])
        self.tail_ns = np.vstack([np.tile([0.0, 1.0, 0.0], (nt, 1)), np.tile([1.0, 0.0, 0.0], (nt, 1))])
        self.nt = nt

        self.chord = np.concatenate([np.tile(c, 4), np.full(nt, cfg.htail_chord), np.full(nt, cfg.vtail_chord)])
        self.dr = np.concatenate([np.tile(dr, 4), np.full(nt, cfg.htail_span / nt), np.full(nt, cfg.vtail_span / nt)])
        self.n_total = 4 * nw + 2 * nt
        self.center = np.asarray(cfg.stroke_center, dtype=float)

    def wing_frames(self, phi):
        """Span, stroke-tangent and dorsal-tangent unit vectors per wing, each (4, 3)."""
        beta = self.cfg.beta0 + phi
        sb, cb = math.sin(beta), math.cos(beta)
        s = np.array([l[0] for l in WING_LAYOUT], float)
        m = np.array([l[1] for l in WING_LAYOUT], float)
        z = np.zeros(4)
        e = np.stack([m * sb, s * cb, z], axis=1)
        de = np.stack([m * cb, -s * sb, z], axis=1)
        tdors = np.stack([-np.full(4, cb), m * s * sb, z], axis=1)
        return e, de, tdors

    # ------------------------------------------------------------ stepping
    def _kinematics(self, phi, phi_dot, rudder, u_tail):
        nw, n = self.nw, self.n_total
        st = self.state
        e, de, td = self.wing_frames(phi)
        th = self.hinge.theta
        chat_w = -np.cos(th)[:, None] * np.array([0.0, 0.0, 1.0]) + np.sin(th)[:, None] * td
        # derivative of the chord direction with respect to its own rotation angle
        dchat_w = np.sin(th)[:, None] * np.array([0.0, 0.0, 1.0]) + np.cos(th)[:, None] * td
        E = np.repeat(e, nw, axis=0)
        C = np.repeat(chat_w, nw, axis=0)
        le_w = self.center + self.wing_r[:, None] * E
        vW = (self.wing_r * phi_dot)[:, None] * np.repeat(de, nw, axis=0)

        cr, sr = math.cos(rudder), math.sin(rudder)
        chat_t = np.vstack([np.tile([0.0, 0.0, -1.0], (self.nt, 1)), np.tile([0.0, -sr, -cr], (self.nt, 1))])
        dchat_t = np.vstack([np.zeros((self.nt, 3)), np.tile([0.0, -cr, sr], (self.nt, 1))])

        le = np.vstack([le_w, self.tail_le])
        ns = np.vstack([E, self.tail_ns])
        chat = np.vstack([C, chat_t])
        dchat = np.vstack([np.repeat(dchat_w, nw, axis=0), dchat_t])
        mid = le + 0.5 * self.chord[:, None] * chat

        U_b = st.R.T @ self.env.U_inf
        v_b = st.R.T @ st.v
        raw = U_b - v_b - np.cross(st.Omega, mid)
        raw[:4 * nw] -= vW
        raw[4 * nw:] += u_tail
        u_w = raw - np.sum(raw * ns, axis=1, keepdims=True) * ns
        return u_w, chat, dchat, ns, le, e, de

    def _servo(self, alloc):
        """Move the actuators toward the allocation at the servo slew rate."""
        rate = self.cfg.servo_rate
        if rate <= 0.0:
            return alloc
        target = np.append(alloc.theta0, alloc.rudder)
        if self._servo_pos is None:
            self._servo_pos = np.zeros(5)
        lim = rate * self.dt
        self._servo_pos = self._servo_pos + np.clip(target - self._servo_pos, -lim, lim)
        return Allocation(self._servo_pos[:4].copy(), float(self._servo_pos[4]), alloc.saturated)

    def step(self, cmd, dist_force=None, dist_torque=None, f=None):
        """Advance one step under ``cmd`` and return a :class:`StepOutput`."""
        cfg, dt = self.cfg, self.dt
        freq = cmd.f if f is None else f
        alloc = self._servo(allocate(cmd, cfg.eq_range, cfg.rudder_range))
        a = 0.5 * cfg.amplitude
        w = 2.0 * math.pi * freq
        phi = a * math.sin(self.phase)
        phi_dot = a * w * math.cos(self.phase)

        period = 1.0 / freq
        u_tail = self.wake.sample_delayed(self.t, period)
        nw = self.nw
        u_w, chat, dchat, ns, le, e, de = self._kinematics(phi, phi_dot, alloc.rudder, u_tail)

        if self._prev_u is None:
            u_dot = np.zeros_like(u_w)
            rudder_rate = 0.0
        else:
            u_dot = (u_w - self._prev_u) / dt
            rudder_rate = (alloc.rudder - self._prev_rudder) / dt
        self._prev_u, self._prev_rudder = u_w, alloc.rudder
        # AoA rate from the chord's own rotation relative to the air: the hinge
        # rate on the wings, the rudder rate on the vertical tail, zero on the
        # fixed horizontal tail. Rotating the chord toward the flow lowers alpha.
        rate = np.concatenate([np.repeat(self.hinge.theta_dot, nw), np.zeros(self.nt),
                               np.full(self.nt, rudder_rate)])
        alpha_dot = -rate * np.sign(np.sum(u_w * dchat, axis=1))

        if self.aero_on:
            lift, drag, rot, added, alpha, cop = aero.force_arrays(
                u_w, u_dot, alpha_dot, chat, ns, self.chord, self.dr, self.env)
        else:
            lift = drag = rot = added = np.zeros((self.n_total, 3))
            cop = np.zeros(self.n_total)
        Ftot = lift + drag + rot + added
        cc = self.chord[:, None] * chat
        tau_s = (np.cross(le, Ftot) + np.cross(cop[:, None] * cc, lift + drag)
                 + np.cross(aero.COP_ROTATIONAL * cc, rot) + np.cross(aero.COP_ADDED_MASS * cc, added))

        nwt = 4 * nw
        F_wings = Ftot[:nwt].reshape(4, nw, 3).sum(axis=1)
        tau_wings = tau_s[:nwt].reshape(4, nw, 3).sum(axis=1)
        F_tails = Ftot[nwt:].reshape(2, self.nt, 3).sum(axis=1)
        tau_tails = tau_s[nwt:].reshape(2, self.nt, 3).sum(axis=1)
        F_body = F_wings.sum(axis=0) + F_tails.sum(axis=0)
        tau_body = tau_wings.sum(axis=0) + tau_tails.sum(axis=0)

        # passive pitch: hinge moment about s * e (right-handed toward dorsal trailing edge)
        hinge_axis = np.array([l[0] for l in WING_LAYOUT], float)[:, None] * e
        m_strip = aero.moment_arrays(lift[:nwt], drag[:nwt], rot[:nwt], added[:nwt], cop[:nwt],
                                     chat[:nwt], self.chord[:nwt], np.repeat(hinge_axis, nw, axis=0))
        M = m_strip.reshape(4, nw).sum(axis=1)
        # membrane inertia under stroke acceleration (centripetal part has no arm about the span)
        phi_ddot = -w * w * phi
        chat_w = chat[:nwt:nw]
        M = M - self.S_w * phi_ddot * np.sum(np.cross(chat_w, de) * hinge_axis, axis=1)
        self.hinge.theta, self.hinge.theta_dot = passive_pitch_step(
            self.hinge.theta, self.hinge.theta_dot, M, alloc.theta0, cfg.k_s, self.I_w, dt,
            cfg.c_damp, cfg.stop_angle)

        # wake produced by the wings' translational lift, applied against it; the disk
        # only pumps air caudally, so a lift sum pointing tailward leaves no jet
        F_lift = lift[:nwt].sum(axis=0)
        if F_lift[2] > 0.0:
            u_i = -aero.induced_velocity(F_lift, cfg.disk_area, cfg.rho)
        else:
            u_i = np.zeros(3)
        self.wake.push(self.t, u_i)

        if not self.fixed:
            # a blown-up state is reported below, so the arithmetic warnings are noise
            with np.errstate(invalid="ignore", over="ignore"):
                self._integrate_body(F_body, tau_body, dist_force, dist_torque)

        if not (np.all(np.isfinite(F_body)) and np.all(np.isfinite(self.state.R))
                and np.all(np.isfinite(self.state.v)) and np.all(np.isfinite(self.hinge.theta))):
            raise SimulationDiverged(self.k, "state")

        self.phase = (self.phase + w * dt) % (2.0 * math.pi)
        self.t = (self.k + 1) * dt
        self.k += 1
        self.last = StepOutput(F_body, tau_body, F_wings, tau_wings, F_tails, tau_tails, u_i, u_tail,
                               self.wake.last_delay, alloc)
        return self.last

    def _integrate_body(self, F_b, tau_b, dist_force, dist_torque):
        st, dt = self.state, self.dt
        F = st.R @ F_b - self.cfg.mass * self.g * np.array([0.0, 0.0, 1.0])
        if dist_force is not None:
            F = F + dist_force
        tau = tau_b if dist_torque is None else tau_b + dist_torque
        if not self.lock_translation:
            st.v = st.v + dt * F / self.cfg.mass
            st.p = st.p + dt * st.v
        W = st.Omega
        dW = self.J_inv @ (tau - np.cross(W, self.J @ W))
        st.Omega = W + dt * dW
        if not np.all(np.isfinite(st.Omega)):
            raise SimulationDiverged(self.k, "angular velocity")
        st.R = st.R @ expm_so3(st.Omega * dt)
        if (self.k + 1) % 1000 == 0:
            st.R = orthonormalize(st.R)
