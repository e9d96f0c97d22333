"""Reference signals, open-loop campaigns and closed-loop runners.

Every runner returns a :class:`RunResult` holding a telemetry table (column
name to 1-D array, SI units) and a JSON-ready summary dictionary. Runs are
deterministic: the only randomness is the optional disturbance noise, drawn
from a generator seeded by the scenario.
"""

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import analysis
from .analysis import TimeSeries
from .control import (AttitudeController, EsoState, GainSet, LowPass2, eso_step, integral_update,
                      position_control, reference_tracker_step, thrust_to_attitude, thrust_to_frequency)
from .spatial import attitude_error, euler_zyx_to_rotation, expm_so3, hat, rotation_to_euler_zyx
from .vehicle import ActuationCommand, BodyState, RobotConfig, Simulation, WING_NAMES
from .wake import phase_delay

ATTITUDE_TASKS = ("a", "b1", "b2", "c", "d", "e")
TRAJECTORY_TASKS = ("v-Cir", "l-Cir", "Lem", "P2P")
PASSIVE_CASES = ("passive-1", "passive-2", "passive-3")
OPEN_LOOP_TASKS = PASSIVE_CASES + ("wake-sweep", "wrench-table")
ALL_TASKS = ATTITUDE_TASKS + TRAJECTORY_TASKS + OPEN_LOOP_TASKS

CONTROL_PERIOD_STEPS = 10        # controller at 100 Hz on the 1 kHz simulation clock
BURN_IN = 0.2                    # leading fraction of a run left out of the metrics
STEP_HOLD = 2.0                  # s per attitude in task (e)
STEP_ATTITUDES = ((math.pi / 2, 0.0, 0.0), (-math.pi / 2, 0.0, 0.0), (0.0, math.pi / 2, 0.0),
                  (0.0, -math.pi / 2, 0.0), (0.0, 0.0, -math.pi / 2), (0.0, 0.0, math.pi / 2))
SIDE_WIND = 3.0                  # m/s, passive case 3
SIDE_WIND_HEADING = -math.pi / 8  # rig heading of the wind in the stroke plane, see wind_rig_rotation

# Tables of open-loop commands: (label, pitch, yaw) for the wings and (label, roll) for the rudder
WING_COMMANDS = tuple(
    (lbl, p, y) for lbl, (p, y) in zip(
        "abcdefghi",
        [(p, y) for p in (math.pi / 8, 0.0, -math.pi / 8) for y in (-math.pi / 8, 0.0, math.pi / 8)]))
RUDDER_COMMANDS = tuple((str(i + 1), r) for i, r in enumerate(
    (-3 * math.pi / 8, -math.pi / 4, -math.pi / 8, 0.0, math.pi / 8, math.pi / 4, 3 * math.pi / 8)))


# ---------------------------------------------------------------- references

@dataclass
class Reference:
    """Desired signals at one instant; unused members stay ``None``."""

    R_d: np.ndarray = None
    Omega_d: np.ndarray = None
    dOmega_d: np.ndarray = None
    p_d: np.ndarray = None
    v_d: np.ndarray = None
    a_d: np.ndarray = None
    d_T: np.ndarray = None


def _attitude_reference(task, t):
    if task in ("a", "b1", "b2", "c"):
        axis = {"a": 0, "b1": 1, "b2": 1, "c": 2}[task]
        w = np.zeros(3)
        w[axis] = -0.5 * math.pi if task == "b2" else 0.5 * math.pi
        return Reference(R_d=expm_so3(w * t), Omega_d=w, dOmega_d=np.zeros(3))
    if task == "d":
        # the rate keeps a fixed axis, so the attitude is the exponential of its integral
        ones = np.ones(3)
        return Reference(R_d=expm_so3(0.5 * math.sin(math.pi * t) * ones),
                         Omega_d=0.5 * math.pi * math.cos(math.pi * t) * ones,
                         dOmega_d=-0.5 * math.pi ** 2 * math.sin(math.pi * t) * ones)
    k = int(math.floor(t / STEP_HOLD + 1e-9)) % len(STEP_ATTITUDES)
    return Reference(R_d=euler_zyx_to_rotation(*STEP_ATTITUDES[k]), Omega_d=np.zeros(3), dOmega_d=np.zeros(3))


def _trajectory_reference(task, t):
    w = 0.2 * math.pi
    if task in ("v-Cir", "l-Cir"):
        c, s = math.cos(w * t), math.sin(w * t)
        p = np.array([2.0 - 2.0 * c, 2.0 * s, 0.0])
        v = np.array([2.0 * w * s, 2.0 * w * c, 0.0])
        a = np.array([2.0 * w * w * c, -2.0 * w * w * s, 0.0])
    elif task == "Lem":
        p, v, a = _lemniscate(t, w)
    else:
        p = np.full(3, 2.0) if 2.0 < t <= 8.0 else np.zeros(3)
        v = np.zeros(3)
        a = np.zeros(3)
    d_T = np.array([0.0, 1.0, 0.0]) if task == "l-Cir" else np.array([1.0, 0.0, 0.0])
    return Reference(p_d=p, v_d=v, a_d=a, d_T=d_T)


def _lemniscate(t, w):
    """Position, velocity and acceleration of the lemniscate of Gerono-Bernoulli form."""
    s, c = math.sin(w * t), math.cos(w * t)
    D = 1.0 + s * s
    dD = 2.0 * s * c * w
    ddD = 2.0 * w * w * (c * c - s * s)
    X, dX, ddX = c, -w * s, -w * w * c
    Y, dY, ddY = s, w * c, -w * w * s

    def quotient(N, dN, ddN):
        q = N / D
        dq = (dN * D - N * dD) / D ** 2
        ddq = (ddN - 2.0 * dq * dD - q * ddD) / D
        return q, dq, ddq

    qx = quotient(X, dX, ddX)
    qy = quotient(Y, dY, ddY)
    p = np.array([2.0 - 2.0 * qx[0], 2.0 * qy[0], 0.0])
    v = np.array([-2.0 * qx[1], 2.0 * qy[1], 0.0])
    a = np.array([-2.0 * qx[2], 2.0 * qy[2], 0.0])
    return p, v, a


def reference(task, t):
    """Desired signals of an attitude or trajectory task at time ``t`` (s)."""
    if t < 0.0:
        raise ValueError("time must be non-negative")
    if task in ATTITUDE_TASKS:
        return _attitude_reference(task, t)
    if task in TRAJECTORY_TASKS:
        return _trajectory_reference(task, t)
    raise ValueError(f"unknown task {task!r}")


def integrate_attitude_reference(task, t_end, dt=1e-3):
    """Integrate ``dR_d/dt = R_d hat(Omega_d)`` from the identity with the exponential map.

    Used to cross-check the closed-form attitude references.
    """
    R = np.eye(3)
    n = int(round(t_end / dt))
    for k in range(n):
        t_mid = (k + 0.5) * dt
        R = R @ expm_so3(reference(task, t_mid).Omega_d * dt)
    return R


# ---------------------------------------------------------------- scenario plumbing

@dataclass
class Disturbance:
    """Force (inertial frame, N) and torque (body frame, N*m) applied on ``t0 <= t < t1``.

    The ``noise_*`` entries add zero-mean Gaussian components with that
    standard deviation, drawn per step from the scenario's seeded generator.
    """

    t0: float = 0.0
    t1: float = math.inf
    force: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    torque: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    noise_force: float = 0.0
    noise_torque: float = 0.0


@dataclass
class Scenario:
    """Everything needed to reproduce one run."""

    task: str
    controller: str = ""                 # tau1|tau2|tau3 or ut1|ut2|ut3
    duration: float = 20.0
    robot: str = ""                      # robot JSON path, empty for the defaults
    robot_overrides: dict = field(default_factory=dict)
    gains: dict = field(default_factory=dict)
    wind: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    disturbances: list = field(default_factory=list)
    seed: int = 0
    dt: float = 1e-3
    freq: float = 0.0                    # flapping frequency for open-loop and attitude runs, 0 = default
    freqs: list = field(default_factory=list)   # frequency list for sweeps
    telemetry: str = "telemetry.csv"
    summary: str = "summary.json"
    wrench: str = "wrench_table.json"

    def __post_init__(self):
        if self.task not in ALL_TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")
        if self.controller and self.controller not in ("tau1", "tau2", "tau3", "ut1", "ut2", "ut3"):
            raise ValueError(f"unknown controller {self.controller!r}")
        self.disturbances = [d if isinstance(d, Disturbance) else Disturbance(**d) for d in self.disturbances]

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))

    def to_json(self):
        d = asdict(self)
        d["disturbances"] = [asdict(x) if not isinstance(x, dict) else x for x in self.disturbances]
        return json.dumps(d, indent=2)

    def robot_config(self):
        cfg = RobotConfig.load(self.robot) if self.robot else RobotConfig()
        return cfg.updated(**self.robot_overrides) if self.robot_overrides else cfg

    def gain_set(self):
        return GainSet().updated(**self.gains) if self.gains else GainSet()


class DisturbanceSchedule:
    def __init__(self, items, seed):
        self.items = list(items)
        self.rng = np.random.default_rng(seed)

    def at(self, t):
        F = np.zeros(3)
        T = np.zeros(3)
        for d in self.items:
            if d.t0 <= t < d.t1:
                F += d.force
                T += d.torque
                if d.noise_force > 0.0:
                    F += self.rng.normal(0.0, d.noise_force, 3)
                if d.noise_torque > 0.0:
                    T += self.rng.normal(0.0, d.noise_torque, 3)
        return F, T


@dataclass
class RunResult:
    telemetry: dict
    summary: dict


class Recorder:
    """Preallocated column store for per-step telemetry."""

    def __init__(self, n):
        self.n = n
        self.k = 0
        self.cols = {}

    def put(self, **values):
        for name, v in values.items():
            v = np.atleast_1d(np.asarray(v, dtype=float))
            if v.size == 1:
                self._col(name)[self.k] = v[0]
            else:
                for i, x in enumerate(v):
                    self._col(f"{name}_{'xyz'[i] if v.size == 3 else i}")[self.k] = x

    def _col(self, name):
        c = self.cols.get(name)
        if c is None:
            c = self.cols[name] = np.full(self.n, np.nan)
        return c

    def advance(self):
        self.k += 1

    def table(self):
        return {k: v[:self.k] for k, v in self.cols.items()}


def wind_rig_rotation(heading=SIDE_WIND_HEADING):
    """Body attitude for the side-wind rig.

    The body z axis is laid along the inertial z axis's opposite so that a wind
    along inertial +z sweeps through the stroke plane; the flow then arrives
    from the body direction ``(cos h, sin h, 0)``.
    """
    d = -np.array([math.cos(heading), math.sin(heading), 0.0])
    z = d
    x = np.cross([0.0, 0.0, 1.0], z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return np.vstack([x, y, z])


class RateGyro:
    """Rate sensor that reports the mean body rate since its last read.

    Averaging over the sample interval (integrate and dump) keeps the high
    flapping harmonics from aliasing into the 100 Hz controller samples.
    """

    def __init__(self):
        self.total = np.zeros(3)
        self.count = 0

    def add(self, omega):
        self.total = self.total + omega
        self.count += 1

    def read(self):
        out = self.total / self.count if self.count else np.zeros(3)
        self.total = np.zeros(3)
        self.count = 0
        return out


# ---------------------------------------------------------------- open loop

def fundamental_lag(signal, ref, f, dt):
    """Lag of ``signal`` behind ``ref`` at frequency ``f``, as a fraction of the period in [0, 1)."""
    t = np.arange(len(ref)) * dt
    e = np.exp(-2j * math.pi * f * t)
    return float(((np.angle(np.asarray(ref) @ e) - np.angle(np.asarray(signal) @ e)) / (2.0 * math.pi)) % 1.0)


def _open_loop(cfg, f, duration, dt=1e-3, wind=(0.0, 0.0, 0.0), R=None, cmd=None, recorder=None):
    sim = Simulation(cfg, dt=dt, wind=wind, state=BodyState(R=R) if R is not None else None, fixed=True)
    cmd = cmd or ActuationCommand(f=f)
    n = int(round(duration / dt))
    out = {k: np.empty((n, 3)) for k in ("F", "tau")}
    out["phi"] = np.empty(n)
    out["theta"] = np.empty((n, 4))
    out["delay"] = np.empty(n)
    for k in range(n):
        phi = 0.5 * cfg.amplitude * math.sin(sim.phase)
        o = sim.step(cmd)
        out["F"][k], out["tau"][k] = o.F_body, o.tau_body
        out["phi"][k] = phi
        out["theta"][k] = sim.hinge.theta
        out["delay"][k] = o.delay
        if recorder is not None:
            recorder.put(t=sim.t, phi=phi, F=o.F_body, tau=o.tau_body, u_tail=o.u_tail, T_d=o.delay)
            recorder.put(**{f"theta_{w}": sim.hinge.theta[i] for i, w in enumerate(WING_NAMES)})
            recorder.advance()
    return out


def passive_case(case, cfg=None, duration=1.0, dt=1e-3, monitored=0):
    """Fixed-body passive pitch runs.

    Case 1 flaps at 10 Hz, case 2 at 15 Hz and case 3 at 15 Hz in a 3 m/s
    wind along inertial +z. Metrics use the second half of the run, where the
    cycle is periodic, and the monitored wing (index into ``WING_NAMES``).
    """
    cfg = cfg or RobotConfig()
    f, wind, R = {1: (10.0, (0.0, 0.0, 0.0), None),
                  2: (15.0, (0.0, 0.0, 0.0), None),
                  3: (15.0, (0.0, 0.0, SIDE_WIND), wind_rig_rotation())}[int(case)]
    rec = Recorder(int(round(duration / dt)))
    out = _open_loop(cfg, f, duration, dt, wind, R, recorder=rec)
    half = len(out["phi"]) // 2
    th = out["theta"][half:, monitored]
    lo = float(th.min())
    summary = {
        "task": f"passive-{case}", "frequency_hz": f, "wing": WING_NAMES[monitored],
        "pitch_lag_periods": fundamental_lag(th, out["phi"][half:], f, dt),
        "theta_max": float(th.max()), "theta_min": lo,
        "max_over_abs_min": float(th.max() / abs(lo)) if lo < 0.0 else math.inf,
        "mean_force": out["F"][half:].mean(axis=0).tolist(),
        "mean_torque": out["tau"][half:].mean(axis=0).tolist(),
    }
    return RunResult(rec.table(), summary)


def _sweep_point(args):
    cfg, f, duration, dt = args
    out = _open_loop(cfg, f, duration, dt)
    n = int(round(1.0 / (f * dt)))
    T_d = float(out["delay"][-n:].mean())
    return {"frequency_hz": f, "T_d": T_d, "phase_over_pi": phase_delay(T_d, 1.0 / f) / math.pi,
            "mean_Fz": float(out["F"][-n * (len(out["F"]) // (2 * n)):, 2].mean())}


def batch_map(fn, items):
    """Map over independent runs, in parallel when ``FLAPSIM_THREADS`` > 1."""
    items = list(items)
    workers = int(os.environ.get("FLAPSIM_THREADS", "1") or 1)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))


def wake_sweep(freqs=range(5, 20), cfg=None, duration=1.5, dt=1e-3):
    """Wing-to-tail delay and phase lag across flapping frequencies."""
    cfg = cfg or RobotConfig()
    rows = batch_map(_sweep_point, [(cfg, float(f), duration, dt) for f in freqs])
    x = np.array([1.0 / r["frequency_hz"] ** 2 for r in rows])
    y = np.array([r["T_d"] for r in rows])
    fit = {}
    if len(rows) >= 3:
        A = np.vstack([x, np.ones_like(x)]).T
        coef = np.linalg.lstsq(A, y, rcond=None)[0]
        ss = float(np.sum((y - y.mean()) ** 2))
        fit = {"slope": float(coef[0]), "intercept": float(coef[1]),
               "r2": 1.0 - float(np.sum((A @ coef - y) ** 2)) / ss if ss > 0.0 else 1.0}
    return RunResult({k: np.array([r[k] for r in rows]) for k in rows[0]},
                     {"task": "wake-sweep", "points": rows, "fit_1_over_f2": fit})


def _wrench_point(args):
    cfg, f, cmd, duration, dt, periods = args
    out = _open_loop(cfg, f, duration, dt, cmd=cmd)
    n = int(round(periods / (f * dt)))
    F, tau = out["F"][-n:], out["tau"][-n:]
    ups = [analysis.oscillation_statistic(TimeSeries(F[:, i], dt)) for i in range(3)]
    ups += [analysis.oscillation_statistic(TimeSeries(tau[:, i], dt)) for i in range(3)]
    return {"mean_force": F.mean(axis=0).tolist(), "mean_torque": tau.mean(axis=0).tolist(),
            "upsilon": dict(zip(("Fx", "Fy", "Fz", "tx", "ty", "tz"), ups))}


def wrench_table(freqs=range(5, 20), cfg=None, duration=1.0, dt=1e-3, periods=5,
                 wing_rows=WING_COMMANDS, rudder_rows=RUDDER_COMMANDS):
    """Mean wrench and oscillation statistic for the wing and rudder command tables.

    The rudder rows span +-3pi/8, so the rudder range is widened for this
    open-loop campaign only.
    """
    cfg = cfg or RobotConfig()
    tail_cfg = cfg.updated(rudder_range=max(cfg.rudder_range, 3 * math.pi / 8))
    jobs, keys = [], []
    for lbl, p, y in wing_rows:
        for f in freqs:
            jobs.append((cfg, float(f), ActuationCommand(float(f), pitch=p, yaw=y), duration, dt, periods))
            keys.append(("wings", lbl, {"pitch": p, "yaw": y}, float(f)))
    for lbl, r in rudder_rows:
        for f in freqs:
            jobs.append((tail_cfg, float(f), ActuationCommand(float(f), roll=r), duration, dt, periods))
            keys.append(("rudder", lbl, {"roll": r}, float(f)))
    results = batch_map(_wrench_point, jobs)
    rows = [dict(table=t, row=lbl, command=c, frequency_hz=f, **res) for (t, lbl, c, f), res in zip(keys, results)]
    cols = {"frequency_hz": np.array([r["frequency_hz"] for r in rows])}
    for i, a in enumerate("xyz"):
        cols[f"F_{a}"] = np.array([r["mean_force"][i] for r in rows])
        cols[f"tau_{a}"] = np.array([r["mean_torque"][i] for r in rows])
    return RunResult(cols, {"task": "wrench-table", "rows": rows})


# ---------------------------------------------------------------- closed loop

def command_from_torque(tau, f, cfg):
    """Scale a controller torque to roll/pitch/yaw actuation angles around the trim."""
    u = np.asarray(cfg.command_gain) * tau + np.asarray(cfg.command_trim)
    u = np.clip(u, -np.asarray(cfg.command_limit), cfg.command_limit)
    return ActuationCommand(f=f, roll=float(u[0]), pitch=float(u[1]), yaw=float(u[2]))


def _variant(controller, prefix, default):
    if not controller:
        return default
    if not controller.startswith(prefix):
        raise ValueError(f"controller {controller!r} does not fit this task")
    return int(controller[len(prefix):])


def run_attitude(task, controller="tau3", cfg=None, gains=None, duration=20.0, dt=1e-3, freq=0.0,
                 disturbances=(), seed=0, wind=(0.0, 0.0, 0.0), filter_on=True):
    """Attitude tracking on a gimbal rig: rotation free, centre of mass held.

    The task reference passes through the differential tracker at the
    simulation rate, and both the controller and the reported ``psi`` use the
    smoothed ``R_f``. ``psi_raw`` in the telemetry measures against the task
    reference itself.

    The flapping frequency stays at ``freq`` (default: the hover frequency).
    The controller, with the angular-rate filter, runs every
    ``CONTROL_PERIOD_STEPS`` simulation steps.
    """
    cfg = cfg or RobotConfig()
    gains = gains or GainSet()
    variant = _variant(controller, "tau", 3)
    f = freq or cfg.f_hover
    sim = Simulation(cfg, dt=dt, wind=wind, lock_translation=True)
    ctrl = AttitudeController(variant, gains, J0=None)
    dt_c = CONTROL_PERIOD_STEPS * dt
    filt = LowPass2(dt_c, gains.omega_n, gains.zeta)
    dist = DisturbanceSchedule(disturbances, seed)
    n = int(round(duration / dt))
    rec = Recorder(n)
    cmd = ActuationCommand(f=f)
    Om_meas = np.zeros(3)
    gyro = RateGyro()
    R_f, Om_f, dOm_f = reference(task, 0.0).R_d.copy(), np.zeros(3), np.zeros(3)
    tau = np.zeros(3)
    psi = np.empty(n)
    for k in range(n):
        t = k * dt
        ref = reference(task, t)
        st = sim.state
        gyro.add(st.Omega)
        if k % CONTROL_PERIOD_STEPS == 0:
            Om_meas = filt.step(gyro.read()) if filter_on else gyro.read()
            out = ctrl(st.R, R_f, Om_meas, Om_f, dOm_f, dt_c)
            tau = out.tau
            cmd = command_from_torque(tau, f, cfg)
        psi[k] = attitude_error(st.R, R_f)[0]
        psi_raw = attitude_error(st.R, ref.R_d)[0]
        R_now, Om_now = st.R, st.Omega   # the step rebinds these, so the rows stay pre-step
        F_d, T_d = dist.at(t)
        o = sim.step(cmd, dist_force=F_d, dist_torque=T_d)
        rec.put(t=t, psi=psi[k], psi_raw=psi_raw, euler=rotation_to_euler_zyx(R_now),
                euler_d=rotation_to_euler_zyx(ref.R_d), euler_f=rotation_to_euler_zyx(R_f),
                Omega=Om_now, Omega_filt=Om_meas, tau_cmd=tau, roll_cmd=cmd.roll, pitch_cmd=cmd.pitch,
                yaw_cmd=cmd.yaw, f=f, tau_aero=o.tau_body)
        R_f, Om_f, dOm_f = reference_tracker_step(R_f, Om_f, ref.R_d, gains, dt)
        rec.advance()
    mx, rms = analysis.metrics(psi, BURN_IN)
    summary = {"task": task, "controller": f"tau{variant}", "duration_s": duration, "frequency_hz": f,
               "psi_max": mx, "psi_rms": rms, "burn_in_fraction": BURN_IN,
               "J_bar": ctrl.J_bar.tolist() if variant == 2 else None}
    return RunResult(rec.table(), summary)


def run_trajectory(task, controller="ut1", cfg=None, gains=None, duration=20.0, dt=1e-3,
                   disturbances=(), seed=0, wind=(0.0, 0.0, 0.0), attitude_law=3):
    """Free-flight trajectory tracking.

    Position law ``controller`` and the attitude law run every
    ``CONTROL_PERIOD_STEPS`` steps; the observer and the reference tracker run
    every step. Position feedback uses the observer estimates for all three
    laws, and only ``ut1`` uses the disturbance estimate. The observer input
    is the realised thrust direction (measured body z axis) rather than the
    commanded ``u_t``, so attitude lag is not booked as an external force.
    """
    cfg = cfg or RobotConfig()
    gains = gains or GainSet()
    variant = _variant(controller, "ut", 1)
    m = cfg.mass
    sim = Simulation(cfg, dt=dt, wind=wind)
    att = AttitudeController(attitude_law, gains)
    dt_c = CONTROL_PERIOD_STEPS * dt
    filt = LowPass2(dt_c, gains.omega_n, gains.zeta)
    dist = DisturbanceSchedule(disturbances, seed)
    d_T0 = reference(task, 0.0).d_T
    eso = EsoState(p_o=sim.state.p.copy(), v_o=sim.state.v.copy(), z=np.zeros(3))
    e_I = np.zeros(3)
    u_t = np.array([0.0, 0.0, 9.81])
    R_cmd = np.eye(3)
    R_f, Om_f, dOm_f = np.eye(3), np.zeros(3), np.zeros(3)
    gyro = RateGyro()
    f = cfg.f_hover
    cmd = ActuationCommand(f=f)
    n = int(round(duration / dt))
    rec = Recorder(n)
    e_norm = np.empty(n)
    tau = np.zeros(3)
    for k in range(n):
        t = k * dt
        ref = reference(task, t)
        st = sim.state
        gyro.add(st.Omega)
        if k % CONTROL_PERIOD_STEPS == 0:
            e_p = ref.p_d - eso.p_o
            e_v = ref.v_d - eso.v_o
            z = eso.z if variant == 1 else np.zeros(3)
            u_t = position_control(variant, e_p, e_v, e_I, z, ref.a_d, st.R, gains, m)
            e_I = integral_update(e_I, st.R, e_p, e_v, gains, dt_c)
            if np.linalg.norm(u_t) > 1e-9:
                R_cmd = thrust_to_attitude(u_t, d_T0, ref.v_d, gains.eps_k)
            f = thrust_to_frequency(u_t, cfg.f_hover, 9.81, gains.f_min, gains.f_max)
            Om_meas = filt.step(gyro.read())
            out = att(st.R, R_f, Om_meas, Om_f, dOm_f, dt_c)
            tau = out.tau
            cmd = command_from_torque(tau, f, cfg)
        e_norm[k] = float(np.linalg.norm(ref.p_d - st.p))
        psi = attitude_error(st.R, R_f)[0]
        p_now, v_now, R_now, Om_now = st.p, st.v, st.R, st.Omega
        F_d, T_d = dist.at(t)
        o = sim.step(cmd, dist_force=F_d, dist_torque=T_d)
        rec.put(t=t, p=p_now, p_d=ref.p_d, v=v_now, e_p=e_norm[k], euler=rotation_to_euler_zyx(R_now),
                euler_f=rotation_to_euler_zyx(R_f), psi=psi, Omega=Om_now, u_t=u_t, z=eso.z, f=f,
                tau_cmd=tau, roll_cmd=cmd.roll, pitch_cmd=cmd.pitch, yaw_cmd=cmd.yaw, F_aero=o.F_body,
                tau_aero=o.tau_body)
        # the observer sees the thrust the robot can actually produce: along the measured
        # body z axis, with the magnitude the clamped frequency stands for
        u_real = (9.81 * f / cfg.f_hover) * R_now[:, 2]
        eso = eso_step(eso, p_now, u_real, gains, m, dt)
        R_f, Om_f, dOm_f = reference_tracker_step(R_f, Om_f, R_cmd, gains, dt)
        rec.advance()
    mx, rms = analysis.metrics(e_norm, BURN_IN)
    summary = {"task": task, "controller": f"ut{variant}", "attitude_controller": f"tau{attitude_law}",
               "duration_s": duration, "e_p_max": mx, "e_p_rms": rms, "burn_in_fraction": BURN_IN,
               "final_position": sim.state.p.tolist()}
    return RunResult(rec.table(), summary)


def run_scenario(sc):
    """Dispatch a :class:`Scenario` to its runner."""
    cfg = sc.robot_config()
    gains = sc.gain_set()
    if sc.task in PASSIVE_CASES:
        return passive_case(int(sc.task[-1]), cfg, duration=sc.duration, dt=sc.dt)
    if sc.task == "wake-sweep":
        return wake_sweep(sc.freqs or range(5, 20), cfg, duration=sc.duration, dt=sc.dt)
    if sc.task == "wrench-table":
        return wrench_table(sc.freqs or range(5, 20), cfg, duration=sc.duration, dt=sc.dt)
    common = dict(cfg=cfg, gains=gains, duration=sc.duration, dt=sc.dt, disturbances=sc.disturbances,
                  seed=sc.seed, wind=sc.wind)
    if sc.task in ATTITUDE_TASKS:
        return run_attitude(sc.task, sc.controller or "tau3", freq=sc.freq, **common)
    return run_trajectory(sc.task, sc.controller or "ut1", **common)
