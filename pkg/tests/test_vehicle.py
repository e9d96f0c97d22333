import math

import numpy as np
import pytest

from flapsim.spatial import expm_so3
from flapsim.vehicle import (ActuationCommand, BodyState, RobotConfig, Simulation, SimulationDiverged,
                             allocate, inertia_from_components, passive_pitch_step, stroke_angle)

CFG = RobotConfig()


def mean_wrench(cmd, periods=10, settle=0.5, wind=(0.0, 0.0, 0.0), cfg=CFG):
    sim = Simulation(cfg, wind=wind, fixed=True)
    n_settle = int(round(settle / sim.dt))
    n = int(round(periods / (cmd.f * sim.dt)))
    F, T = np.zeros(3), np.zeros(3)
    for k in range(n_settle + n):
        o = sim.step(cmd)
        if k >= n_settle:
            F += o.F_body
            T += o.tau_body
    return F / n, T / n


def test_stroke_angle():
    phi, dphi, _ = stroke_angle(0.0, 10.0, math.pi / 4)
    assert phi == 0.0
    assert dphi == pytest.approx(math.pi / 8 * 2 * math.pi * 10)
    assert stroke_angle(0.025, 10.0, math.pi / 4)[0] == pytest.approx(math.pi / 8)
    with pytest.raises(ValueError):
        stroke_angle(0.0, 0.0, 1.0)


def test_allocation_table_rows():
    a = allocate(ActuationCommand(pitch=math.pi / 8, yaw=-math.pi / 8))
    np.testing.assert_allclose(a.theta0, [math.pi / 4, math.pi / 4, 0.0, 0.0])
    a = allocate(ActuationCommand())
    np.testing.assert_array_equal(a.theta0, 0.0)
    assert a.rudder == 0.0 and not a.saturated
    assert allocate(ActuationCommand(roll=math.pi / 4)).rudder == pytest.approx(math.pi / 4)


def test_allocation_clamps():
    a = allocate(ActuationCommand(pitch=0.6, yaw=0.6, roll=2.0))
    assert a.saturated
    np.testing.assert_allclose(a.theta0, [0.0, 0.0, math.pi / 4, math.pi / 4])
    assert a.rudder == pytest.approx(math.pi / 4)


def test_passive_pitch_equilibrium_and_stop():
    th, rate = passive_pitch_step(np.full(4, 0.2), np.zeros(4), 0.0, 0.2, 0.025, 1e-7, 1e-3)
    np.testing.assert_array_equal(th, 0.2)
    np.testing.assert_array_equal(rate, 0.0)
    th, rate = np.zeros(4), np.zeros(4)
    for _ in range(200):
        th, rate = passive_pitch_step(th, rate, 1.0, 0.0, 0.025, 1e-7, 1e-3)
    np.testing.assert_allclose(th, math.pi / 4)
    np.testing.assert_array_equal(rate, 0.0)
    with pytest.raises(ValueError):
        passive_pitch_step(th, rate, 0.0, 0.0, 0.025, 1e-7, 0.0)


def test_config_validation_and_roundtrip(tmp_path):
    with pytest.raises(ValueError):
        RobotConfig(mass=0.0)
    with pytest.raises(ValueError):
        RobotConfig(J=[[1, 0, 0], [0, -1, 0], [0, 0, 1]])
    with pytest.raises(KeyError):
        CFG.updated(nonsense=1)
    p = tmp_path / "robot.json"
    p.write_text(CFG.updated(mass=0.03).to_json())
    assert RobotConfig.load(p).mass == 0.03


def test_inertia_from_components():
    J = inertia_from_components([(2.0, [1.0, 0.0, 0.0]), (1.0, [0.0, 0.0, 0.0], [0, 0, 1], 0.6)])
    np.testing.assert_allclose(J, np.diag([0.03, 2.03, 2.0]))


def test_zero_flapping_is_at_rest():
    sim = Simulation(CFG.updated(amplitude=0.0), gravity_on=False)
    for _ in range(200):
        o = sim.step(ActuationCommand(f=13.0))
    np.testing.assert_array_equal(sim.state.p, 0.0)
    np.testing.assert_array_equal(sim.state.v, 0.0)
    np.testing.assert_array_equal(o.F_body, 0.0)


def test_ballistic_momentum():
    m = CFG.mass
    J = np.asarray(CFG.J)
    st = BodyState(R=expm_so3([0.2, -0.1, 0.4]), Omega=np.array([0.7, -0.3, 1.1]), v=np.array([1.0, 0.5, 2.0]))
    sim = Simulation(CFG, state=st, aero_on=False)
    h0 = st.R @ J @ st.Omega
    for k in range(500):
        p_prev = m * sim.state.v.copy()
        h_prev = sim.state.R @ J @ sim.state.Omega
        sim.step(ActuationCommand(f=13.0))
        # gravity is the only external force, and there is no torque at all
        np.testing.assert_allclose(m * sim.state.v - p_prev, [0.0, 0.0, -m * 9.81 * sim.dt], atol=1e-12)
        assert np.max(np.abs(sim.state.R @ J @ sim.state.Omega - h_prev)) < 1e-9
    assert np.max(np.abs(sim.state.R @ J @ sim.state.Omega - h0)) < 1e-7


def test_mirror_symmetry():
    a = Simulation(CFG, fixed=True)
    b = Simulation(CFG, fixed=True)
    cmd = ActuationCommand(f=13.0, pitch=0.1, yaw=0.05, roll=0.2)
    mir = ActuationCommand(f=13.0, pitch=0.1, yaw=-0.05, roll=-0.2)
    flip_f = np.array([1.0, -1.0, 1.0])
    flip_t = np.array([-1.0, 1.0, -1.0])
    for _ in range(300):
        oa, ob = a.step(cmd), b.step(mir)
        np.testing.assert_allclose(oa.F_body, flip_f * ob.F_body, atol=1e-9)
        np.testing.assert_allclose(oa.tau_body, flip_t * ob.tau_body, atol=1e-9)


def test_hover_trim():
    F, _ = mean_wrench(ActuationCommand(f=CFG.f_hover))
    assert F[2] == pytest.approx(CFG.mass * 9.81, rel=0.10)


def test_pitch_torque_grows_with_frequency():
    tau_y = [mean_wrench(ActuationCommand(f=f), periods=5)[1][1] for f in (9.0, 12.0, 15.0)]
    assert tau_y[0] < tau_y[1] < tau_y[2]
    assert tau_y[0] > 0.0


def test_flow_direction_signs():
    _, still = mean_wrench(ActuationCommand(f=13.0), periods=5)
    _, head = mean_wrench(ActuationCommand(f=13.0), periods=5, wind=(-2.0, 0.0, 0.0))
    _, side = mean_wrench(ActuationCommand(f=13.0), periods=5, wind=(0.0, -2.0, 0.0))
    assert head[1] < 0.0 and head[1] < still[1]
    assert side[2] > 0.0


def test_divergence_is_reported():
    sim = Simulation(CFG)
    sim.step(ActuationCommand(f=13.0))
    with pytest.raises(SimulationDiverged) as err:
        sim.step(ActuationCommand(f=13.0), dist_torque=np.array([np.inf, 0.0, 0.0]))
    assert err.value.step == 1


def test_gimbal_holds_position():
    sim = Simulation(CFG, lock_translation=True)
    for _ in range(300):
        sim.step(ActuationCommand(f=13.0, roll=0.3))
    np.testing.assert_array_equal(sim.state.p, 0.0)
    assert np.linalg.norm(sim.state.Omega) > 0.0


def test_determinism():
    def run():
        sim = Simulation(CFG)
        return np.array([sim.step(ActuationCommand(f=13.0, pitch=0.1)).F_body for _ in range(200)])
    np.testing.assert_array_equal(run(), run())


def test_servo_rate_limits_slew():
    cfg = CFG.updated(servo_rate=10.0)
    target = allocate(ActuationCommand(f=13.0, pitch=0.3, roll=0.5), cfg.eq_range, cfg.rudder_range)
    sim = Simulation(cfg, fixed=True)
    first = sim._servo(target)
    np.testing.assert_allclose(np.abs(first.theta0), np.minimum(np.abs(target.theta0), 0.01))
    assert first.rudder == pytest.approx(0.01)
    for _ in range(100):
        last = sim._servo(target)
    np.testing.assert_allclose(last.theta0, target.theta0)
    assert last.rudder == pytest.approx(target.rudder)
    assert Simulation(CFG, fixed=True)._servo(target) is target
    with pytest.raises(ValueError):
        RobotConfig(servo_rate=-1.0)
