import math

import numpy as np
import pytest

from latentskill.bodies import NUM_JOINTS, default_body
from latentskill.errors import ConfigError, InvalidStateError, SimulationDiverged
from latentskill.physics import Simulator, ball
from latentskill.simstate import Action, SimState, WorldParams

DT = 1.0 / 30.0


def zero_gain_body():
    spec = default_body()
    spec.pd_gains[:] = 0.0
    spec.damping[:] = 0.0
    return spec


def random_state(rng, spec, airborne=False):
    y = rng.uniform(5.0, 20.0) if airborne else rng.uniform(0.3, 1.2)
    return SimState(
        root_pos=np.array([rng.uniform(-2, 2), y]),
        root_rot=rng.uniform(-1.5, 1.5),
        joint_pos=spec.clamp_joints(rng.uniform(-1.0, 1.0, NUM_JOINTS)),
        root_vel=rng.uniform(-1, 1, 2),
        root_ang_vel=rng.uniform(-1, 1),
        joint_vel=rng.uniform(-2, 2, NUM_JOINTS),
    )


class TestStep:
    def test_equilibrium_hold(self, sim):
        state = sim.reset()
        action = Action(state.joint_pos.copy())
        out, _ = sim.step(state, action, dt=DT)
        np.testing.assert_allclose(out.joint_pos, state.joint_pos, atol=1e-9)

    def test_gravity_integration(self):
        sim = Simulator(zero_gain_body())
        state = sim.reset()
        state.root_pos[1] = 50.0  # airborne
        out, _ = sim.step(state, Action(np.zeros(NUM_JOINTS)), dt=DT)
        assert abs(out.root_vel[1] - (-9.81 * DT)) < 1e-12

    def test_ball_impulse_matches_1d_oracle(self):
        spec = zero_gain_body()
        world = WorldParams(gravity=0.0)
        sim = Simulator(spec, world, substeps=1)
        state = sim.reset()
        state.root_pos[:] = [0.0, 2.0]
        state.root_vel[:] = [2.0, 0.0]
        foot_y = 2.0 - float(spec.link_lengths[4] + spec.link_lengths[5])
        obj = ball(x=0.05, y=foot_y, radius=0.11, mass=0.45)
        _, objs = sim.step(state, Action(np.zeros(NUM_JOINTS)), [obj], dt=1.0 / 120.0)

        # Independent two-body impulse computation along the contact normal.
        m_link = float(spec.link_masses[5])  # struck shin
        m_ball = 0.45
        v_rel = 0.0 - 2.0
        impulse = -(1.0 + world.restitution) * v_rel / (1.0 / m_ball + 1.0 / m_link)
        expected_speed = impulse / m_ball
        speed = float(np.linalg.norm(objs[0].vel))
        assert abs(speed - expected_speed) < 1e-6

    def test_step_deterministic(self, sim, rng):
        state = random_state(rng, sim.spec)
        action = Action(rng.uniform(-1, 1, NUM_JOINTS))
        objs = [ball(1.0, 0.11)]
        out1, objs1 = sim.step(state.copy(), action, [objs[0].copy()])
        out2, objs2 = sim.step(state.copy(), action, [objs[0].copy()])
        q1, v1 = out1.pack()
        q2, v2 = out2.pack()
        assert np.array_equal(q1, q2) and np.array_equal(v1, v2)
        assert np.array_equal(objs1[0].pose, objs2[0].pose)
        assert np.array_equal(objs1[0].vel, objs2[0].vel)

    def test_passive_energy_nonincreasing(self, rng):
        spec = zero_gain_body()
        spec.damping[:] = 1.0  # pure damping, no PD
        sim = Simulator(spec)
        state = random_state(rng, spec, airborne=True)
        energy = sim.mechanical_energy(state)
        for _ in range(60):
            state, _ = sim.step(state, Action(np.zeros(NUM_JOINTS)))
            new_energy = sim.mechanical_energy(state)
            assert new_energy <= energy + 1e-8
            energy = new_energy

    def test_joint_clamping(self, sim, rng):
        state = sim.reset()
        lo = sim.spec.joint_limits[:, 0]
        hi = sim.spec.joint_limits[:, 1]
        for _ in range(30):
            action = Action(rng.uniform(-6, 6, NUM_JOINTS))
            state, _ = sim.step(state, action)
            assert np.all(state.joint_pos >= lo - 1e-12)
            assert np.all(state.joint_pos <= hi + 1e-12)

    def test_divergence_guard(self, sim):
        state = sim.reset()
        state.root_vel[0] = 5e6
        with pytest.raises(SimulationDiverged):
            sim.step(state, Action(np.zeros(NUM_JOINTS)))

    def test_nonfinite_state_rejected(self, sim):
        state = sim.reset()
        state.root_pos[0] = np.nan
        with pytest.raises(InvalidStateError):
            sim.step(state, Action(np.zeros(NUM_JOINTS)))

    def test_bad_action_rejected(self, sim):
        state = sim.reset()
        with pytest.raises(ConfigError):
            sim.step(state, Action(np.zeros(3)))
        with pytest.raises(InvalidStateError):
            sim.step(state, Action(np.full(NUM_JOINTS, np.inf)))

    def test_bad_dt_rejected(self, sim):
        with pytest.raises(ConfigError):
            sim.step(sim.reset(), Action(np.zeros(NUM_JOINTS)), dt=0.0)


class TestReset:
    def test_deterministic(self, sim):
        a = sim.reset(seed=0)
        b = sim.reset(seed=0)
        qa, va = a.pack()
        qb, vb = b.pack()
        assert np.array_equal(qa, qb) and np.array_equal(va, vb)

    def test_noise_seeded(self, sim):
        a = sim.reset(seed=3, noise=0.05)
        b = sim.reset(seed=3, noise=0.05)
        c = sim.reset(seed=4, noise=0.05)
        assert np.array_equal(a.joint_pos, b.joint_pos)
        assert not np.array_equal(a.joint_pos, c.joint_pos)

    def test_spawn_survives_one_second(self, sim):
        state = sim.reset()
        for _ in range(30):
            state, _ = sim.step(state, Action(np.zeros(NUM_JOINTS)))
            assert sim.head_height(state) > 0.15

    def test_from_pose_identity(self, sim, rng):
        state = random_state(rng, sim.spec)
        out = sim.reset(init=state)
        q1, v1 = state.pack()
        q2, v2 = out.pack()
        assert np.array_equal(q1, q2) and np.array_equal(v1, v2)

    def test_from_pose_nonfinite_rejected(self, sim):
        state = sim.reset()
        state.joint_pos[0] = np.inf
        with pytest.raises(InvalidStateError):
            sim.reset(init=state)


class TestHeadHeight:
    def test_standing_above_threshold(self, sim):
        assert sim.head_height(sim.reset()) > 0.15

    def test_lying_flat_equals_contact_radius(self, sim):
        state = sim.reset()
        state.root_pos[:] = [0.0, sim.spec.contact_radius]
        state.root_rot = -math.pi / 2  # chain lies along the ground
        assert abs(sim.head_height(state) - sim.spec.contact_radius) < 1e-12
        assert sim.head_height(state) < 0.15

    def test_translated_root(self, sim):
        state = sim.reset()
        state.root_pos[:] = [0.0, 10.0]
        expected = 10.0 + float(sim.spec.link_lengths[0] + sim.spec.link_lengths[1])
        assert abs(sim.head_height(state) - expected) < 1e-12

    def test_matches_independent_fk(self, sim, rng):
        # Hand-rolled forward kinematics of the head chain, written without
        # the shared loop: root -> torso -> head.
        spec = sim.spec
        for _ in range(100):
            state = random_state(rng, spec)
            torso_ang = state.root_rot + math.pi / 2 + state.joint_pos[0]
            nx = state.root_pos[0] + spec.link_lengths[0] * math.cos(torso_ang)
            ny = state.root_pos[1] + spec.link_lengths[0] * math.sin(torso_ang)
            head_ang = torso_ang + state.joint_pos[1]
            hy = ny + spec.link_lengths[1] * math.sin(head_ang)
            assert abs(sim.head_height(state) - hy) < 1e-9
