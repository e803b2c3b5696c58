import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latentskill.descriptors import DESCRIPTOR_DIM, pose_descriptor
from latentskill.embeddings import SyntheticOracle, cosine, default_goal_registry, require_unit
from latentskill.errors import ConfigError, ProviderError
from latentskill.physics import Simulator
from latentskill.rendering import CameraSpec, render


@pytest.fixture
def oracle():
    return SyntheticOracle(dim=64, seed=0)


def random_descriptor(rng):
    state_sim = Simulator()
    s = state_sim.reset()
    s.joint_pos = state_sim.spec.clamp_joints(rng.uniform(-1, 1, 8))
    s.root_vel = rng.uniform(-1, 1, 2)
    s.joint_vel = rng.uniform(-2, 2, 8)
    return pose_descriptor(s)


class TestCosine:
    def test_identity(self, rng):
        x = rng.normal(size=8)
        assert abs(cosine(x, x) - 1.0) < 1e-12

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_antipodal(self, rng):
        x = rng.normal(size=8)
        assert abs(cosine(x, -x) + 1.0) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            cosine(np.ones(3), np.ones(4))

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_symmetric_and_bounded(self, seed):
        r = np.random.default_rng(seed)
        a, b = r.normal(size=6), r.normal(size=6)
        c = cosine(a, b)
        assert -1.0 - 1e-12 <= c <= 1.0 + 1e-12
        assert abs(c - cosine(b, a)) < 1e-12


class TestOracle:
    def test_deterministic(self, oracle, rng):
        d = random_descriptor(rng)
        assert np.array_equal(oracle.encode_descriptor(d), oracle.encode_descriptor(d))
        o2 = SyntheticOracle(dim=64, seed=0)
        assert np.array_equal(oracle.encode_descriptor(d), o2.encode_descriptor(d))

    def test_unit_norm(self, oracle, rng):
        for _ in range(20):
            e = oracle.encode_descriptor(random_descriptor(rng))
            require_unit(e)

    def test_lipschitz_continuity(self, oracle, rng):
        d = random_descriptor(rng)
        d2 = d + 1e-9
        e1, e2 = oracle.encode_descriptor(d), oracle.encode_descriptor(d2)
        assert np.linalg.norm(e1 - e2) < 1e-6

    def test_cosine_preserved_for_centered_descriptors(self, rng):
        center = rng.normal(0, 0.1, DESCRIPTOR_DIM)
        oracle = SyntheticOracle(dim=64, seed=3, center=center)
        for _ in range(10):
            a, b = random_descriptor(rng), random_descriptor(rng)
            got = cosine(oracle.encode_descriptor(a), oracle.encode_descriptor(b))
            expected = cosine(a - center, b - center)
            assert abs(got - expected) < 1e-6

    def test_projection_is_orthonormal(self, oracle):
        gram = oracle.projection.T @ oracle.projection
        np.testing.assert_allclose(gram, np.eye(DESCRIPTOR_DIM), atol=1e-12)

    def test_dim_too_small_rejected(self):
        with pytest.raises(ConfigError):
            SyntheticOracle(dim=8, seed=0, mode="descriptor")


class TestGoals:
    def test_text_equals_goal_image_embedding(self, oracle):
        goals = default_goal_registry()
        e_text = oracle.encode_text("t_pose")
        e_img = oracle.encode_state(goals["t_pose"])
        assert np.array_equal(e_text, e_img)

    def test_distinct_goals_not_identical(self, oracle):
        assert cosine(oracle.encode_text("raise_both_arms"),
                      oracle.encode_text("crouch")) < 1.0 - 1e-6

    def test_unknown_goal_lists_registry(self, oracle):
        with pytest.raises(ProviderError, match="raise_both_arms"):
            oracle.encode_text("do_a_backflip")


class TestFrameMode:
    def test_frame_mode_round(self, sim):
        cam = CameraSpec()
        oracle = SyntheticOracle(dim=64, seed=0, mode="frame",
                                 renderer=lambda s: render(s, [], cam, sim.spec))
        state = sim.reset()
        e = oracle.encode_state(state)
        require_unit(e)
        assert np.array_equal(e, oracle.encode_state(state))

    def test_mode_mismatch_rejected(self, oracle, sim):
        cam = CameraSpec()
        frame = render(sim.reset(), [], cam, sim.spec)
        with pytest.raises(ProviderError):
            oracle.encode_frame(frame)
