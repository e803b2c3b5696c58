import math

import numpy as np
import pytest

from latentskill.errors import ConfigError
from latentskill.imitation import (
    LowLevelLossWeights,
    alignment_loss,
    discriminator_loss,
    discriminator_prob,
    encode_motion,
    encoder_losses,
    gail_reward,
    uniformity_loss,
    window_features,
)
from latentskill.mlp import MlpParams, init_mlp
from latentskill.optim import adam_init, adam_update

LN2 = math.log(2.0)


def constant_half_disc(feat_dim=4, latent_dim=2):
    """Zero-weight scalar net: logit 0 everywhere, D = 0.5, zero input grads."""
    d = feat_dim + latent_dim
    return MlpParams([d, 1], [np.zeros((1, d))], [np.zeros(1)], "relu", "none")


class TestDiscriminatorLoss:
    def test_constant_half_gives_3_ln2(self, rng):
        disc = constant_half_disc()
        feats = rng.normal(size=(6, 4))
        z = rng.normal(size=(6, 2))
        loss, grads, stats = discriminator_loss(disc, feats, z, feats, z, z, gp_weight=5.0)
        assert abs(loss - 3.0 * LN2) < 1e-9
        assert stats["gp"] == 0.0

    def test_saturated_discriminator_hits_clamp(self):
        # Linear head reading only the latent coordinate: real z=+1 -> D~1,
        # fakes z=-1 -> D~0 (pre-clamp), so every term sits at the clamp.
        disc = MlpParams([3, 1], [np.array([[0.0, 0.0, 50.0]])], [np.zeros(1)],
                         "relu", "none")
        feats = np.zeros((4, 2))
        real_z = np.ones((4, 1))
        fake_z = -np.ones((4, 1))
        loss, _, stats = discriminator_loss(disc, feats, real_z, feats, fake_z,
                                            fake_z, gp_weight=0.0)
        expected = 3.0 * (-math.log(1.0 - 1e-4))
        assert abs(loss - expected) < 1e-12
        assert stats["clamped"] == 12

    def test_gradient_penalty_closed_form_linear(self):
        w = np.array([[0.7, -1.2, 0.4, 0.9, -0.3]])  # 3 feat dims + 2 latent dims
        disc = MlpParams([5, 1], [w.copy()], [np.zeros(1)], "relu", "none")
        feats = np.random.default_rng(0).normal(size=(5, 3))
        z = np.random.default_rng(1).normal(size=(5, 2))
        w_gp = 5.0
        loss, _, stats = discriminator_loss(disc, feats, z, feats, z, z, w_gp)
        assert abs(stats["gp"] - float(np.sum(w[0, :3] ** 2))) < 1e-12
        loss0, _, _ = discriminator_loss(disc, feats, z, feats, z, z, 0.0)
        assert abs(loss - (loss0 + w_gp * stats["gp"])) < 1e-12

    def test_grads_match_finite_differences(self, rng):
        disc = init_mlp([6, 5, 1], rng, "tanh", "none")
        real_f = rng.normal(size=(4, 4))
        real_z = rng.normal(size=(4, 2))
        pol_f = rng.normal(size=(4, 4))
        pol_z = rng.normal(size=(4, 2))
        mism_z = rng.normal(size=(4, 2))
        w_gp = 2.5

        _, grads, _ = discriminator_loss(disc, real_f, real_z, pol_f, pol_z, mism_z, w_gp)

        h = 1e-5
        for arr, g in zip(disc.arrays(), grads.arrays()):
            flat, gflat = arr.ravel(), g.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                lp, _, _ = discriminator_loss(disc, real_f, real_z, pol_f, pol_z,
                                              mism_z, w_gp)
                flat[i] = orig - h
                lm, _, _ = discriminator_loss(disc, real_f, real_z, pol_f, pol_z,
                                              mism_z, w_gp)
                flat[i] = orig
                fd = (lp - lm) / (2 * h)
                assert abs(gflat[i] - fd) / max(abs(fd), 1e-3) < 1e-4

    def test_loss_decreases_under_descent(self, rng):
        disc = init_mlp([6, 16, 1], rng, "relu", "none")
        real_f = rng.normal(size=(16, 4)) + 0.5
        pol_f = rng.normal(size=(16, 4)) - 0.5
        real_z = rng.normal(size=(16, 2))
        pol_z = rng.normal(size=(16, 2))
        mism_z = rng.normal(size=(16, 2))
        prev = None
        for step in range(50):
            loss, grads, _ = discriminator_loss(disc, real_f, real_z, pol_f, pol_z,
                                                mism_z, 5.0)
            assert np.isfinite(loss)
            if prev is not None:
                assert loss < prev + 1e-6, f"loss rose at step {step}"
            prev = loss
            for arr, g in zip(disc.arrays(), grads.arrays()):
                arr -= 1e-3 * g


class TestGailReward:
    def test_half_prob_gives_ln2(self, rng):
        disc = constant_half_disc()
        r = gail_reward(disc, rng.normal(size=(3, 4)), rng.normal(size=(3, 2)))
        np.testing.assert_allclose(r, LN2, atol=1e-12)

    def test_clamp_bounds(self):
        lo = -math.log(1.0 - 1e-4)
        hi = -math.log(1e-4)
        disc = MlpParams([3, 1], [np.array([[0.0, 0.0, 60.0]])], [np.zeros(1)],
                         "relu", "none")
        feats = np.zeros((1, 2))
        r_hi = gail_reward(disc, feats, np.ones((1, 1)))
        r_lo = gail_reward(disc, feats, -np.ones((1, 1)))
        assert abs(r_hi[0] - hi) < 1e-12
        assert abs(r_lo[0] - lo) < 1e-12
        assert abs(hi - 9.2103) < 1e-4
        assert abs(lo - 1.0001e-4) < 1e-8

    def test_monotone_in_logit(self, rng):
        disc = MlpParams([3, 1], [np.array([[0.0, 0.0, 1.0]])], [np.zeros(1)],
                         "relu", "none")
        feats = np.zeros((5, 2))
        zs = np.linspace(-3, 3, 5)[:, None]
        r = gail_reward(disc, feats, zs)
        assert np.all(np.diff(r) > 0)


class TestEncoder:
    def test_encode_motion_unit_and_deterministic(self, rng):
        enc = init_mlp([38, 16, 4], rng)
        w = rng.normal(size=38)
        z1 = encode_motion(enc, w)
        z2 = encode_motion(enc, w)
        assert np.array_equal(z1, z2)
        assert abs(np.linalg.norm(z1) - 1.0) < 1e-6

    def test_zero_weight_encoder_yields_normalized_bias(self):
        b = np.array([3.0, 4.0])
        enc = MlpParams([5, 2], [np.zeros((2, 5))], [b.copy()], "relu", "none")
        z = encode_motion(enc, np.ones(5))
        np.testing.assert_allclose(z, b / 5.0, atol=1e-12)

    def test_wrong_window_length_rejected(self, rng):
        enc = init_mlp([38, 8, 4], rng)
        with pytest.raises(ConfigError):
            encode_motion(enc, np.zeros(37))

    def test_identical_pairs_zero_alignment(self, rng):
        z = rng.normal(size=(6, 4))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        assert alignment_loss(z, z) == 0.0

    def test_antipodal_uniformity_value(self):
        z = np.array([[1.0, 0.0], [-1.0, 0.0]])
        # every off-diagonal pair has squared distance 4 -> log(exp(-8))
        assert abs(uniformity_loss(z, t=2.0) - (-8.0)) < 1e-12

    def test_empty_batch_rejected(self, rng):
        enc = init_mlp([38, 8, 4], rng)
        with pytest.raises(ConfigError):
            encoder_losses(enc, np.empty((0, 38)), np.empty((0, 38)),
                           LowLevelLossWeights())

    def test_encoder_grads_match_finite_differences(self, rng):
        enc = init_mlp([10, 6, 3], rng, "tanh")
        wa = rng.normal(size=(4, 10))
        wb = rng.normal(size=(4, 10))
        weights = LowLevelLossWeights(align_weight=0.7, uniform_weight=0.3)

        def total(p):
            a, u, _ = encoder_losses(p, wa, wb, weights)
            return weights.align_weight * a + weights.uniform_weight * u

        _, _, grads = encoder_losses(enc, wa, wb, weights)
        h = 1e-5
        for arr, g in zip(enc.arrays(), grads.arrays()):
            flat, gflat = arr.ravel(), g.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                lp = total(enc)
                flat[i] = orig - h
                lm = total(enc)
                flat[i] = orig
                fd = (lp - lm) / (2 * h)
                assert abs(gflat[i] - fd) / max(abs(fd), 1e-3) < 1e-4


class TestWindowFeatures:
    def test_shape_and_translation_invariance(self, rng):
        frames = rng.normal(size=(10, 11))
        f1 = window_features(frames)
        shifted = frames.copy()
        shifted[:, 0] += 5.0  # root x must not matter
        f2 = window_features(shifted)
        assert f1.shape == (190,)
        assert np.array_equal(f1, f2)

    def test_loss_preset_values(self):
        main = LowLevelLossWeights.preset("main-text")
        app = LowLevelLossWeights.preset("appendix")
        assert (main.align_weight, main.uniform_weight, main.gp_weight) == (0.1, 0.05, 5.0)
        assert (app.align_weight, app.uniform_weight, app.gp_weight) == (1.0, 0.5, 5.0)
        with pytest.raises(ConfigError):
            LowLevelLossWeights.preset("nope")
