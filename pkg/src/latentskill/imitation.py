"""Adversarial imitation primitives: motion encoder, ternary discriminator,
GAIL reward.

The discriminator scores transitions (s, s') conditioned on a latent code z
and is trained to separate three sources: dataset transitions with their own
(stop-gradient) encoding, policy transitions with the latent they followed,
and dataset transitions paired with a mismatched latent. Its input-gradient
norm on the transition part is penalized for stability. The encoder maps
fixed-length pose windows onto the unit sphere, shaped by alignment and
uniformity losses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bodies import NUM_JOINTS
from .descriptors import DESCRIPTOR_DIM, pose_descriptor
from .errors import ConfigError
from .mlp import (
    MlpGrads,
    MlpParams,
    gradient_penalty,
    l2_normalize,
    l2_normalize_backward,
    mlp_backward,
    mlp_forward,
    zero_grads,
)

ENCODER_WINDOW = 10
WINDOW_FRAME_DIM = 3 + 2 * NUM_JOINTS  # root_y, sin/cos rot, sin/cos joints
TRANSITION_DIM = 2 * DESCRIPTOR_DIM
PROB_CLAMP = 1e-4
UNIFORMITY_TEMPERATURE = 2.0


@dataclass
class LowLevelLossWeights:
    """Encoder/discriminator regularizer weights. Two published presets
    disagree; both ship (see ``preset``)."""

    align_weight: float = 1.0
    uniform_weight: float = 0.5
    gp_weight: float = 5.0

    def __post_init__(self):
        if min(self.align_weight, self.uniform_weight, self.gp_weight) < 0:
            raise ConfigError("loss weights must be nonnegative")

    @staticmethod
    def preset(name: str) -> "LowLevelLossWeights":
        if name == "appendix":
            return LowLevelLossWeights(1.0, 0.5, 5.0)
        if name == "main-text":
            return LowLevelLossWeights(0.1, 0.05, 5.0)
        raise ConfigError(f"unknown loss-weight preset {name!r} "
                          "(expected 'appendix' or 'main-text')")


def window_features(frames: np.ndarray) -> np.ndarray:
    """Flatten a (window, 11) pose block into the encoder input layout."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2 or frames.shape[1] != 3 + NUM_JOINTS:
        raise ConfigError(f"window must be (W, {3 + NUM_JOINTS})")
    cols = np.concatenate([
        frames[:, 1:2],              # root height
        np.sin(frames[:, 2:3]), np.cos(frames[:, 2:3]),
        np.sin(frames[:, 3:]), np.cos(frames[:, 3:]),
    ], axis=1)
    return cols.ravel()


def encoder_input_dim(window: int = ENCODER_WINDOW) -> int:
    return window * WINDOW_FRAME_DIM


def encode_motion(encoder: MlpParams, window_feats: np.ndarray) -> np.ndarray:
    """Unit-norm latent for one window (or a batch of windows)."""
    feats = np.asarray(window_feats, dtype=np.float64)
    if feats.shape[-1] != encoder.in_dim:
        raise ConfigError(
            f"window feature dim {feats.shape[-1]} != encoder input {encoder.in_dim}")
    out, _ = mlp_forward(encoder, feats)
    z, _ = l2_normalize(out)
    return z


def transition_features(desc_s: np.ndarray, desc_s_next: np.ndarray) -> np.ndarray:
    return np.concatenate([desc_s, desc_s_next], axis=-1)


def transition_features_from_states(s, s_next) -> np.ndarray:
    return transition_features(pose_descriptor(s), pose_descriptor(s_next))


def _disc_prob(disc: MlpParams, feats: np.ndarray, z: np.ndarray):
    x = np.concatenate([feats, z], axis=-1)
    logit, cache = mlp_forward(disc, x)
    sig = 1.0 / (1.0 + np.exp(-logit[..., 0]))
    clamped = np.clip(sig, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return sig, clamped, cache


def discriminator_prob(disc: MlpParams, feats: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Clamped classifier probability D(s, s' | z)."""
    _, clamped, _ = _disc_prob(disc, feats, z)
    return clamped


def gail_reward(disc: MlpParams, feats: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Imitation reward -log(1 - D), bounded by the probability clamp."""
    return -np.log(1.0 - discriminator_prob(disc, feats, z))


def discriminator_loss(disc: MlpParams,
                       real_feats: np.ndarray, real_z: np.ndarray,
                       policy_feats: np.ndarray, policy_z: np.ndarray,
                       mismatch_z: np.ndarray,
                       gp_weight: float) -> tuple[float, MlpGrads, dict]:
    """Ternary adversarial loss with input-gradient penalty at real samples.

    loss = -[mean log D(real|z_hat) + mean log(1-D(policy|z))
             + mean log(1-D(real|z'))] + gp_weight * GP(real inputs)

    The latent arrays are plain values: encoder gradients never flow here
    (the real latents are stop-gradient encodings by construction). The GP
    penalizes only the transition part of the input, not the latent part.
    Returns (loss, discriminator grads, stats).
    """
    grads = zero_grads(disc)
    stats = {"clamped": 0}
    total = 0.0

    def bce_term(feats, z, is_real):
        nonlocal total
        sig, clamped, cache = _disc_prob(disc, feats, z)
        n = sig.shape[0]
        clamp_hits = int(np.sum(sig != clamped))
        stats["clamped"] += clamp_hits
        live = (sig == clamped).astype(np.float64)
        if is_real:
            total_term = -float(np.mean(np.log(clamped)))
            dlogit = -(1.0 - sig) * live / n
        else:
            total_term = -float(np.mean(np.log(1.0 - clamped)))
            dlogit = sig * live / n
        total += total_term
        g, _ = mlp_backward(disc, cache, dlogit[:, None])
        grads.add_scaled(g, 1.0)
        return cache

    real_cache = bce_term(real_feats, real_z, is_real=True)
    bce_term(policy_feats, policy_z, is_real=False)
    bce_term(real_feats, mismatch_z, is_real=False)

    if gp_weight > 0.0:
        gp_value, gp_grads = gradient_penalty(disc, real_cache,
                                              input_slice=slice(0, real_feats.shape[1]))
        total += gp_weight * gp_value
        grads.add_scaled(gp_grads, gp_weight)
        stats["gp"] = gp_value
    stats["loss"] = total
    return total, grads, stats


def alignment_loss(z_a: np.ndarray, z_b: np.ndarray) -> float:
    """Mean squared distance between positive-pair embeddings."""
    return float(np.mean(np.sum((z_a - z_b) ** 2, axis=1)))


def uniformity_loss(z: np.ndarray, t: float = UNIFORMITY_TEMPERATURE) -> float:
    """log mean_{i != j} exp(-t ||z_i - z_j||^2) over the batch."""
    d2 = np.sum((z[:, None, :] - z[None, :, :]) ** 2, axis=2)
    n = z.shape[0]
    mask = ~np.eye(n, dtype=bool)
    return float(np.log(np.mean(np.exp(-t * d2[mask]))))


def encoder_losses(encoder: MlpParams, windows_a: np.ndarray, windows_b: np.ndarray,
                   weights: LowLevelLossWeights) -> tuple[float, float, MlpGrads]:
    """Alignment + uniformity over a batch of positive window pairs.

    ``windows_a[i]`` and ``windows_b[i]`` are overlapping windows of the same
    clip. Uniformity is computed over all 2N embeddings. Returns
    (align_loss, uniform_loss, encoder grads of the weighted sum).
    """
    windows_a = np.atleast_2d(np.asarray(windows_a, dtype=np.float64))
    windows_b = np.atleast_2d(np.asarray(windows_b, dtype=np.float64))
    if windows_a.shape[0] == 0 or windows_a.shape != windows_b.shape:
        raise ConfigError("encoder_losses needs a non-empty batch of positive pairs")
    n = windows_a.shape[0]
    stacked = np.concatenate([windows_a, windows_b], axis=0)
    raw, cache = mlp_forward(encoder, stacked)
    z, norms = l2_normalize(raw)
    z_a, z_b = z[:n], z[n:]

    align = alignment_loss(z_a, z_b)
    d_align = np.zeros_like(z)
    d_align[:n] = 2.0 * (z_a - z_b) / n
    d_align[n:] = -d_align[:n]

    t = UNIFORMITY_TEMPERATURE
    m = 2 * n
    diff = z[:, None, :] - z[None, :, :]
    d2 = np.sum(diff ** 2, axis=2)
    e = np.exp(-t * d2)
    np.fill_diagonal(e, 0.0)
    s = float(e.sum())
    uniform = float(np.log(s / (m * (m - 1)))) if m > 1 else 0.0
    # dU/dz_i = -(4t/S) sum_j e_ij (z_i - z_j)
    row = e.sum(axis=1)
    d_uniform = -(4.0 * t / s) * (z * row[:, None] - e @ z)

    dz = weights.align_weight * d_align + weights.uniform_weight * d_uniform
    d_raw = l2_normalize_backward(z, norms, dz)
    grads, _ = mlp_backward(encoder, cache, d_raw)
    return align, uniform, grads
