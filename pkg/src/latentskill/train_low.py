"""Low-level stage: joint training of motion encoder, discriminator, and
latent-conditioned controller.

Per iteration: weighted-sampled clips seed episodes (reference-state init at
the window start), the controller rolls out under the window's latent, the
discriminator scores the collected transitions into GAIL rewards, PPO
updates the controller, and one mixed minibatch updates the discriminator
(ternary loss + gradient penalty) and the encoder (alignment/uniformity).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .bodies import NUM_JOINTS
from .checkpoints import (
    mlp_meta,
    mlp_to_arrays,
    policy_to_arrays,
    save_checkpoint,
)
from .descriptors import DESCRIPTOR_DIM, pose_descriptor
from .errors import ConfigError, SimulationDiverged, TrainingDiverged
from .imitation import (
    ENCODER_WINDOW,
    LowLevelLossWeights,
    discriminator_loss,
    encode_motion,
    encoder_input_dim,
    encoder_losses,
    gail_reward,
    transition_features,
    window_features,
)
from .metrics import MetricsWriter
from .mlp import MlpParams, init_mlp, mlp_forward
from .motions import DatasetManifest, MotionClip
from .optim import adam_init, adam_update
from .physics import Simulator
from .ppo import (
    GaussianPolicyHead,
    PpoConfig,
    gae,
    init_policy,
    make_value_net,
    ppo_update_arrays,
)


@dataclass
class LowLevelConfig:
    latent_dim: int = 16
    hidden: tuple = (256, 256, 128)
    encoder_window: int = ENCODER_WINDOW
    loss_preset: str = "appendix"
    iterations: int = 120
    n_envs: int = 16
    episode_len: int = 48
    ppo: PpoConfig = field(default_factory=PpoConfig.desk)
    disc_lr: float | None = 1e-4
    enc_lr: float | None = None
    negative_source: str = "dataset"  # z' sampling: dataset encodings or unit sphere
    init_log_std: float = -2.0
    fall_height: float = 0.15
    checkpoint_name: str = "low_level.ckpt"

    def __post_init__(self):
        if self.negative_source not in ("dataset", "sphere"):
            raise ConfigError("negative_source must be 'dataset' or 'sphere'")
        if self.latent_dim < 1 or self.encoder_window < 2:
            raise ConfigError("latent_dim >= 1 and encoder_window >= 2 required")


@dataclass
class LowLevelNets:
    encoder: MlpParams
    discriminator: MlpParams
    controller: GaussianPolicyHead
    value: MlpParams
    latent_dim: int
    encoder_window: int


def build_nets(config: LowLevelConfig, rng: np.random.Generator) -> LowLevelNets:
    hidden = list(config.hidden)
    enc_in = encoder_input_dim(config.encoder_window)
    obs_dim = DESCRIPTOR_DIM + config.latent_dim
    encoder = init_mlp([enc_in] + hidden + [config.latent_dim], rng, "relu")
    discriminator = init_mlp([2 * DESCRIPTOR_DIM + config.latent_dim] + hidden + [1],
                             rng, "relu")
    controller = init_policy(obs_dim, NUM_JOINTS, hidden, rng,
                             init_log_std=config.init_log_std, out_scale=0.01)
    value = make_value_net(obs_dim, hidden, rng)
    return LowLevelNets(encoder, discriminator, controller, value,
                        config.latent_dim, config.encoder_window)


class ClipBank:
    """Precomputed per-clip features: frame descriptors and window features."""

    def __init__(self, manifest: DatasetManifest, window: int):
        self.manifest = manifest
        self.window = window
        self.descs: list[np.ndarray] = []
        self.window_feats: list[np.ndarray] = []
        for clip in manifest.clips:
            if clip.n_frames < window:
                raise ConfigError(f"clip {clip.id} shorter than encoder window")
            vel = clip.pose_velocities()
            desc = np.stack([pose_descriptor(clip.frame_state(i, vel[i]))
                             for i in range(clip.n_frames)])
            self.descs.append(desc)
            feats = np.stack([window_features(clip.frames[s:s + window])
                              for s in range(clip.n_frames - window + 1)])
            self.window_feats.append(feats)

    def __len__(self) -> int:
        return len(self.manifest.clips)

    def clip(self, idx: int) -> MotionClip:
        return self.manifest.clips[idx]

    def sample_clip_idx(self, rng: np.random.Generator) -> int:
        return int(rng.choice(len(self), p=self.manifest.weights))

    def random_window_start(self, idx: int, rng: np.random.Generator) -> int:
        return int(rng.integers(0, self.window_feats[idx].shape[0]))

    def window_feat(self, idx: int, start: int) -> np.ndarray:
        return self.window_feats[idx][start]

    def random_real_batch(self, n: int, rng: np.random.Generator
                          ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(transition feats, window feats of the matching window, clip idx)."""
        feats = np.empty((n, 2 * DESCRIPTOR_DIM))
        wins = np.empty((n, self.window_feats[0].shape[1]))
        idxs = np.empty(n, dtype=np.int64)
        for k in range(n):
            ci = self.sample_clip_idx(rng)
            desc = self.descs[ci]
            t = int(rng.integers(0, desc.shape[0] - 1))
            feats[k] = transition_features(desc[t], desc[t + 1])
            start = min(t, self.window_feats[ci].shape[0] - 1)
            wins[k] = self.window_feats[ci][start]
            idxs[k] = ci
        return feats, wins, idxs

    def random_window_batch(self, n: int, rng: np.random.Generator,
                            exclude: np.ndarray | None = None) -> np.ndarray:
        """Window features from random clips; ``exclude[k]`` forbids a clip
        index per row (mismatched-latent sampling)."""
        out = np.empty((n, self.window_feats[0].shape[1]))
        for k in range(n):
            ci = self.sample_clip_idx(rng)
            if exclude is not None and len(self) > 1:
                while ci == exclude[k]:
                    ci = self.sample_clip_idx(rng)
            out[k] = self.window_feats[ci][self.random_window_start(ci, rng)]
        return out

    def positive_pairs(self, n: int, rng: np.random.Generator
                       ) -> tuple[np.ndarray, np.ndarray]:
        a = np.empty((n, self.window_feats[0].shape[1]))
        b = np.empty_like(a)
        for k in range(n):
            ci = self.sample_clip_idx(rng)
            n_starts = self.window_feats[ci].shape[0]
            sa = int(rng.integers(0, n_starts))
            shift = int(rng.integers(1, max(2, self.window // 2 + 1)))
            sb = min(sa + shift, n_starts - 1)
            a[k] = self.window_feats[ci][sa]
            b[k] = self.window_feats[ci][sb]
        return a, b


def controller_obs(desc: np.ndarray, z: np.ndarray) -> np.ndarray:
    return np.concatenate([desc, z], axis=-1)


class _EnvSlot:
    """One rollout environment: current state, conditioning latent, episode
    bookkeeping, and the per-segment records of the running iteration."""

    __slots__ = ("state", "z", "clip_idx", "steps", "records")

    def __init__(self):
        self.state = None
        self.z = None
        self.clip_idx = -1
        self.steps = 0
        self.records = []


def _reset_slot(slot: _EnvSlot, bank: ClipBank, nets: LowLevelNets,
                rng: np.random.Generator) -> None:
    ci = bank.sample_clip_idx(rng)
    start = bank.random_window_start(ci, rng)
    clip = bank.clip(ci)
    vel = clip.pose_velocities()
    slot.state = clip.frame_state(start, vel[start])
    slot.z = encode_motion(nets.encoder, bank.window_feat(ci, start))
    slot.clip_idx = ci
    slot.steps = 0
    slot.records = []


def train_low_level(manifest: DatasetManifest, sim: Simulator,
                    config: LowLevelConfig, seed: int,
                    out_dir=None) -> tuple[LowLevelNets, list[dict]]:
    """Run the adversarial imitation loop; returns the nets and metric log.

    When ``out_dir`` is given, emits ``metrics.jsonl`` plus an atomic
    checkpoint every iteration.
    """
    rng = np.random.default_rng(seed)
    nets = build_nets(config, rng)
    bank = ClipBank(manifest, config.encoder_window)
    weights = LowLevelLossWeights.preset(config.loss_preset)

    policy_opt = adam_init(nets.controller.arrays())
    value_opt = adam_init(nets.value.arrays())
    disc_opt = adam_init(nets.discriminator.arrays())
    enc_opt = adam_init(nets.encoder.arrays())
    disc_lr = config.disc_lr if config.disc_lr is not None else config.ppo.learning_rate
    enc_lr = config.enc_lr if config.enc_lr is not None else config.ppo.learning_rate

    slots = [_EnvSlot() for _ in range(config.n_envs)]
    for slot in slots:
        _reset_slot(slot, bank, nets, rng)

    writer = MetricsWriter(out_dir) if out_dir is not None else None
    log: list[dict] = []
    try:
        for iteration in range(config.iterations):
            stats = _run_iteration(sim, bank, nets, config, weights, slots, rng,
                                   policy_opt, value_opt, disc_opt, enc_opt,
                                   disc_lr, enc_lr)
            log.append({"iteration": iteration, **stats})
            if writer is not None:
                writer.write(iteration, stats)
            if out_dir is not None:
                save_low_level_checkpoint(
                    os.path.join(out_dir, config.checkpoint_name), nets, config)
    finally:
        if writer is not None:
            writer.close()
    return nets, log


def _run_iteration(sim, bank, nets, config, weights, slots, rng,
                   policy_opt, value_opt, disc_opt, enc_opt, disc_lr, enc_lr) -> dict:
    n_envs = len(slots)
    rounds = max(1, config.ppo.samples_per_iteration // n_envs)
    std = np.exp(nets.controller.log_std)
    falls = 0
    divergences = 0
    episodes = 0
    segments: list[dict] = []

    for _ in range(rounds):
        obs = np.stack([controller_obs(pose_descriptor(s.state), s.z) for s in slots])
        means, _ = mlp_forward(nets.controller.net, obs)
        noise = rng.standard_normal(means.shape)
        actions = means + std * noise
        logps = nets.controller.log_prob_given_mean(means, actions)
        values, _ = mlp_forward(nets.value, obs)

        for e, slot in enumerate(slots):
            desc_before = obs[e, :DESCRIPTOR_DIM]
            try:
                new_state, _ = sim.step(slot.state, _as_action(actions[e]))
            except SimulationDiverged:
                divergences += 1
                _reset_slot(slot, bank, nets, rng)
                continue
            desc_after = pose_descriptor(new_state)
            fell = sim.head_height(new_state) < config.fall_height
            slot.steps += 1
            timeout = slot.steps >= config.episode_len
            slot.records.append({
                "obs": obs[e], "action": actions[e], "logp": float(logps[e]),
                "value": float(values[e, 0]),
                "trans": transition_features(desc_before, desc_after),
                "z": slot.z, "done": fell,
            })
            slot.state = new_state
            if fell or timeout:
                episodes += 1
                falls += int(fell)
                _finalize_segment(slot, nets, terminal=fell, segments=segments)
                _reset_slot(slot, bank, nets, rng)

    # Close out all running segments with a bootstrap value.
    for slot in slots:
        if slot.records:
            _finalize_segment(slot, nets, terminal=False, segments=segments)

    if not segments:
        raise TrainingDiverged("no rollout data collected (all episodes diverged)")

    # GAIL rewards in one discriminator pass, then per-segment GAE.
    trans = np.concatenate([seg["trans"] for seg in segments])
    zs = np.concatenate([seg["z"] for seg in segments])
    rewards = gail_reward(nets.discriminator, trans, zs)
    mean_reward = float(rewards.mean())

    obs_list, act_list, logp_list, adv_list, tgt_list = [], [], [], [], []
    offset = 0
    for seg in segments:
        n = seg["obs"].shape[0]
        seg_rew = rewards[offset:offset + n]
        offset += n
        adv, tgt = gae(seg_rew, seg["values"], seg["dones"], config.ppo.gamma,
                       config.ppo.gae_lambda, seg["bootstrap"])
        obs_list.append(seg["obs"])
        act_list.append(seg["actions"])
        logp_list.append(seg["logps"])
        adv_list.append(adv)
        tgt_list.append(tgt)

    ppo_stats = ppo_update_arrays(
        nets.controller, nets.value,
        np.concatenate(obs_list), np.concatenate(act_list),
        np.concatenate(logp_list), np.concatenate(adv_list),
        np.concatenate(tgt_list), config.ppo, policy_opt, value_opt, rng)

    # Discriminator update: real / policy / mismatched-latent minibatch.
    b = config.ppo.disc_enc_minibatch
    real_feats, real_wins, real_idx = bank.random_real_batch(b, rng)
    real_z = encode_motion(nets.encoder, real_wins)
    pol_pick = rng.integers(0, trans.shape[0], size=min(b, trans.shape[0]))
    if config.negative_source == "dataset":
        mism_wins = bank.random_window_batch(b, rng, exclude=real_idx)
        mism_z = encode_motion(nets.encoder, mism_wins)
    else:
        raw = rng.standard_normal((b, nets.latent_dim))
        mism_z = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    disc_loss_val, disc_grads, disc_stats = discriminator_loss(
        nets.discriminator, real_feats, real_z, trans[pol_pick], zs[pol_pick],
        mism_z, weights.gp_weight)
    if not np.isfinite(disc_loss_val):
        raise TrainingDiverged("discriminator loss non-finite")
    adam_update(nets.discriminator.arrays(), disc_grads.arrays(), disc_opt, disc_lr)

    # Encoder update: alignment/uniformity on overlapping window pairs.
    pairs_a, pairs_b = bank.positive_pairs(max(2, b // 2), rng)
    align, uniform, enc_grads = encoder_losses(nets.encoder, pairs_a, pairs_b, weights)
    if not (np.isfinite(align) and np.isfinite(uniform)):
        raise TrainingDiverged("encoder loss non-finite")
    adam_update(nets.encoder.arrays(), enc_grads.arrays(), enc_opt, enc_lr)

    return {
        "disc_loss": disc_loss_val,
        "align": align,
        "uniform": uniform,
        "mean_reward": mean_reward,
        "episodes": episodes,
        "falls": falls,
        "divergences": divergences,
        "gp": disc_stats.get("gp", 0.0),
        "clamped": disc_stats["clamped"],
        **{f"ppo_{k}": v for k, v in ppo_stats.items()},
    }


def _finalize_segment(slot: _EnvSlot, nets: LowLevelNets, terminal: bool,
                      segments: list[dict]) -> None:
    if not slot.records:
        return
    recs = slot.records
    if terminal:
        bootstrap = 0.0
    else:
        next_obs = controller_obs(pose_descriptor(slot.state), slot.z)
        v, _ = mlp_forward(nets.value, next_obs)
        bootstrap = float(v[0])
    segments.append({
        "obs": np.stack([r["obs"] for r in recs]),
        "actions": np.stack([r["action"] for r in recs]),
        "logps": np.asarray([r["logp"] for r in recs]),
        "values": np.asarray([r["value"] for r in recs]),
        "trans": np.stack([r["trans"] for r in recs]),
        "z": np.stack([r["z"] for r in recs]),
        "dones": np.asarray([r["done"] for r in recs], dtype=bool),
        "bootstrap": bootstrap,
    })
    slot.records = []


def _as_action(targets: np.ndarray):
    from .simstate import Action

    return Action(targets)


def evaluate_imitation(nets: LowLevelNets, manifest: DatasetManifest, sim: Simulator,
                       n_frames: int = 30) -> dict:
    """Tracking quality per clip: condition on the clip's first-window latent,
    start at the clip's first frame, roll the mean policy, and compare joints
    against the reference frames. Also reports the mean GAIL reward of those
    rollouts."""
    bank = ClipBank(manifest, nets.encoder_window)
    per_clip = {}
    all_rewards = []
    all_errors = []
    for ci, clip in enumerate(manifest.clips):
        z = encode_motion(nets.encoder, bank.window_feat(ci, 0))
        vel = clip.pose_velocities()
        state = clip.frame_state(0, vel[0])
        horizon = min(n_frames, clip.n_frames - 1)
        errors = []
        feats = []
        for t in range(horizon):
            desc = pose_descriptor(state)
            mean, _ = mlp_forward(nets.controller.net, controller_obs(desc, z))
            try:
                state, _ = sim.step(state, _as_action(mean))
            except SimulationDiverged:
                errors.append(np.pi)
                break
            feats.append(transition_features(desc, pose_descriptor(state)))
            ref = clip.frames[t + 1, 3:]
            errors.append(float(np.mean(np.abs(state.joint_pos - ref))))
        rewards = gail_reward(nets.discriminator, np.stack(feats),
                              np.tile(z, (len(feats), 1))) if feats else np.zeros(1)
        per_clip[clip.id] = {
            "pose_error": float(np.mean(errors)),
            "gail_reward": float(np.mean(rewards)),
        }
        all_rewards.append(float(np.mean(rewards)))
        all_errors.append(float(np.mean(errors)))
    return {
        "per_clip": per_clip,
        "mean_pose_error": float(np.mean(all_errors)),
        "mean_gail_reward": float(np.mean(all_rewards)),
    }


def save_low_level_checkpoint(path, nets: LowLevelNets, config: LowLevelConfig) -> None:
    save_checkpoint(path, {
        "encoder": mlp_to_arrays(nets.encoder),
        "discriminator": mlp_to_arrays(nets.discriminator),
        "controller": policy_to_arrays(nets.controller),
        "value": mlp_to_arrays(nets.value),
    }, meta={
        "kind": "low_level",
        "latent_dim": nets.latent_dim,
        "encoder_window": nets.encoder_window,
        "encoder": mlp_meta(nets.encoder),
        "discriminator": mlp_meta(nets.discriminator),
        "controller": mlp_meta(nets.controller.net),
        "value": mlp_meta(nets.value),
    })


def load_low_level_checkpoint(path) -> LowLevelNets:
    from .checkpoints import arrays_to_mlp, arrays_to_policy, load_checkpoint
    from .errors import CheckpointError

    groups, meta = load_checkpoint(path)
    if meta.get("kind") != "low_level":
        raise CheckpointError(f"{path}: not a low-level checkpoint")
    return LowLevelNets(
        encoder=arrays_to_mlp(groups["encoder"], meta["encoder"]),
        discriminator=arrays_to_mlp(groups["discriminator"], meta["discriminator"]),
        controller=arrays_to_policy(groups["controller"], meta["controller"]),
        value=arrays_to_mlp(groups["value"], meta["value"]),
        latent_dim=int(meta["latent_dim"]),
        encoder_window=int(meta["encoder_window"]),
    )
