"""Per-instruction training of the high-level policy over frozen low-level nets."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .checkpoints import mlp_meta, mlp_to_arrays, policy_to_arrays, save_checkpoint
from .descriptors import DESCRIPTOR_DIM
from .errors import ConfigError, ProviderError, TrainingDiverged
from .highlevel import (
    LatentBank,
    RewardConfig,
    RolloutResult,
    ScheduleConfig,
    rollout_hierarchical,
)
from .metrics import MetricsWriter
from .mlp import MlpParams
from .motions import DatasetManifest
from .physics import Simulator
from .ppo import (
    GaussianPolicyHead,
    PpoConfig,
    gae,
    init_policy,
    make_value_net,
    ppo_update_arrays,
)
from .optim import adam_init
from .train_low import LowLevelNets


@dataclass
class HighLevelConfig:
    hidden: tuple = (128, 64)
    iterations: int = 60
    n_envs: int = 8
    horizon: int = 32  # high-level steps collected per env per iteration
    ppo: PpoConfig = field(default_factory=lambda: PpoConfig.desk(
        samples_per_iteration=2048, policy_minibatch=512, episode_length=90))
    reward: RewardConfig = field(default_factory=RewardConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    early_termination: bool = True
    init_log_std: float = -1.0
    min_iterations: int = 15
    plateau_window: int = 8
    plateau_tol: float = 0.004
    checkpoint_name: str = "high_level.ckpt"


def build_high_policy(latent_dim: int, config: HighLevelConfig,
                      rng: np.random.Generator) -> tuple[GaussianPolicyHead, MlpParams]:
    policy = init_policy(DESCRIPTOR_DIM, latent_dim, list(config.hidden), rng,
                         init_log_std=config.init_log_std, out_scale=0.1)
    value = make_value_net(DESCRIPTOR_DIM, list(config.hidden), rng)
    return policy, value


def train_high_level(instruction: str, low_nets: LowLevelNets,
                     manifest: DatasetManifest, sim: Simulator, provider,
                     config: HighLevelConfig, seed: int,
                     out_dir=None) -> tuple[GaussianPolicyHead, list[dict]]:
    """Alg-style loop: hierarchical rollouts then PPO on the latent policy.

    Stops at the iteration budget or when the moving-average similarity
    plateaus. Writes metrics + checkpoint per iteration when ``out_dir``
    is set.
    """
    f_text = provider.encode_text(instruction)
    rng = np.random.default_rng(seed)
    policy, value_net = build_high_policy(low_nets.latent_dim, config, rng)
    if config.iterations == 0:
        return policy, []
    policy_opt = adam_init(policy.arrays())
    value_opt = adam_init(value_net.arrays())
    bank = LatentBank(low_nets, manifest)

    writer = MetricsWriter(out_dir) if out_dir is not None else None
    log: list[dict] = []
    env_steps_total = 0
    sim_history: list[float] = []
    try:
        for iteration in range(config.iterations):
            buffers: list[RolloutResult] = []
            for _ in range(config.n_envs):
                try:
                    result = rollout_hierarchical(
                        policy, low_nets, sim, provider, f_text, config.schedule,
                        config.reward, config.horizon, bank, rng,
                        value_net=value_net,
                        early_termination=config.early_termination,
                        episode_length=config.ppo.episode_length)
                except ProviderError:
                    continue  # aborted rollout: discard partial buffer
                buffers.append(result)
            if not buffers:
                raise TrainingDiverged("all rollouts aborted by provider failures")

            obs_l, act_l, logp_l, adv_l, tgt_l = [], [], [], [], []
            for res in buffers:
                if len(res.buffer) == 0:
                    continue
                data = res.buffer.stacked()
                adv, tgt = gae(data["rewards"], data["values"], data["dones"],
                               config.ppo.gamma, config.ppo.gae_lambda,
                               res.buffer.bootstrap_value)
                obs_l.append(data["obs"])
                act_l.append(data["actions"])
                logp_l.append(data["log_probs"])
                adv_l.append(adv)
                tgt_l.append(tgt)
            ppo_stats = ppo_update_arrays(
                policy, value_net, np.concatenate(obs_l), np.concatenate(act_l),
                np.concatenate(logp_l), np.concatenate(adv_l), np.concatenate(tgt_l),
                config.ppo, policy_opt, value_opt, rng)

            sims = np.concatenate([res.similarities for res in buffers])
            rewards = np.concatenate([res.rewards for res in buffers])
            resets = sum(res.resets for res in buffers)
            env_steps_total += sum(res.low_steps for res in buffers)
            mean_sim = float(sims.mean())
            sim_history.append(mean_sim)
            stats = {
                "mean_similarity": mean_sim,
                "mean_reward": float(rewards.mean()),
                "resets": resets,
                "env_steps": env_steps_total,
                **{f"ppo_{k}": v for k, v in ppo_stats.items()},
            }
            log.append({"iteration": iteration, **stats})
            if writer is not None:
                writer.write(iteration, stats)
            if out_dir is not None:
                save_high_level_checkpoint(
                    os.path.join(out_dir, config.checkpoint_name), policy, value_net,
                    instruction, low_nets.latent_dim)
            if _plateaued(sim_history, config):
                break
    finally:
        if writer is not None:
            writer.close()
    return policy, log


def _plateaued(history: list[float], config: HighLevelConfig) -> bool:
    w = config.plateau_window
    if len(history) < max(config.min_iterations, 2 * w):
        return False
    recent = np.asarray(history[-w:])
    previous = np.asarray(history[-2 * w:-w])
    return abs(float(recent.mean() - previous.mean())) < config.plateau_tol


def save_high_level_checkpoint(path, policy: GaussianPolicyHead, value_net: MlpParams,
                               instruction: str, latent_dim: int) -> None:
    save_checkpoint(path, {
        "policy": policy_to_arrays(policy),
        "value": mlp_to_arrays(value_net),
    }, meta={
        "kind": "high_level",
        "instruction": instruction,
        "latent_dim": latent_dim,
        "policy": mlp_meta(policy.net),
        "value": mlp_meta(value_net),
    })


def load_high_level_checkpoint(path) -> tuple[GaussianPolicyHead, MlpParams, dict]:
    from .checkpoints import arrays_to_mlp, arrays_to_policy, load_checkpoint
    from .errors import CheckpointError

    groups, meta = load_checkpoint(path)
    if meta.get("kind") != "high_level":
        raise CheckpointError(f"{path}: not a high-level checkpoint")
    return (arrays_to_policy(groups["policy"], meta["policy"]),
            arrays_to_mlp(groups["value"], meta["value"]), meta)
