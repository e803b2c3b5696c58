"""PPO with GAE: rollout buffer, advantage estimation, clipped-surrogate update.

One :func:`ppo_update` call consumes a full buffer and runs several epochs of
minibatched updates on a diagonal-Gaussian policy (mean from an MLP plus a
learned state-independent log-std) and a value network.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, TrainingDiverged
from .mlp import MlpParams, mlp_backward, mlp_forward
from .optim import AdamState, adam_init, adam_update

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class PpoConfig:
    """Optimization hyperparameters; defaults follow the reference setting,
    :func:`desk` scales the batch sizes down for minutes-long runs."""

    gamma: float = 0.99
    gae_lambda: float = 0.95
    td_lambda: float = 0.95
    clip_threshold: float = 0.2
    learning_rate: float = 2e-5
    samples_per_iteration: int = 131072
    policy_minibatch: int = 16384
    disc_enc_minibatch: int = 4096
    episode_length: int = 300
    update_epochs: int = 4
    value_coef: float = 1.0
    entropy_coef: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0):
            raise ConfigError("gamma must be in (0, 1]")
        if not (0.0 <= self.gae_lambda <= 1.0 and 0.0 <= self.td_lambda <= 1.0):
            raise ConfigError("lambdas must be in [0, 1]")
        if self.clip_threshold <= 0.0:
            raise ConfigError("clip_threshold must be positive")

    @staticmethod
    def desk(**overrides) -> "PpoConfig":
        base = dict(samples_per_iteration=8192, policy_minibatch=1024,
                    disc_enc_minibatch=512, episode_length=300,
                    learning_rate=3e-4)
        base.update(overrides)
        return PpoConfig(**base)


@dataclass
class GaussianPolicyHead:
    """Diagonal Gaussian over actions: mean from ``net``, learned log-std."""

    net: MlpParams
    log_std: np.ndarray

    def __post_init__(self):
        self.log_std = np.clip(np.asarray(self.log_std, dtype=np.float64),
                               LOG_STD_MIN, LOG_STD_MAX)

    @staticmethod
    def create(net: MlpParams, init_log_std: float = -1.0) -> "GaussianPolicyHead":
        return GaussianPolicyHead(net=net, log_std=np.full(net.out_dim, init_log_std))

    def arrays(self) -> list[np.ndarray]:
        return self.net.arrays() + [self.log_std]

    def mean(self, obs: np.ndarray) -> np.ndarray:
        out, _ = mlp_forward(self.net, obs)
        return out

    def sample(self, obs: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Draw actions and their log-probs for a batch of observations."""
        mean, _ = mlp_forward(self.net, obs)
        std = np.exp(self.log_std)
        noise = rng.standard_normal(mean.shape)
        action = mean + std * noise
        return action, self.log_prob_given_mean(mean, action)

    def log_prob_given_mean(self, mean: np.ndarray, action: np.ndarray) -> np.ndarray:
        std = np.exp(self.log_std)
        zscore = (action - mean) / std
        return -0.5 * np.sum(zscore ** 2, axis=-1) - np.sum(self.log_std) \
            - 0.5 * mean.shape[-1] * _LOG_2PI

    def entropy(self) -> float:
        d = self.log_std.shape[0]
        return float(np.sum(self.log_std) + 0.5 * d * (1.0 + _LOG_2PI))


@dataclass
class RolloutBuffer:
    """On-policy transitions at a single decision granularity.

    Records are appended in time order; ``done`` marks episode ends so GAE
    never bootstraps across resets. ``bootstrap_value`` is V(s_T) of the
    final (possibly mid-episode) state per trailing segment.
    """

    capacity: int
    obs: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    values: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    dones: list = field(default_factory=list)
    bootstrap_value: float = 0.0

    def add(self, obs, action, log_prob, value, reward, done) -> None:
        if len(self.obs) >= self.capacity:
            raise ConfigError("rollout buffer full")
        self.obs.append(np.asarray(obs, dtype=np.float64))
        self.actions.append(np.asarray(action, dtype=np.float64))
        self.log_probs.append(float(log_prob))
        self.values.append(float(value))
        self.rewards.append(float(reward))
        self.dones.append(bool(done))

    def __len__(self) -> int:
        return len(self.obs)

    @property
    def full(self) -> bool:
        return len(self.obs) >= self.capacity

    def stacked(self) -> dict[str, np.ndarray]:
        return {
            "obs": np.stack(self.obs),
            "actions": np.stack(self.actions),
            "log_probs": np.asarray(self.log_probs),
            "values": np.asarray(self.values),
            "rewards": np.asarray(self.rewards),
            "dones": np.asarray(self.dones, dtype=bool),
        }


def gae(rewards, values, dones, gamma: float, lam: float,
        bootstrap_value: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation plus TD(lambda) value targets.

    ``values`` are V(s_t) for each step; ``bootstrap_value`` is V(s_{T}) used
    when the final step is not terminal. Returns (advantages, value_targets)
    with targets = advantages + values (TD(lambda) with the same lambda).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    if not (rewards.shape == values.shape == dones.shape):
        raise ConfigError("gae: rewards/values/dones must have equal length")
    n = rewards.shape[0]
    adv = np.zeros(n)
    last_adv = 0.0
    for t in range(n - 1, -1, -1):
        if dones[t]:
            next_value = 0.0
            last_adv = 0.0
        else:
            next_value = bootstrap_value if t == n - 1 else values[t + 1]
        delta = rewards[t] + gamma * next_value - values[t]
        last_adv = delta + gamma * lam * last_adv
        adv[t] = last_adv
    return adv, adv + values


def clipped_surrogate(ratio: np.ndarray, adv: np.ndarray,
                      eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample clipped surrogate min(r*A, clip(r)*A) and its active mask
    (where the unclipped branch carries the gradient)."""
    surr1 = ratio * adv
    surr2 = np.clip(ratio, 1.0 - eps, 1.0 + eps) * adv
    return np.minimum(surr1, surr2), (surr1 <= surr2).astype(np.float64)


def ppo_update(policy: GaussianPolicyHead, value_net: MlpParams,
               buffer: RolloutBuffer, config: PpoConfig,
               policy_opt: AdamState, value_opt: AdamState,
               rng: np.random.Generator) -> dict[str, float]:
    """Clipped-surrogate policy update + value regression over one buffer.

    Advantages are normalized per batch. Returns diagnostics including the
    clip fraction and a KL estimate. Raises TrainingDiverged on non-finite
    losses.
    """
    data = buffer.stacked()
    adv, targets = gae(data["rewards"], data["values"], data["dones"],
                       config.gamma, config.gae_lambda, buffer.bootstrap_value)
    return ppo_update_arrays(policy, value_net, data["obs"], data["actions"],
                             data["log_probs"], adv, targets, config,
                             policy_opt, value_opt, rng)


def ppo_update_arrays(policy: GaussianPolicyHead, value_net: MlpParams,
                      obs_all: np.ndarray, actions_all: np.ndarray,
                      logp_all: np.ndarray, adv: np.ndarray, targets: np.ndarray,
                      config: PpoConfig, policy_opt: AdamState, value_opt: AdamState,
                      rng: np.random.Generator) -> dict[str, float]:
    """PPO update from flat arrays with advantages already estimated
    (multi-env loops compute GAE per environment and concatenate)."""
    adv_std = adv.std()
    adv_norm = (adv - adv.mean()) / (adv_std + 1e-8)
    data = {"obs": obs_all, "actions": actions_all, "log_probs": logp_all}

    n = obs_all.shape[0]
    mb = min(config.policy_minibatch, n)
    eps = config.clip_threshold
    clip_count = 0
    sample_count = 0
    kl_sum = 0.0
    last_policy_loss = 0.0
    last_value_loss = 0.0

    for epoch in range(config.update_epochs):
        order = rng.permutation(n)
        for start in range(0, n, mb):
            idx = order[start:start + mb]
            obs = data["obs"][idx]
            act = data["actions"][idx]
            old_logp = data["log_probs"][idx]
            batch_adv = adv_norm[idx]
            batch_tgt = targets[idx]
            bsz = idx.shape[0]

            mean, cache = mlp_forward(policy.net, obs)
            new_logp = policy.log_prob_given_mean(mean, act)
            ratio = np.exp(new_logp - old_logp)
            contrib, active = clipped_surrogate(ratio, batch_adv, eps)
            policy_loss = -float(np.mean(contrib))
            if not np.isfinite(policy_loss):
                raise TrainingDiverged(
                    f"ppo policy loss non-finite at epoch {epoch}, offset {start}")

            # Gradient flows only where the unclipped branch is active.
            dlogp = -(batch_adv * ratio * active) / bsz
            std2 = np.exp(2.0 * policy.log_std)
            dmean = dlogp[:, None] * (act - mean) / std2
            dlogstd = np.sum(dlogp[:, None] * ((act - mean) ** 2 / std2 - 1.0), axis=0)
            if config.entropy_coef > 0.0:
                dlogstd -= config.entropy_coef  # d(-c*H)/dlogstd = -c per dim
            grads, _ = mlp_backward(policy.net, cache, dmean)
            adam_update(policy.arrays(), grads.arrays() + [dlogstd],
                        policy_opt, config.learning_rate)
            np.clip(policy.log_std, LOG_STD_MIN, LOG_STD_MAX, out=policy.log_std)

            vpred, vcache = mlp_forward(value_net, obs)
            verr = vpred[:, 0] - batch_tgt
            value_loss = float(np.mean(verr ** 2))
            if not np.isfinite(value_loss):
                raise TrainingDiverged(
                    f"ppo value loss non-finite at epoch {epoch}, offset {start}")
            dv = (2.0 * config.value_coef / bsz) * verr[:, None]
            vgrads, _ = mlp_backward(value_net, vcache, dv)
            adam_update(value_net.arrays(), vgrads.arrays(), value_opt,
                        config.learning_rate)

            clip_count += int(np.sum(np.abs(ratio - 1.0) > eps))
            sample_count += bsz
            kl_sum += float(np.sum(old_logp - new_logp))
            last_policy_loss = policy_loss
            last_value_loss = value_loss

    return {
        "policy_loss": last_policy_loss,
        "value_loss": last_value_loss,
        "clip_fraction": clip_count / max(sample_count, 1),
        "kl": kl_sum / max(sample_count, 1),
        "adv_std": float(adv_std),
    }


def make_value_net(in_dim: int, hidden: list[int], rng: np.random.Generator) -> MlpParams:
    from .mlp import init_mlp

    return init_mlp([in_dim] + list(hidden) + [1], rng, activation="relu")


def init_policy(in_dim: int, out_dim: int, hidden: list[int], rng: np.random.Generator,
                init_log_std: float = -1.0, out_scale: float = 0.01) -> GaussianPolicyHead:
    from .mlp import init_mlp

    net = init_mlp([in_dim] + list(hidden) + [out_dim], rng, activation="relu",
                   out_scale=out_scale)
    return GaussianPolicyHead.create(net, init_log_std)


def policy_optimizer(policy: GaussianPolicyHead) -> AdamState:
    return adam_init(policy.arrays())


def value_optimizer(value_net: MlpParams) -> AdamState:
    return adam_init(value_net.arrays())
