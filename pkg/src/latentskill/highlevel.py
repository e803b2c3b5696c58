"""Instruction-conditioned high-level stage.

The high-level policy emits unit-norm latent codes at 6 Hz; each code is held
for five 30 Hz low-level control steps. Per low step the frame embedding is
compared against the instruction embedding (cosine), combined with a
latent-alignment term, and fed to an early-termination state machine that
resets the agent when the head drops or the similarity keeps falling.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .descriptors import DESCRIPTOR_DIM, pose_descriptor
from .embeddings import cosine
from .errors import ConfigError, ProviderError, SimulationDiverged
from .imitation import encode_motion
from .mlp import mlp_forward
from .motions import DatasetManifest
from .physics import Simulator
from .ppo import GaussianPolicyHead, RolloutBuffer
from .simstate import SimState
from .train_low import ClipBank, LowLevelNets, controller_obs, _as_action

REWARD_MODES = ("cosine", "avgpool", "similarity_only", "velocity_bonus")


@dataclass(frozen=True)
class RewardConfig:
    """Composite reward weights and variant selection."""

    omega_c: float = 1.0
    omega_s: float = 0.5
    mode: str = "cosine"
    avgpool_window: int = 4
    velocity_target: float = 1.0
    velocity_weight: float = 0.5

    def __post_init__(self):
        if self.omega_c < 0 or self.omega_s < 0 or self.velocity_weight < 0:
            raise ConfigError("reward weights must be nonnegative")
        if self.mode not in REWARD_MODES:
            raise ConfigError(f"unknown reward mode {self.mode!r}")
        if self.avgpool_window < 1:
            raise ConfigError("avgpool window must be >= 1")


def _check_unit(v: np.ndarray, name: str) -> None:
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > 1e-4:
        raise ConfigError(f"{name} must be unit-norm (got {norm:.6f})")


def pooled_image_embedding(history: list[np.ndarray], window: int) -> np.ndarray:
    """Re-normalized mean of the last ``window`` frame embeddings."""
    if not history:
        raise ConfigError("avgpool needs at least one frame embedding")
    recent = history[-window:]
    mean = np.mean(recent, axis=0)
    norm = max(float(np.linalg.norm(mean)), 1e-12)
    return mean / norm


def high_reward(f_img: np.ndarray, f_text: np.ndarray, z: np.ndarray,
                z_hat: np.ndarray, cfg: RewardConfig,
                frame_history: list[np.ndarray] | None = None,
                root_speed: float | None = None) -> tuple[float, float]:
    """Composite reward; returns (reward, similarity term used).

    cosine mode:      w_c * cos(f_img, f_text) + w_s * exp(-4 ||z - z_hat||)
    avgpool:          same, with f_img replaced by the pooled recent frames
    similarity_only:  w_c * cos only
    velocity_bonus:   cosine mode + w_v * exp(-(|v_root| - target)^2)
    """
    _check_unit(f_img, "f_img")
    _check_unit(f_text, "f_text")
    _check_unit(z, "z")
    _check_unit(z_hat, "z_hat")
    img = f_img
    if cfg.mode == "avgpool":
        hist = list(frame_history) if frame_history else []
        if not hist or not np.array_equal(hist[-1], f_img):
            hist.append(f_img)
        img = pooled_image_embedding(hist, cfg.avgpool_window)
    sim_term = cosine(img, f_text)
    if cfg.mode == "similarity_only":
        return cfg.omega_c * sim_term, sim_term
    align = float(np.exp(-4.0 * np.linalg.norm(z - z_hat)))
    reward = cfg.omega_c * sim_term + cfg.omega_s * align
    if cfg.mode == "velocity_bonus":
        if root_speed is None:
            raise ConfigError("velocity_bonus mode needs root_speed")
        reward += cfg.velocity_weight * float(
            np.exp(-((root_speed - cfg.velocity_target) ** 2)))
    return reward, sim_term


@dataclass(frozen=True)
class ScheduleConfig:
    llc_steps_per_high: int = 5
    high_hz: float = 6.0
    low_hz: float = 30.0

    def __post_init__(self):
        if abs(self.low_hz - self.high_hz * self.llc_steps_per_high) > 1e-9:
            raise ConfigError("schedule must satisfy low_hz = high_hz * llc_steps_per_high")

    @property
    def low_dt(self) -> float:
        return 1.0 / self.low_hz


HEAD_HEIGHT_LIMIT = 0.15
DECREASE_LIMIT = 8
RESET_PROBABILITY = 0.8

CONTINUE = "continue"
RESET_AGENT = "reset_agent"


@dataclass(frozen=True)
class TerminationState:
    """Consecutive-similarity-decrease counter plus the last similarity."""

    p: int = 0
    last_similarity: float | None = None


def termination_update(ts: TerminationState, similarity: float, head_h: float,
                       rng: np.random.Generator,
                       reset_counter_on_increase: bool = False,
                       ) -> tuple[str, TerminationState]:
    """One step of the early-termination state machine.

    Head below 15 cm resets deterministically. A similarity lower than the
    previous step increments the counter; at 8 the counter zeroes and the
    agent resets with probability 0.8 (seeded draw). A non-decreasing step
    leaves the counter unchanged unless ``reset_counter_on_increase``.
    """
    if head_h < HEAD_HEIGHT_LIMIT:
        return RESET_AGENT, TerminationState()
    p = ts.p
    if ts.last_similarity is not None and similarity < ts.last_similarity:
        p += 1
        if p >= DECREASE_LIMIT:
            p = 0
            if rng.random() < RESET_PROBABILITY:
                return RESET_AGENT, TerminationState()
    elif reset_counter_on_increase:
        p = 0
    return CONTINUE, TerminationState(p=p, last_similarity=similarity)


class LatentBank:
    """The latent set Z: encodings of every dataset window under the frozen
    encoder; z_hat samples are drawn uniformly from it."""

    def __init__(self, nets: LowLevelNets, manifest: DatasetManifest):
        bank = ClipBank(manifest, nets.encoder_window)
        feats = np.concatenate([w for w in bank.window_feats], axis=0)
        self.latents = encode_motion(nets.encoder, feats)

    def __len__(self) -> int:
        return self.latents.shape[0]

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.latents[int(rng.integers(0, len(self)))].copy()


def normalize_latent(u: np.ndarray) -> np.ndarray:
    norm = max(float(np.linalg.norm(u)), 1e-12)
    return u / norm


@dataclass
class RolloutResult:
    buffer: RolloutBuffer
    similarities: list[float]
    rewards: list[float]
    resets: int
    low_steps: int
    final_state: SimState
    states: list[SimState] = field(default_factory=list)


def _encode_with_retry(provider, state: SimState) -> np.ndarray:
    try:
        return provider.encode_state(state)
    except ProviderError:
        return provider.encode_state(state)  # one retry, then abort the rollout


def rollout_hierarchical(pi_h: GaussianPolicyHead, low_nets: LowLevelNets,
                         sim: Simulator, provider, f_text: np.ndarray,
                         schedule: ScheduleConfig, reward_cfg: RewardConfig,
                         horizon: int, latent_bank: LatentBank,
                         rng: np.random.Generator,
                         value_net=None,
                         early_termination: bool = True,
                         deterministic: bool = False,
                         keep_states: bool = False,
                         episode_length: int | None = None,
                         start_state: SimState | None = None) -> RolloutResult:
    """Collect ``horizon`` high-level steps from a single environment.

    The first step of each episode executes a latent sampled from the bank
    (it seeds the behavior and is not a policy decision, so it is excluded
    from the buffer); subsequent steps sample z from pi_h. Rewards of the
    five low-level steps under one latent are summed into that high step.
    """
    buffer = RolloutBuffer(capacity=horizon)
    state = start_state.copy() if start_state is not None else sim.reset()
    ts = TerminationState()
    episode_start = True
    episode_steps = 0
    frame_history: list[np.ndarray] = []
    similarities: list[float] = []
    rewards_log: list[float] = []
    resets = 0
    low_steps = 0
    states: list[SimState] = []
    std = np.exp(pi_h.log_std)

    for _ in range(horizon):
        z_hat = latent_bank.sample(rng)
        obs = pose_descriptor(state)
        if episode_start:
            z = z_hat.copy()
            action_u = None
            logp = 0.0
            episode_start = False
        else:
            mean, _ = mlp_forward(pi_h.net, obs)
            action_u = mean if deterministic else mean + std * rng.standard_normal(mean.shape)
            logp = float(pi_h.log_prob_given_mean(mean, action_u))
            z = normalize_latent(action_u)
        if value_net is not None:
            value = float(mlp_forward(value_net, obs)[0][0])
        else:
            value = 0.0

        step_reward = 0.0
        done = False
        for _low in range(schedule.llc_steps_per_high):
            ctrl_obs = controller_obs(pose_descriptor(state), z)
            a_mean, _ = mlp_forward(low_nets.controller.net, ctrl_obs)
            try:
                state, _ = sim.step(state, _as_action(a_mean), dt=schedule.low_dt)
            except SimulationDiverged:
                done = True
                resets += 1
                state = sim.reset()
                ts = TerminationState()
                frame_history.clear()
                break
            low_steps += 1
            f_img = _encode_with_retry(provider, state)
            frame_history.append(f_img)
            root_speed = float(np.linalg.norm(state.root_vel))
            r, sim_term = high_reward(f_img, f_text, z, z_hat, reward_cfg,
                                      frame_history=frame_history,
                                      root_speed=root_speed)
            step_reward += r
            similarities.append(sim_term)
            rewards_log.append(r)
            if keep_states:
                states.append(state.copy())
            if early_termination:
                decision, ts = termination_update(
                    ts, sim_term, sim.head_height(state), rng)
                if decision == RESET_AGENT:
                    resets += 1
                    state = sim.reset()
                    frame_history.clear()
                    done = True
        episode_steps += 1
        if not done and episode_length is not None and episode_steps >= episode_length:
            done = True
            state = sim.reset()
            ts = TerminationState()
            frame_history.clear()
        if action_u is not None:
            buffer.add(obs, action_u, logp, value, step_reward, done)
        if done:
            episode_start = True
            episode_steps = 0

    if value_net is not None and not (buffer.dones and buffer.dones[-1]):
        buffer.bootstrap_value = float(mlp_forward(value_net, pose_descriptor(state))[0][0])
    return RolloutResult(buffer=buffer, similarities=similarities, rewards=rewards_log,
                         resets=resets, low_steps=low_steps, final_state=state,
                         states=states)
