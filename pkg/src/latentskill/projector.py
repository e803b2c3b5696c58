"""State-to-embedding projector: bypasses render-and-encode during training.

The projector regresses pose descriptors onto the embeddings a slower
image path produces (render + frame encoder), trained with MSE on the
normalized output. Once fitted it serves as a drop-in embedding provider.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .descriptors import DESCRIPTOR_DIM, pose_descriptor
from .errors import ConfigError, ProviderError, SimulationDiverged, TrainingDiverged
from .mlp import (
    MlpParams,
    init_mlp,
    l2_normalize,
    l2_normalize_backward,
    mlp_backward,
    mlp_forward,
)
from .optim import adam_init, adam_update
from .physics import Simulator
from .simstate import SimState


@dataclass
class ProjectorConfig:
    hidden: tuple = (128, 64)
    epochs: int = 25
    batch_size: int = 256
    learning_rate: float = 1e-3
    holdout_fraction: float = 0.1


def projected_embedding(params: MlpParams, descriptor: np.ndarray) -> np.ndarray:
    out, _ = mlp_forward(params, descriptor)
    z, _ = l2_normalize(out)
    return z


def train_projector(descriptors: np.ndarray, targets: np.ndarray,
                    config: ProjectorConfig, seed: int) -> tuple[MlpParams, dict]:
    """Fit normalized-MSE regression descriptor -> embedding.

    Returns the parameters and a report with train/holdout MSE and holdout
    mean cosine. Raises TrainingDiverged if the loss goes non-finite.
    """
    descriptors = np.asarray(descriptors, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if descriptors.ndim != 2 or targets.ndim != 2 or len(descriptors) != len(targets):
        raise ConfigError("train_projector needs matching (N, d_in), (N, d_out) arrays")
    if len(descriptors) == 0:
        raise ConfigError("train_projector: empty dataset")

    rng = np.random.default_rng(seed)
    n = len(descriptors)
    order = rng.permutation(n)
    n_hold = int(n * config.holdout_fraction)
    hold_idx = order[:n_hold]
    train_idx = order[n_hold:]
    if len(train_idx) == 0:
        train_idx = order
        hold_idx = order[:0]

    params = init_mlp([descriptors.shape[1]] + list(config.hidden) + [targets.shape[1]],
                      rng, activation="relu")
    opt = adam_init(params.arrays())

    def batch_loss_and_step(idx, update: bool) -> float:
        x = descriptors[idx]
        t = targets[idx]
        out, cache = mlp_forward(params, x)
        y, norms = l2_normalize(out)
        err = y - t
        loss = float(np.mean(np.sum(err ** 2, axis=1)))
        if update:
            dy = 2.0 * err / len(idx)
            dout = l2_normalize_backward(y, norms, dy)
            grads, _ = mlp_backward(params, cache, dout)
            adam_update(params.arrays(), grads.arrays(), opt, config.learning_rate)
        return loss

    train_loss = 0.0
    for epoch in range(config.epochs):
        perm = rng.permutation(len(train_idx))
        losses = []
        for start in range(0, len(train_idx), config.batch_size):
            idx = train_idx[perm[start:start + config.batch_size]]
            losses.append(batch_loss_and_step(idx, update=True))
        train_loss = float(np.mean(losses))
        if not np.isfinite(train_loss):
            raise TrainingDiverged(f"projector loss non-finite at epoch {epoch}")

    report = {"train_mse": train_loss, "n_train": int(len(train_idx)),
              "n_holdout": int(len(hold_idx))}
    if len(hold_idx):
        out, _ = mlp_forward(params, descriptors[hold_idx])
        y, _ = l2_normalize(out)
        err = y - targets[hold_idx]
        report["holdout_mse"] = float(np.mean(np.sum(err ** 2, axis=1)))
        cosines = np.sum(y * targets[hold_idx], axis=1) / np.maximum(
            np.linalg.norm(targets[hold_idx], axis=1), 1e-12)
        report["holdout_mean_cosine"] = float(np.mean(cosines))
    return params, report


class ProjectorProvider:
    """Embedding provider backed by a trained projector; instruction
    embeddings are the projections of the registered goal poses."""

    def __init__(self, params: MlpParams, goals: dict[str, SimState]):
        self.params = params
        self.goals = goals
        self.dim = params.out_dim

    def encode_state(self, state: SimState) -> np.ndarray:
        return projected_embedding(self.params, pose_descriptor(state))

    def encode_text(self, instruction: str) -> np.ndarray:
        if instruction not in self.goals:
            raise ProviderError(
                f"unknown instruction {instruction!r}; registered goals: "
                f"{sorted(self.goals)}")
        return self.encode_state(self.goals[instruction])

    def goal_names(self) -> list[str]:
        return sorted(self.goals)


def harvest_states(sim: Simulator, n_states: int, seed: int,
                   low_nets=None, manifest=None,
                   steps_per_latent: int = 5) -> np.ndarray:
    """Collect pose descriptors from exploratory rollouts.

    With a low-level checkpoint, random latent codes from the dataset bank
    drive the controller (random-high-policy rollouts); otherwise joints get
    random PD targets. Fallen agents reset.
    """
    if n_states < 1:
        raise ConfigError("harvest_states: n_states must be >= 1")
    rng = np.random.default_rng(seed)
    out = np.empty((n_states, DESCRIPTOR_DIM))
    state = sim.reset()
    bank = None
    if low_nets is not None:
        from .highlevel import LatentBank
        from .train_low import controller_obs

        if manifest is None:
            raise ConfigError("harvest with low_nets needs the motion manifest")
        bank = LatentBank(low_nets, manifest)
    z = bank.sample(rng) if bank is not None else None
    targets = rng.uniform(-0.6, 0.6, 8)
    k = 0
    step_count = 0
    while k < n_states:
        if step_count % steps_per_latent == 0:
            if bank is not None:
                z = bank.sample(rng)
            else:
                targets = rng.uniform(-0.6, 0.6, 8)
        if bank is not None:
            obs = controller_obs(pose_descriptor(state), z)
            targets, _ = mlp_forward(low_nets.controller.net, obs)
        try:
            state, _ = sim.step(state, _mk_action(targets))
        except SimulationDiverged:
            state = sim.reset()
            continue
        if sim.head_height(state) < 0.15:
            state = sim.reset()
        out[k] = pose_descriptor(state)
        k += 1
        step_count += 1
    return out


def _mk_action(targets):
    from .simstate import Action

    return Action(np.asarray(targets))


def measure_projector_speedup(projector: MlpParams, image_path_encode,
                              states: list[SimState], n_trials: int) -> dict:
    """Wall-clock ratio of the image path (render + encode) to projector
    evaluation over ``n_trials`` single-state encodings."""
    if n_trials < 1:
        raise ConfigError("measure_projector_speedup: n_trials must be >= 1")
    if not states:
        raise ConfigError("measure_projector_speedup: need at least one state")

    t0 = time.perf_counter()
    for i in range(n_trials):
        image_path_encode(states[i % len(states)])
    t_image = time.perf_counter() - t0

    t0 = time.perf_counter()
    for i in range(n_trials):
        projected_embedding(projector, pose_descriptor(states[i % len(states)]))
    t_proj = time.perf_counter() - t0

    return {"image_path_seconds": t_image, "projector_seconds": t_proj,
            "speedup": t_image / max(t_proj, 1e-12), "n_trials": n_trials}
