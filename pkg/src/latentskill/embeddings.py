"""Embedding providers: unit-norm feature vectors for states, frames, goals.

The synthetic oracle is the deterministic test backend: a fixed seeded
orthogonal projection of either the pose descriptor (default) or a
downsampled frame, followed by L2 normalization. Its "text" side is a
registry of named goal poses whose embeddings are the image embeddings of
those poses, so the reward landscape has a known optimum.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .bodies import NUM_JOINTS
from .descriptors import DESCRIPTOR_DIM, pose_descriptor
from .errors import ConfigError, ProviderError
from .motiongen import STAND_HEIGHT, _leg_height
from .rendering import Frame
from .simstate import SimState

DEFAULT_EMBED_DIM = 64
FRAME_FEATURE_SIDE = 16


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Exact cosine similarity; rejects dimension mismatches."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ConfigError(f"cosine: dimension mismatch {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ConfigError("cosine: zero-norm input")
    return float(np.dot(a, b) / (na * nb))


def require_unit(v: np.ndarray, tol: float = 1e-6, who: str = "embedding") -> None:
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > tol:
        raise ProviderError(f"{who} norm {norm:.6f} violates unit-norm invariant")


def _goal_state(joint_pos=None, root_y=STAND_HEIGHT, root_rot=0.0) -> SimState:
    q = np.zeros(NUM_JOINTS)
    if joint_pos:
        for idx, val in joint_pos.items():
            q[idx] = val
    return SimState(root_pos=np.array([0.0, root_y]), root_rot=root_rot, joint_pos=q,
                    root_vel=np.zeros(2), root_ang_vel=0.0, joint_vel=np.zeros(NUM_JOINTS))


def default_goal_registry() -> dict[str, SimState]:
    """Named goal poses for the desk-scale instruction set."""
    crouch_hip, crouch_knee = 0.5, -0.9
    return {
        "stand": _goal_state(),
        "raise_both_arms": _goal_state({2: math.pi, 3: math.pi}),
        "raise_one_arm": _goal_state({3: math.pi}),
        "t_pose": _goal_state({2: math.pi / 2, 3: math.pi / 2}),
        "bow": _goal_state({0: -0.7, 1: -0.3}),
        "crouch": _goal_state({4: crouch_hip, 6: crouch_hip, 5: crouch_knee, 7: crouch_knee,
                               0: -0.25}, root_y=_leg_height(crouch_hip, crouch_knee)),
        "kick": _goal_state({6: 1.0, 0: -0.25, 2: 0.5}),
        "lie_down": _goal_state(root_y=0.06, root_rot=-math.pi / 2),
    }


class SyntheticOracle:
    """Deterministic stand-in for a frozen image/text encoder pair.

    ``mode='descriptor'`` projects pose descriptors through a seeded matrix
    with orthonormal columns (inner products of centered descriptors are
    preserved exactly). ``mode='frame'`` mean-pools a rendered frame to
    16x16 and projects with orthonormal rows; pass a ``renderer`` callable
    mapping a state to a :class:`Frame`.
    """

    def __init__(self, dim: int = DEFAULT_EMBED_DIM, seed: int = 0,
                 mode: str = "descriptor", center: np.ndarray | None = None,
                 goals: dict[str, SimState] | None = None,
                 renderer: Callable[[SimState], Frame] | None = None):
        if mode not in ("descriptor", "frame"):
            raise ConfigError(f"unknown oracle mode {mode!r}")
        self.dim = int(dim)
        self.mode = mode
        self.seed = int(seed)
        self.renderer = renderer
        self.goals = goals if goals is not None else default_goal_registry()
        in_dim = DESCRIPTOR_DIM if mode == "descriptor" else FRAME_FEATURE_SIDE ** 2
        if mode == "descriptor" and self.dim < in_dim:
            raise ConfigError(
                f"descriptor mode needs dim >= {in_dim} to stay inner-product preserving")
        rng = np.random.default_rng(self.seed)
        gauss = rng.standard_normal((max(self.dim, in_dim), min(self.dim, in_dim)))
        q_mat, _ = np.linalg.qr(gauss)
        # (dim, in_dim): orthonormal columns when dim >= in_dim, rows otherwise.
        self.projection = q_mat if self.dim >= in_dim else q_mat.T
        self.center = (np.zeros(in_dim) if center is None
                       else np.asarray(center, dtype=np.float64))
        if self.center.shape != (in_dim,):
            raise ConfigError(f"center must have dim {in_dim}")

    def _project(self, features: np.ndarray) -> np.ndarray:
        e = self.projection @ (features - self.center)
        norm = max(float(np.linalg.norm(e)), 1e-12)
        return e / norm

    def encode_descriptor(self, descriptor: np.ndarray) -> np.ndarray:
        descriptor = np.asarray(descriptor, dtype=np.float64)
        if self.mode != "descriptor":
            raise ProviderError("oracle is in frame mode; pass frames")
        if descriptor.shape != (DESCRIPTOR_DIM,):
            raise ProviderError(f"descriptor must have dim {DESCRIPTOR_DIM}")
        return self._project(descriptor)

    def frame_features(self, frame: Frame) -> np.ndarray:
        """Mean-pool the frame to 16x16 and flatten."""
        px = frame.pixels
        h, w = px.shape
        fh, fw = h // FRAME_FEATURE_SIDE, w // FRAME_FEATURE_SIDE
        if fh < 1 or fw < 1:
            raise ProviderError("frame smaller than the 16x16 feature grid")
        pooled = px[:fh * FRAME_FEATURE_SIDE, :fw * FRAME_FEATURE_SIDE] \
            .reshape(FRAME_FEATURE_SIDE, fh, FRAME_FEATURE_SIDE, fw).mean(axis=(1, 3))
        return pooled.ravel()

    def encode_frame(self, frame: Frame) -> np.ndarray:
        if self.mode != "frame":
            raise ProviderError("oracle is in descriptor mode; pass descriptors")
        return self._project(self.frame_features(frame))

    def encode_state(self, state: SimState) -> np.ndarray:
        if self.mode == "descriptor":
            return self._project(pose_descriptor(state))
        if self.renderer is None:
            raise ProviderError("frame-mode oracle needs a renderer")
        return self.encode_frame(self.renderer(state))

    def encode_text(self, instruction: str) -> np.ndarray:
        if instruction not in self.goals:
            raise ProviderError(
                f"unknown instruction {instruction!r}; registered goals: "
                f"{sorted(self.goals)}")
        return self.encode_state(self.goals[instruction])

    def goal_names(self) -> list[str]:
        return sorted(self.goals)
