"""Simulation state containers: agent state, actions, scene objects, world params."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .bodies import NUM_JOINTS
from .errors import ConfigError, InvalidStateError

BALL = "ball"
HINGED_PANEL = "hinged_panel"


@dataclass
class SimState:
    """Generalized coordinates and velocities of the agent at a point in time."""

    root_pos: np.ndarray  # (x, y) meters
    root_rot: float  # radians
    joint_pos: np.ndarray  # radians, per joint
    root_vel: np.ndarray  # m/s
    root_ang_vel: float  # rad/s
    joint_vel: np.ndarray  # rad/s
    time: float = 0.0

    def __post_init__(self):
        self.root_pos = np.asarray(self.root_pos, dtype=np.float64).reshape(2)
        self.root_vel = np.asarray(self.root_vel, dtype=np.float64).reshape(2)
        self.joint_pos = np.asarray(self.joint_pos, dtype=np.float64).reshape(NUM_JOINTS)
        self.joint_vel = np.asarray(self.joint_vel, dtype=np.float64).reshape(NUM_JOINTS)
        self.root_rot = float(self.root_rot)
        self.root_ang_vel = float(self.root_ang_vel)
        self.time = float(self.time)

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.root_pos))
            and np.isfinite(self.root_rot)
            and np.all(np.isfinite(self.joint_pos))
            and np.all(np.isfinite(self.root_vel))
            and np.isfinite(self.root_ang_vel)
            and np.all(np.isfinite(self.joint_vel))
        )

    def require_finite(self, who: str = "state") -> None:
        if not self.is_finite():
            raise InvalidStateError(f"{who} contains non-finite values")

    def copy(self) -> "SimState":
        return SimState(
            root_pos=self.root_pos.copy(),
            root_rot=self.root_rot,
            joint_pos=self.joint_pos.copy(),
            root_vel=self.root_vel.copy(),
            root_ang_vel=self.root_ang_vel,
            joint_vel=self.joint_vel.copy(),
            time=self.time,
        )

    def pack(self) -> tuple[np.ndarray, np.ndarray]:
        """Flatten to kernel layout ``q=[x,y,rot,q0..q7]``, ``v=[vx,vy,w,dq0..dq7]``."""
        q = np.concatenate(([self.root_pos[0], self.root_pos[1], self.root_rot], self.joint_pos))
        v = np.concatenate(([self.root_vel[0], self.root_vel[1], self.root_ang_vel], self.joint_vel))
        return q, v

    @staticmethod
    def unpack(q: np.ndarray, v: np.ndarray, time: float) -> "SimState":
        return SimState(
            root_pos=q[0:2].copy(),
            root_rot=float(q[2]),
            joint_pos=q[3:].copy(),
            root_vel=v[0:2].copy(),
            root_ang_vel=float(v[2]),
            joint_vel=v[3:].copy(),
            time=time,
        )


@dataclass
class Action:
    """PD target joint rotations for one control step."""

    target_joint_pos: np.ndarray

    def __post_init__(self):
        self.target_joint_pos = np.asarray(self.target_joint_pos, dtype=np.float64).reshape(-1)


@dataclass
class SceneObject:
    """A dynamic scene object the agent can strike.

    ``ball``: pose = (x, y), vel = (vx, vy), params radius + mass.
    ``hinged_panel``: pose = (pivot_x, pivot_y, angle), vel = (ang_vel,),
    params length + mass; the pivot is fixed in the world.
    """

    kind: str
    pose: np.ndarray
    vel: np.ndarray
    params: dict[str, float]

    def __post_init__(self):
        self.pose = np.asarray(self.pose, dtype=np.float64).reshape(-1)
        self.vel = np.asarray(self.vel, dtype=np.float64).reshape(-1)
        if self.kind == BALL:
            if self.pose.shape != (2,) or self.vel.shape != (2,):
                raise ConfigError("ball needs pose (x, y) and vel (vx, vy)")
            needed = ("radius", "mass")
        elif self.kind == HINGED_PANEL:
            if self.pose.shape != (3,) or self.vel.shape != (1,):
                raise ConfigError("hinged_panel needs pose (px, py, angle) and vel (ang_vel,)")
            needed = ("length", "mass")
        else:
            raise ConfigError(f"unknown scene object kind {self.kind!r}")
        for key in needed:
            if key not in self.params or not self.params[key] > 0:
                raise ConfigError(f"{self.kind} param {key!r} must be present and positive")
        if not (np.all(np.isfinite(self.pose)) and np.all(np.isfinite(self.vel))):
            raise ConfigError(f"{self.kind} pose/vel must be finite")

    def copy(self) -> "SceneObject":
        return SceneObject(self.kind, self.pose.copy(), self.vel.copy(), dict(self.params))


@dataclass(frozen=True)
class WorldParams:
    """Environment-level constants: gravity, ground contact model, restitution."""

    gravity: float = 9.81
    ground_stiffness: float = 12000.0  # N/m penalty spring per contact point
    ground_damping: float = 150.0
    friction_mu: float = 0.9
    friction_viscous: float = 100.0  # viscous slope below the Coulomb cap
    angular_damping: float = 2.0  # root rotation damper
    restitution: float = 0.6  # agent-object impulse contacts
    panel_damping: float = 2.0

    def pack(self) -> np.ndarray:
        return np.array(
            [
                self.gravity,
                self.ground_stiffness,
                self.ground_damping,
                self.friction_mu,
                self.friction_viscous,
                self.angular_damping,
                self.restitution,
                self.panel_damping,
            ]
        )


OBJ_KIND_CODES = {BALL: 0, HINGED_PANEL: 1}


def pack_objects(objects: list[SceneObject]) -> tuple[np.ndarray, np.ndarray]:
    """Flatten objects to (kind codes, data rows) for the kernels.

    Ball rows: ``[x, y, vx, vy, radius, mass, 0, 0]``.
    Panel rows: ``[px, py, angle, ang_vel, length, mass, 0, 0]``.
    """
    n = len(objects)
    kinds = np.zeros(n, dtype=np.int64)
    data = np.zeros((n, 8), dtype=np.float64)
    for i, obj in enumerate(objects):
        kinds[i] = OBJ_KIND_CODES[obj.kind]
        if obj.kind == BALL:
            data[i, 0:2] = obj.pose
            data[i, 2:4] = obj.vel
            data[i, 4] = obj.params["radius"]
            data[i, 5] = obj.params["mass"]
        else:
            data[i, 0:3] = obj.pose
            data[i, 3] = obj.vel[0]
            data[i, 4] = obj.params["length"]
            data[i, 5] = obj.params["mass"]
    return kinds, data


def unpack_objects(objects: list[SceneObject], data: np.ndarray) -> list[SceneObject]:
    """Rebuild object list from kernel rows, keeping kinds/params from the originals."""
    out = []
    for i, obj in enumerate(objects):
        new = obj.copy()
        if obj.kind == BALL:
            new.pose = data[i, 0:2].copy()
            new.vel = data[i, 2:4].copy()
        else:
            new.pose = data[i, 0:3].copy()
            new.vel = data[i, 3:4].copy()
        out.append(new)
    return out
