"""Planar articulated agent: body parameters, topology, forward kinematics.

The agent is a kinematic tree rooted at the pelvis: a torso with a head and
two single-segment arms, plus two legs of thigh + shin. Each of the 8 links
is driven by one hinge joint, so joints and links share indices:

    0 torso   (pelvis,        rest +pi/2 rel. root)
    1 head    (torso end,     rest 0     rel. torso)
    2 arm_l   (torso end,     rest +pi   rel. torso, hangs down)
    3 arm_r   (torso end,     rest +pi   rel. torso)
    4 thigh_l (pelvis,        rest -pi/2 rel. root)
    5 shin_l  (thigh_l end,   rest 0     rel. thigh)
    6 thigh_r (pelvis,        rest -pi/2 rel. root)
    7 shin_r  (thigh_r end,   rest 0     rel. thigh)

The topology is fixed; lengths, masses, limits and gains are configurable
through :class:`BodySpec`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

NUM_JOINTS = 8
NUM_LINKS = 8

LINK_NAMES = ("torso", "head", "arm_l", "arm_r", "thigh_l", "shin_l", "thigh_r", "shin_r")
JOINT_NAMES = ("torso", "neck", "shoulder_l", "shoulder_r", "hip_l", "knee_l", "hip_r", "knee_r")

# Parent link per link (-1 = root pelvis) and rest angle relative to parent.
LINK_PARENT = np.array([-1, 0, 0, 0, -1, 4, -1, 6], dtype=np.int64)
LINK_REST = np.array(
    [math.pi / 2, 0.0, math.pi, math.pi, -math.pi / 2, 0.0, -math.pi / 2, 0.0]
)

# Contact points: the root plus every link endpoint.
CONTACT_POINT_NAMES = ("root",) + tuple(f"{n}_end" for n in LINK_NAMES)
NUM_CONTACT_POINTS = 1 + NUM_LINKS

HEAD_LINK = 1


@dataclass
class BodySpec:
    """Physical parameters of the planar agent.

    All arrays are indexed by the link/joint order documented in the module
    header. ``root_mass`` and ``root_inertia`` govern the floating base;
    ``joint_inertias`` are the effective rotor inertias of each hinge.
    ``contact_radius`` is the collision radius of every contact point and
    doubles as the rendered half-width of a link.
    """

    link_lengths: np.ndarray
    link_masses: np.ndarray
    joint_limits: np.ndarray  # shape (8, 2), radians, lo < hi
    pd_gains: np.ndarray  # shape (8, 2), (kp, kd)
    damping: np.ndarray  # per joint, N*m*s/rad
    root_mass: float = 6.0
    root_inertia: float = 4.0
    joint_inertias: np.ndarray = field(default=None)  # type: ignore[assignment]
    contact_radius: float = 0.06

    def __post_init__(self):
        self.link_lengths = np.asarray(self.link_lengths, dtype=np.float64)
        self.link_masses = np.asarray(self.link_masses, dtype=np.float64)
        self.joint_limits = np.asarray(self.joint_limits, dtype=np.float64).reshape(NUM_JOINTS, 2)
        self.pd_gains = np.asarray(self.pd_gains, dtype=np.float64).reshape(NUM_JOINTS, 2)
        self.damping = np.asarray(self.damping, dtype=np.float64)
        if self.joint_inertias is None:
            self.joint_inertias = self._default_inertias()
        self.joint_inertias = np.asarray(self.joint_inertias, dtype=np.float64)
        self.validate()

    def _default_inertias(self) -> np.ndarray:
        # Thin-rod inertia of the link about its joint, plus the same for any
        # child subtree treated as a point mass at the link end.
        inert = np.zeros(NUM_JOINTS)
        subtree = self.link_masses.copy()
        for j in range(NUM_LINKS - 1, -1, -1):
            p = LINK_PARENT[j]
            if p >= 0:
                subtree[p] += subtree[j]
        for j in range(NUM_JOINTS):
            own = self.link_masses[j] * self.link_lengths[j] ** 2 / 3.0
            child = (subtree[j] - self.link_masses[j]) * self.link_lengths[j] ** 2
            inert[j] = own + child
        return np.maximum(inert, 1e-3)

    def validate(self) -> None:
        if self.link_lengths.shape != (NUM_LINKS,) or self.link_masses.shape != (NUM_LINKS,):
            raise ConfigError("body spec needs exactly 8 link lengths and masses")
        if not np.all(self.link_lengths > 0) or not np.all(self.link_masses > 0):
            raise ConfigError("link lengths and masses must be strictly positive")
        if not np.all(self.joint_limits[:, 0] < self.joint_limits[:, 1]):
            raise ConfigError("joint limits must satisfy lo < hi")
        if not np.all(self.pd_gains >= 0) or not np.all(self.damping >= 0):
            raise ConfigError("pd gains and damping must be nonnegative")
        if self.root_mass <= 0 or self.root_inertia <= 0 or self.contact_radius <= 0:
            raise ConfigError("root mass/inertia and contact radius must be positive")

    @property
    def total_mass(self) -> float:
        return float(self.root_mass + self.link_masses.sum())

    def clamp_joints(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.joint_limits[:, 0], self.joint_limits[:, 1])


def default_body() -> BodySpec:
    """The stock ~1.6 m, 50 kg planar agent used throughout the package."""
    return BodySpec(
        link_lengths=[0.45, 0.22, 0.55, 0.55, 0.40, 0.40, 0.40, 0.40],
        link_masses=[16.0, 4.0, 3.0, 3.0, 5.0, 4.0, 5.0, 4.0],
        joint_limits=[
            (-0.9, 0.9),   # torso
            (-0.9, 0.9),   # neck
            (-0.9, 3.8),   # shoulder_l (0 = hanging, pi = raised)
            (-0.9, 3.8),   # shoulder_r
            (-1.3, 1.3),   # hip_l
            (-2.3, 0.0),   # knee_l (flexes backward)
            (-1.3, 1.3),   # hip_r
            (-2.3, 0.0),   # knee_r
        ],
        pd_gains=[
            (300.0, 30.0),
            (50.0, 5.0),
            (160.0, 8.0),
            (160.0, 8.0),
            (400.0, 20.0),
            (250.0, 12.0),
            (400.0, 20.0),
            (250.0, 12.0),
        ],
        damping=[1.0] * NUM_JOINTS,
        # Rotor inertias sized so every contact/PD coupling stays well inside
        # the 120 Hz explicit-integration stability region.
        joint_inertias=[2.5, 0.3, 0.5, 0.5, 1.6, 0.55, 1.6, 0.55],
    )


def link_frames(spec: BodySpec, root_pos, root_rot: float, joint_pos) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Forward kinematics: per-link world (angle, anchor, end).

    Returns ``(angles[8], anchors[8,2], ends[8,2])``.
    """
    angles = np.empty(NUM_LINKS)
    anchors = np.empty((NUM_LINKS, 2))
    ends = np.empty((NUM_LINKS, 2))
    rx, ry = float(root_pos[0]), float(root_pos[1])
    for j in range(NUM_LINKS):
        p = LINK_PARENT[j]
        if p < 0:
            base_ang = root_rot
            ax, ay = rx, ry
        else:
            base_ang = angles[p]
            ax, ay = ends[p]
        ang = base_ang + LINK_REST[j] + joint_pos[j]
        angles[j] = ang
        anchors[j, 0], anchors[j, 1] = ax, ay
        ends[j, 0] = ax + spec.link_lengths[j] * math.cos(ang)
        ends[j, 1] = ay + spec.link_lengths[j] * math.sin(ang)
    return angles, anchors, ends


def contact_points(spec: BodySpec, root_pos, root_rot: float, joint_pos) -> np.ndarray:
    """World positions of the 9 contact points (root + link ends)."""
    _, _, ends = link_frames(spec, root_pos, root_rot, joint_pos)
    pts = np.empty((NUM_CONTACT_POINTS, 2))
    pts[0] = root_pos
    pts[1:] = ends
    return pts


def head_endpoint(spec: BodySpec, root_pos, root_rot: float, joint_pos) -> np.ndarray:
    _, _, ends = link_frames(spec, root_pos, root_rot, joint_pos)
    return ends[HEAD_LINK].copy()


def standing_root_height(spec: BodySpec, ground_stiffness: float, gravity: float = 9.81) -> float:
    """Root height of the straight-legged stance at static contact equilibrium.

    Both feet carry the full weight on penalty springs, so the feet sink
    ``W / (2 k)`` below the contact radius.
    """
    leg = float(spec.link_lengths[4] + spec.link_lengths[5])
    sink = spec.total_mass * gravity / (2.0 * ground_stiffness)
    return leg + spec.contact_radius - sink
