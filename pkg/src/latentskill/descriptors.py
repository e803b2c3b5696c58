"""Pose descriptors: fixed-size featurization of agent states.

Layout (30 dims for the 8-joint body): sin/cos of each joint angle, root
height, sin/cos of root rotation, then velocities scaled by VEL_SCALE so
pose dominates the geometry of the feature space. Root x is excluded on
purpose; descriptors are translation-invariant.
"""

from __future__ import annotations

import numpy as np

from .bodies import NUM_JOINTS
from .simstate import SimState

VEL_SCALE = 0.05
DESCRIPTOR_DIM = 2 * NUM_JOINTS + 1 + 2 + 2 + 1 + NUM_JOINTS


def pose_descriptor(state: SimState) -> np.ndarray:
    out = np.empty(DESCRIPTOR_DIM)
    q = state.joint_pos
    out[0:NUM_JOINTS] = np.sin(q)
    out[NUM_JOINTS:2 * NUM_JOINTS] = np.cos(q)
    k = 2 * NUM_JOINTS
    out[k] = state.root_pos[1]
    out[k + 1] = np.sin(state.root_rot)
    out[k + 2] = np.cos(state.root_rot)
    out[k + 3] = state.root_vel[0] * VEL_SCALE
    out[k + 4] = state.root_vel[1] * VEL_SCALE
    out[k + 5] = state.root_ang_vel * VEL_SCALE
    out[k + 6:] = state.joint_vel * VEL_SCALE
    return out


def descriptor_batch(states) -> np.ndarray:
    return np.stack([pose_descriptor(s) for s in states])
