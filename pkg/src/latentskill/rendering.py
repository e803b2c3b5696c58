"""Orthographic side-view rasterizer producing grayscale frames.

The camera tracks a joint: the view window is re-centered on the target
joint's world position every call, so renders are invariant under pure root
translation. Links and objects are drawn as anti-aliased capsules/discs via
the kernel primitives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .bodies import BodySpec, NUM_JOINTS, LINK_PARENT, link_frames
from .errors import ConfigError
from .simstate import BALL, SceneObject, SimState

DEFAULT_FRAME_SIZE = 64
PANEL_HALF_WIDTH = 0.05


@dataclass(frozen=True)
class CameraSpec:
    """Tracking camera: ``offset`` sets the orthographic window half-extent
    (its norm, meters); ``target_joint`` is -1 for the root or a joint index
    whose anchor point is tracked."""

    offset: tuple[float, float] = (3.0, 1.0)
    target_joint: int = -1

    def __post_init__(self):
        if math.hypot(*self.offset) <= 0:
            raise ConfigError("camera offset must be nonzero")
        if not (-1 <= self.target_joint < NUM_JOINTS):
            raise ConfigError(f"target_joint must be -1..{NUM_JOINTS - 1}")

    @property
    def half_extent(self) -> float:
        return math.hypot(*self.offset)


@dataclass
class Frame:
    """Grayscale image, intensities in [0, 1], row 0 at the top."""

    width: int
    height: int
    pixels: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.pixels is None:
            self.pixels = np.zeros((self.height, self.width), dtype=np.float64)
        assert self.pixels.shape == (self.height, self.width)


def camera_center(spec: BodySpec, state: SimState, camera: CameraSpec) -> np.ndarray:
    if camera.target_joint < 0:
        return state.root_pos.copy()
    _, anchors, _ = link_frames(spec, state.root_pos, state.root_rot, state.joint_pos)
    return anchors[camera.target_joint].copy()


def render(state: SimState, objects: list[SceneObject] | None, camera: CameraSpec,
           spec: BodySpec, width: int = DEFAULT_FRAME_SIZE,
           height: int = DEFAULT_FRAME_SIZE) -> Frame:
    """Rasterize the agent and objects; deterministic for identical inputs."""
    state.require_finite("render state")
    frame = Frame(width=width, height=height)
    img = frame.pixels
    cx, cy = camera_center(spec, state, camera)
    scale = width / (2.0 * camera.half_extent)
    half_px_x = (width - 1) / 2.0
    half_px_y = (height - 1) / 2.0

    def to_px(wx: float, wy: float) -> tuple[float, float]:
        return ((wx - cx) * scale + half_px_x, half_px_y - (wy - cy) * scale)

    aa = 1.0
    _, anchors, ends = link_frames(spec, state.root_pos, state.root_rot, state.joint_pos)
    half_w = spec.contact_radius * scale
    for j in range(NUM_JOINTS):
        x0, y0 = to_px(anchors[j, 0], anchors[j, 1])
        x1, y1 = to_px(ends[j, 0], ends[j, 1])
        kernels.raster_capsule(img, x0, y0, x1, y1, half_w, aa)
    rx, ry = to_px(state.root_pos[0], state.root_pos[1])
    kernels.raster_disc(img, rx, ry, 1.5 * half_w, aa)

    for obj in objects or []:
        if obj.kind == BALL:
            ox, oy = to_px(obj.pose[0], obj.pose[1])
            kernels.raster_disc(img, ox, oy, obj.params["radius"] * scale, aa)
        else:
            px0, py0 = to_px(obj.pose[0], obj.pose[1])
            ex = obj.pose[0] + obj.params["length"] * math.cos(obj.pose[2])
            ey = obj.pose[1] + obj.params["length"] * math.sin(obj.pose[2])
            px1, py1 = to_px(ex, ey)
            kernels.raster_capsule(img, px0, py0, px1, py1, PANEL_HALF_WIDTH * scale, aa)
    return frame


def write_pgm(frame: Frame, path) -> None:
    """Binary PGM (P5) export, 8-bit."""
    data = np.clip(np.rint(frame.pixels * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{frame.width} {frame.height}\n255\n".encode())
        fh.write(data.tobytes())


def read_pgm(path) -> Frame:
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ConfigError(f"{path}: not a binary PGM")
        dims = fh.readline().split()
        width, height = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        raw = np.frombuffer(fh.read(width * height), dtype=np.uint8)
    pixels = raw.reshape(height, width).astype(np.float64) / maxval
    return Frame(width=width, height=height, pixels=pixels)


def frame_strip(frames: list[Frame]) -> Frame:
    """Concatenate frames horizontally with 1-px separators (for eval output)."""
    if not frames:
        raise ConfigError("frame_strip needs at least one frame")
    height = frames[0].height
    width = sum(f.width for f in frames) + len(frames) - 1
    out = np.ones((height, width), dtype=np.float64)
    x = 0
    for f in frames:
        out[:, x:x + f.width] = f.pixels
        x += f.width + 1
    return Frame(width=width, height=height, pixels=out)
