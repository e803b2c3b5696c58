"""Motion clips: file format, dataset manifest, weighted sampling, transitions.

A clip file is a plain-text document (schema v1, see ``docs/clip-format.md``):
a comment line, ``key: value`` header entries (id, fps, movement, styles),
then a ``frames:`` line followed by one whitespace-separated pose row per
frame: ``root_x root_y root_rot q0..q7``. Velocities are not stored; they
are recovered by finite differences at the clip's fps.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .bodies import NUM_JOINTS
from .errors import ClipFormatError
from .simstate import SimState

MOVEMENT_CATEGORIES = ("move_around", "act_in_place", "combined")
STYLE_CATEGORIES = ("attack", "crawl", "jump", "dance", "usual")
POSE_DIM = 3 + NUM_JOINTS
CLIP_HEADER = "# latentskill motion clip v1"
CLIP_SUFFIX = ".clip"


@dataclass
class MotionClip:
    id: str
    fps: float
    frames: np.ndarray  # (F, POSE_DIM) pose rows
    movement_category: str
    style_categories: tuple[str, ...]

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        self.style_categories = tuple(self.style_categories)
        self.validate()

    def validate(self) -> None:
        if self.frames.ndim != 2 or self.frames.shape[1] != POSE_DIM:
            raise ClipFormatError(f"clip {self.id}: frames must be (F, {POSE_DIM})")
        if self.frames.shape[0] < 2:
            raise ClipFormatError(f"clip {self.id}: needs at least 2 frames")
        if not self.fps > 0:
            raise ClipFormatError(f"clip {self.id}: fps must be positive")
        if self.movement_category not in MOVEMENT_CATEGORIES:
            raise ClipFormatError(
                f"clip {self.id}: unknown movement category {self.movement_category!r}")
        if not self.style_categories:
            raise ClipFormatError(f"clip {self.id}: needs at least one style category")
        for s in self.style_categories:
            if s not in STYLE_CATEGORIES:
                raise ClipFormatError(f"clip {self.id}: unknown style category {s!r}")
        if not np.all(np.isfinite(self.frames)):
            raise ClipFormatError(f"clip {self.id}: non-finite frame values")

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def categories(self) -> tuple[str, ...]:
        return (self.movement_category,) + self.style_categories

    def pose_velocities(self) -> np.ndarray:
        """Forward-difference velocities per frame; last row repeats the
        previous one so every frame has an estimate."""
        vel = np.empty_like(self.frames)
        vel[:-1] = (self.frames[1:] - self.frames[:-1]) * self.fps
        vel[-1] = vel[-2]
        return vel

    def frame_state(self, i: int, vel_row: np.ndarray | None = None) -> SimState:
        pose = self.frames[i]
        vel = vel_row if vel_row is not None else np.zeros(POSE_DIM)
        return SimState(
            root_pos=pose[0:2].copy(), root_rot=float(pose[2]), joint_pos=pose[3:].copy(),
            root_vel=vel[0:2].copy(), root_ang_vel=float(vel[2]), joint_vel=vel[3:].copy(),
            time=i / self.fps,
        )


@dataclass
class TransitionPair:
    s: SimState
    s_next: SimState
    clip_id: str


def transitions(clip: MotionClip) -> list[TransitionPair]:
    """Consecutive-frame state pairs with finite-difference velocities."""
    vel = clip.pose_velocities()
    out = []
    for i in range(clip.n_frames - 1):
        out.append(TransitionPair(
            s=clip.frame_state(i, vel[i]),
            s_next=clip.frame_state(i + 1, vel[i + 1]),
            clip_id=clip.id,
        ))
    return out


def compute_weights(clips: list[MotionClip]) -> np.ndarray:
    """Inverse-category-frequency sampling weights, averaged per clip.

    Each category (the movement category and every style category) gets the
    value 1/count over the dataset; a clip's raw weight is the mean of the
    values of its own categories, normalized to sum to one.
    """
    if not clips:
        raise ClipFormatError("compute_weights: empty clip list")
    counts: dict[str, int] = {}
    for clip in clips:
        for cat in clip.categories:
            counts[cat] = counts.get(cat, 0) + 1
    raw = np.array([
        np.mean([1.0 / counts[c] for c in clip.categories]) for clip in clips
    ])
    return raw / raw.sum()


@dataclass
class DatasetManifest:
    clips: list[MotionClip]
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if len(self.clips) != self.weights.shape[0]:
            raise ClipFormatError("manifest: one weight per clip required")
        if abs(self.weights.sum() - 1.0) > 1e-9 or not np.all(self.weights > 0):
            raise ClipFormatError("manifest: weights must be positive and sum to 1")

    def __len__(self) -> int:
        return len(self.clips)

    def by_id(self, clip_id: str) -> MotionClip:
        for clip in self.clips:
            if clip.id == clip_id:
                return clip
        raise KeyError(clip_id)


def sample_clip(manifest: DatasetManifest, rng: np.random.Generator) -> MotionClip:
    idx = int(rng.choice(len(manifest.clips), p=manifest.weights))
    return manifest.clips[idx]


def parse_clip(path) -> MotionClip:
    with open(path) as fh:
        lines = fh.read().splitlines()
    header: dict[str, str] = {}
    frame_rows: list[list[float]] = []
    in_frames = False
    for ln, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        if in_frames:
            vals = text.split()
            if len(vals) != POSE_DIM:
                raise ClipFormatError(
                    f"{path}:{ln}: frame row has {len(vals)} values, expected {POSE_DIM}")
            try:
                frame_rows.append([float(v) for v in vals])
            except ValueError as exc:
                raise ClipFormatError(f"{path}:{ln}: bad float in frame row") from exc
        elif text == "frames:":
            in_frames = True
        else:
            if ":" not in text:
                raise ClipFormatError(f"{path}:{ln}: expected 'key: value' header line")
            key, _, value = text.partition(":")
            header[key.strip()] = value.strip()
    for field in ("id", "fps", "movement", "styles"):
        if field not in header:
            raise ClipFormatError(f"{path}: missing header field {field!r}")
    try:
        fps = float(header["fps"])
    except ValueError as exc:
        raise ClipFormatError(f"{path}: fps is not a number") from exc
    styles = tuple(s.strip() for s in header["styles"].split(",") if s.strip())
    try:
        return MotionClip(
            id=header["id"], fps=fps, frames=np.asarray(frame_rows, dtype=np.float64),
            movement_category=header["movement"], style_categories=styles,
        )
    except ClipFormatError:
        raise
    except Exception as exc:  # malformed frames array
        raise ClipFormatError(f"{path}: {exc}") from exc


def write_clip(clip: MotionClip, path) -> None:
    with open(path, "w") as fh:
        fh.write(CLIP_HEADER + "\n")
        fh.write(f"id: {clip.id}\n")
        fh.write(f"fps: {clip.fps:g}\n")
        fh.write(f"movement: {clip.movement_category}\n")
        fh.write(f"styles: {', '.join(clip.style_categories)}\n")
        fh.write("frames:\n")
        for row in clip.frames:
            fh.write(" ".join(f"{v:.9f}" for v in row) + "\n")


def load_dataset(path) -> DatasetManifest:
    """Load every ``*.clip`` file under a directory (sorted by filename)."""
    path = os.fspath(path)
    if not os.path.isdir(path):
        raise ClipFormatError(f"{path}: dataset path is not a directory")
    files = sorted(f for f in os.listdir(path) if f.endswith(CLIP_SUFFIX))
    if not files:
        raise ClipFormatError(f"{path}: no {CLIP_SUFFIX} files found")
    clips = [parse_clip(os.path.join(path, f)) for f in files]
    ids = [c.id for c in clips]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ClipFormatError(f"{path}: duplicate clip ids {dupes}")
    return DatasetManifest(clips=clips, weights=compute_weights(clips))
