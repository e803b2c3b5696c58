"""Scripted synthetic motion clips.

Trajectories are closed-form functions of time (sinusoids and eased ramps on
the joint angles, consistent root paths), which keeps fixtures deterministic
and license-free. Leg-driven recipes solve the root height from the stance
leg so feet stay grounded.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .bodies import default_body, standing_root_height
from .motions import MotionClip, write_clip
from .simstate import WorldParams

_SPEC = default_body()
STAND_HEIGHT = standing_root_height(_SPEC, WorldParams().ground_stiffness)

J_TORSO, J_NECK, J_ARM_L, J_ARM_R, J_HIP_L, J_KNEE_L, J_HIP_R, J_KNEE_R = range(8)


def _smoothstep(u: float) -> float:
    u = min(max(u, 0.0), 1.0)
    return u * u * (3.0 - 2.0 * u)


def _leg_height(hip: float, knee: float) -> float:
    """Root height that keeps the foot of a (hip, knee) leg on the ground."""
    th = -math.pi / 2 + hip
    sh = th + knee
    drop = _SPEC.link_lengths[4] * math.sin(th) + _SPEC.link_lengths[5] * math.sin(sh)
    return _SPEC.contact_radius - drop - 0.002


def _frames(duration: float, fps: float, pose_fn) -> np.ndarray:
    n = max(2, int(round(duration * fps)))
    rows = np.zeros((n, 11))
    for i in range(n):
        t = i / fps
        row = rows[i]
        row[1] = STAND_HEIGHT
        pose_fn(t, row)
    return rows


def _recipe_sway(p):
    def fn(t, row):
        row[3 + J_TORSO] = p["amp"] * math.sin(2 * math.pi * p["freq"] * t)
        row[3 + J_NECK] = -0.3 * row[3 + J_TORSO]
    return fn


def _recipe_raise_arms(p):
    def fn(t, row):
        lift = p["amp"] * _smoothstep(t / p["rise"])
        row[3 + J_ARM_L] = lift
        row[3 + J_ARM_R] = lift
    return fn


def _recipe_wave(p):
    def fn(t, row):
        row[3 + J_ARM_R] = math.pi / 2 + p["amp"] * math.sin(2 * math.pi * p["freq"] * t)
        row[3 + J_ARM_L] = 0.1
    return fn


def _recipe_walk(p):
    def fn(t, row):
        ph = 2 * math.pi * p["freq"] * t + p.get("phase", 0.0)
        row[0] = p["speed"] * t
        row[3 + J_HIP_L] = p["hip_amp"] * math.sin(ph)
        row[3 + J_HIP_R] = p["hip_amp"] * math.sin(ph + math.pi)
        row[3 + J_KNEE_L] = -p["knee_amp"] * (0.5 + 0.5 * math.sin(ph + math.pi / 2))
        row[3 + J_KNEE_R] = -p["knee_amp"] * (0.5 + 0.5 * math.sin(ph + 3 * math.pi / 2))
        row[3 + J_ARM_L] = 0.25 * math.sin(ph + math.pi)
        row[3 + J_ARM_R] = 0.25 * math.sin(ph)
        row[1] = STAND_HEIGHT - p["knee_amp"] * 0.05 * (1 + math.sin(2 * ph)) * 0.5
    return fn


def _recipe_jump(p):
    def fn(t, row):
        ph = (t * p["freq"]) % 1.0
        crouch = _smoothstep(ph / 0.3) if ph < 0.3 else _smoothstep((0.6 - ph) / 0.3)
        knee = -p["knee_amp"] * crouch
        row[3 + J_KNEE_L] = knee
        row[3 + J_KNEE_R] = knee
        row[3 + J_HIP_L] = -0.4 * knee
        row[3 + J_HIP_R] = -0.4 * knee
        air = math.sin(math.pi * (ph - 0.6) / 0.4) if ph >= 0.6 else 0.0
        row[1] = _leg_height(row[3 + J_HIP_L], knee) + p["height"] * max(0.0, air)
        row[3 + J_ARM_L] = 0.8 * crouch
        row[3 + J_ARM_R] = 0.8 * crouch
    return fn


def _recipe_crouch(p):
    def fn(t, row):
        depth = _smoothstep(t / p["sink"]) * (1.0 if t < p["hold"] else 1.0)
        knee = -p["knee_amp"] * depth
        hip = p["hip_amp"] * depth
        row[3 + J_KNEE_L] = row[3 + J_KNEE_R] = knee
        row[3 + J_HIP_L] = row[3 + J_HIP_R] = hip
        row[3 + J_TORSO] = -0.25 * depth
        row[1] = _leg_height(hip, knee)
    return fn


def _recipe_dance(p):
    def fn(t, row):
        ph = 2 * math.pi * p["freq"] * t
        row[3 + J_TORSO] = 0.25 * p["amp"] * math.sin(ph)
        row[3 + J_ARM_L] = 1.2 + p["amp"] * math.sin(ph)
        row[3 + J_ARM_R] = 1.2 + p["amp"] * math.sin(ph + math.pi)
        row[3 + J_HIP_L] = 0.15 * p["amp"] * math.sin(ph)
        row[3 + J_HIP_R] = -0.15 * p["amp"] * math.sin(ph)
        row[3 + J_NECK] = 0.2 * p["amp"] * math.sin(ph + 0.5)
    return fn


def _recipe_kick(p):
    def fn(t, row):
        ph = (t * p["freq"]) % 1.0
        swing = math.sin(math.pi * min(ph / 0.45, 1.0)) if ph < 0.45 else 0.0
        row[3 + J_HIP_R] = p["amp"] * swing
        row[3 + J_KNEE_R] = -0.5 * p["amp"] * max(0.0, swing - 0.3)
        row[3 + J_TORSO] = -0.25 * swing
        row[3 + J_ARM_L] = 0.5 * swing
    return fn


def _recipe_crawl(p):
    def fn(t, row):
        ph = 2 * math.pi * p["freq"] * t
        row[0] = p["speed"] * t
        row[1] = 0.42
        row[2] = -1.15
        row[3 + J_TORSO] = 0.35
        row[3 + J_NECK] = 0.5
        row[3 + J_HIP_L] = 0.9 + 0.25 * math.sin(ph)
        row[3 + J_HIP_R] = 0.9 + 0.25 * math.sin(ph + math.pi)
        row[3 + J_KNEE_L] = -1.4
        row[3 + J_KNEE_R] = -1.4
        row[3 + J_ARM_L] = 2.6 + 0.3 * math.sin(ph + math.pi)
        row[3 + J_ARM_R] = 2.6 + 0.3 * math.sin(ph)
    return fn


def _recipe_bow(p):
    def fn(t, row):
        cycle = _smoothstep(t / p["sink"]) - _smoothstep((t - p["hold"]) / p["sink"])
        row[3 + J_TORSO] = -p["amp"] * cycle
        row[3 + J_NECK] = -0.4 * p["amp"] * cycle
        row[3 + J_ARM_L] = 0.3 * cycle
        row[3 + J_ARM_R] = 0.3 * cycle
    return fn


_RECIPES = {
    "sway": (_recipe_sway, {"amp": 0.3, "freq": 0.5}),
    "raise_arms": (_recipe_raise_arms, {"amp": math.pi, "rise": 1.7}),
    "wave": (_recipe_wave, {"amp": 0.5, "freq": 0.8}),
    "walk": (_recipe_walk, {"speed": 0.7, "freq": 0.8, "hip_amp": 0.5, "knee_amp": 0.7}),
    "run": (_recipe_walk, {"speed": 1.6, "freq": 1.4, "hip_amp": 0.65, "knee_amp": 0.9}),
    "jump": (_recipe_jump, {"freq": 0.7, "knee_amp": 0.9, "height": 0.25}),
    "crouch": (_recipe_crouch, {"knee_amp": 0.9, "hip_amp": 0.5, "sink": 1.0, "hold": 2.0}),
    "dance": (_recipe_dance, {"amp": 0.7, "freq": 0.9}),
    "kick": (_recipe_kick, {"amp": 1.0, "freq": 0.6}),
    "crawl": (_recipe_crawl, {"speed": 0.4, "freq": 0.9}),
    "bow": (_recipe_bow, {"amp": 0.7, "sink": 0.9, "hold": 1.6}),
}

_CATEGORIES = {
    "sway": ("act_in_place", ("usual",)),
    "raise_arms": ("act_in_place", ("usual",)),
    "wave": ("act_in_place", ("dance",)),
    "walk": ("move_around", ("usual",)),
    "run": ("move_around", ("usual",)),
    "jump": ("combined", ("jump",)),
    "crouch": ("act_in_place", ("crawl",)),
    "dance": ("act_in_place", ("dance",)),
    "kick": ("act_in_place", ("attack",)),
    "crawl": ("move_around", ("crawl",)),
    "bow": ("act_in_place", ("usual",)),
}


def make_clip(recipe: str, clip_id: str, fps: float = 30.0, duration: float = 3.0,
              jitter_rng: np.random.Generator | None = None,
              categories: tuple[str, tuple[str, ...]] | None = None,
              **overrides) -> MotionClip:
    fn_builder, defaults = _RECIPES[recipe]
    params = dict(defaults)
    if jitter_rng is not None:
        for key, val in params.items():
            params[key] = val * float(jitter_rng.uniform(0.88, 1.12))
        if recipe in ("walk", "run"):
            params["phase"] = float(jitter_rng.uniform(0.0, 2 * math.pi))
    params.update(overrides)
    movement, styles = categories if categories else _CATEGORIES[recipe]
    return MotionClip(
        id=clip_id, fps=fps, frames=_frames(duration, fps, fn_builder(params)),
        movement_category=movement, style_categories=styles,
    )


# Recipe mix for the 93-clip standard library (counts sum to 93).
_STANDARD_MIX = [
    ("walk", 17), ("run", 11), ("dance", 12), ("wave", 10), ("jump", 9),
    ("raise_arms", 8), ("crawl", 7), ("kick", 7), ("bow", 6), ("crouch", 4),
    ("sway", 2),
]


def standard_library(seed: int = 0, fps: float = 30.0) -> list[MotionClip]:
    """93 clips across all movement/style categories, seeded jitter."""
    rng = np.random.default_rng(seed)
    clips = []
    for recipe, count in _STANDARD_MIX:
        for k in range(count):
            clips.append(make_clip(recipe, f"{recipe}_{k:03d}", fps=fps, jitter_rng=rng))
    return clips


def desk_library(fps: float = 30.0) -> list[MotionClip]:
    """Five gentle clips for fast end-to-end runs; covers four styles."""
    return [
        make_clip("sway", "sway_000", fps=fps),
        make_clip("raise_arms", "raise_arms_000", fps=fps),
        make_clip("wave", "wave_000", fps=fps),
        make_clip("crouch", "crouch_000", fps=fps, knee_amp=0.55, hip_amp=0.3),
        make_clip("kick", "kick_000", fps=fps, amp=0.7),
    ]


def write_library(clips: list[MotionClip], out_dir) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for clip in clips:
        write_clip(clip, os.path.join(out_dir, clip.id + ".clip"))
