"""Deterministic planar physics: PD-driven articulated agent plus scene objects.

Integration is semi-implicit Euler at ``substeps`` internal steps per control
step (default 4 substeps at 30 Hz control = 120 Hz internal). Ground contact
uses penalty springs with Coulomb-capped viscous friction; agent-object
contact is resolved with restitution impulses. The inner loop lives in
:mod:`latentskill.kernels`.
"""

from __future__ import annotations

import math

import numpy as np
import yaml

from . import kernels
from .bodies import (
    BodySpec,
    LINK_PARENT,
    LINK_REST,
    NUM_JOINTS,
    default_body,
    head_endpoint,
    standing_root_height,
)
from .errors import ConfigError, InvalidStateError, SimulationDiverged
from .simstate import (
    Action,
    SceneObject,
    SimState,
    WorldParams,
    pack_objects,
    unpack_objects,
)

DEFAULT_CONTROL_DT = 1.0 / 30.0
DEFAULT_SUBSTEPS = 4


class Simulator:
    """One agent in one world; stateless between calls except through SimState."""

    def __init__(self, spec: BodySpec | None = None, world: WorldParams | None = None,
                 substeps: int = DEFAULT_SUBSTEPS):
        if substeps < 1:
            raise ConfigError("substeps must be >= 1")
        self.spec = spec if spec is not None else default_body()
        self.world = world if world is not None else WorldParams()
        self.substeps = int(substeps)
        self._world_packed = self.world.pack()

    def step(self, state: SimState, action: Action, objects: list[SceneObject] | None = None,
             dt: float = DEFAULT_CONTROL_DT) -> tuple[SimState, list[SceneObject]]:
        """Advance one control step; returns the new state and object list."""
        if dt <= 0:
            raise ConfigError("dt must be positive")
        state.require_finite("input state")
        target = np.asarray(action.target_joint_pos, dtype=np.float64)
        if target.shape != (NUM_JOINTS,):
            raise ConfigError(
                f"action has {target.shape} targets, body has {NUM_JOINTS} joints")
        if not np.all(np.isfinite(target)):
            raise InvalidStateError("action contains non-finite targets")
        target = self.spec.clamp_joints(target)

        objects = list(objects) if objects else []
        q, v = state.pack()
        obj_kinds, obj_data = pack_objects(objects)
        status = kernels.step_agent(
            q, v, target,
            self.spec.link_lengths, self.spec.link_masses,
            self.spec.pd_gains[:, 0].copy(), self.spec.pd_gains[:, 1].copy(),
            self.spec.damping,
            self.spec.joint_limits[:, 0].copy(), self.spec.joint_limits[:, 1].copy(),
            self.spec.joint_inertias,
            self.spec.root_mass, self.spec.root_inertia, self.spec.contact_radius,
            LINK_PARENT, LINK_REST, self._world_packed,
            obj_kinds, obj_data, dt / self.substeps, self.substeps,
        )
        if status != 0:
            raise SimulationDiverged(
                f"simulation diverged at t={state.time:.3f}s (|value| > 1e6)")
        return SimState.unpack(q, v, state.time + dt), unpack_objects(objects, obj_data)

    def reset(self, init: str | SimState = "default_stand", seed: int = 0,
              noise: float = 0.0) -> SimState:
        """Initial state: a statically stable stand, optionally with seeded noise."""
        if isinstance(init, SimState):
            if not init.is_finite():
                raise InvalidStateError("from_pose init contains non-finite values")
            return init.copy()
        if init != "default_stand":
            raise ConfigError(f"unknown init mode {init!r}")
        root_y = standing_root_height(self.spec, self.world.ground_stiffness,
                                      self.world.gravity)
        state = SimState(
            root_pos=np.array([0.0, root_y]),
            root_rot=0.0,
            joint_pos=np.zeros(NUM_JOINTS),
            root_vel=np.zeros(2),
            root_ang_vel=0.0,
            joint_vel=np.zeros(NUM_JOINTS),
            time=0.0,
        )
        if noise > 0.0:
            rng = np.random.default_rng(seed)
            state.joint_pos = self.spec.clamp_joints(
                state.joint_pos + rng.normal(0.0, noise, NUM_JOINTS))
            state.root_pos[1] += abs(rng.normal(0.0, noise))
        return state

    def head_height(self, state: SimState) -> float:
        """World-frame y of the head link endpoint."""
        return float(head_endpoint(self.spec, state.root_pos, state.root_rot,
                                   state.joint_pos)[1])

    def mechanical_energy(self, state: SimState) -> float:
        """Kinetic + gravitational energy under this engine's decoupled-inertia model."""
        m = self.spec.total_mass
        e = 0.5 * m * float(state.root_vel @ state.root_vel)
        e += m * self.world.gravity * float(state.root_pos[1])
        e += 0.5 * self.spec.root_inertia * state.root_ang_vel ** 2
        e += 0.5 * float(self.spec.joint_inertias @ (state.joint_vel ** 2))
        return e


def load_scene_config(path) -> dict:
    """Parse the versioned body/world/scene YAML config.

    Returns a dict with keys ``spec``, ``world``, ``objects``, ``substeps``,
    ``dt``. Unknown fields are rejected.
    """
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: scene config must be a mapping")
    if raw.get("version") != 1:
        raise ConfigError(f"{path}: unsupported scene config version {raw.get('version')!r}")
    allowed = {"version", "body", "world", "objects", "sim"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown top-level fields {sorted(unknown)}")

    body_raw = raw.get("body") or {}
    spec = default_body()
    body_fields = {"link_lengths", "link_masses", "joint_limits", "pd_gains", "damping",
                   "root_mass", "root_inertia", "joint_inertias", "contact_radius"}
    unknown = set(body_raw) - body_fields
    if unknown:
        raise ConfigError(f"{path}: unknown body fields {sorted(unknown)}")
    if body_raw:
        base = {
            "link_lengths": spec.link_lengths,
            "link_masses": spec.link_masses,
            "joint_limits": spec.joint_limits,
            "pd_gains": spec.pd_gains,
            "damping": spec.damping,
            "root_mass": spec.root_mass,
            "root_inertia": spec.root_inertia,
            "contact_radius": spec.contact_radius,
        }
        base.update(body_raw)
        spec = BodySpec(**base)

    world_raw = raw.get("world") or {}
    world_fields = {f.name for f in WorldParams.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    unknown = set(world_raw) - world_fields
    if unknown:
        raise ConfigError(f"{path}: unknown world fields {sorted(unknown)}")
    world = WorldParams(**world_raw)

    objects = []
    for i, entry in enumerate(raw.get("objects") or []):
        try:
            objects.append(SceneObject(
                kind=entry["kind"],
                pose=np.asarray(entry["pose"], dtype=np.float64),
                vel=np.asarray(entry["vel"], dtype=np.float64),
                params={k: float(v) for k, v in entry["params"].items()},
            ))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"{path}: objects[{i}] malformed: {exc}") from exc

    sim_raw = raw.get("sim") or {}
    unknown = set(sim_raw) - {"substeps", "dt"}
    if unknown:
        raise ConfigError(f"{path}: unknown sim fields {sorted(unknown)}")
    return {
        "spec": spec,
        "world": world,
        "objects": objects,
        "substeps": int(sim_raw.get("substeps", DEFAULT_SUBSTEPS)),
        "dt": float(sim_raw.get("dt", DEFAULT_CONTROL_DT)),
    }


def ball(x: float, y: float, radius: float = 0.11, mass: float = 0.45,
         vel=(0.0, 0.0)) -> SceneObject:
    return SceneObject(kind="ball", pose=np.array([x, y]), vel=np.asarray(vel, dtype=np.float64),
                       params={"radius": radius, "mass": mass})


def hinged_panel(px: float, py: float, angle: float = -math.pi / 2, length: float = 0.9,
                 mass: float = 8.0, ang_vel: float = 0.0) -> SceneObject:
    return SceneObject(kind="hinged_panel", pose=np.array([px, py, angle]),
                       vel=np.array([ang_vel]), params={"length": length, "mass": mass})
