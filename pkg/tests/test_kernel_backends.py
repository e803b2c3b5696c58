"""The native and pure kernels must agree bit for bit."""

import numpy as np
import pytest

from latentskill import kernels
from latentskill.bodies import LINK_PARENT, LINK_REST, NUM_JOINTS, default_body
from latentskill.kernels import pure
from latentskill.simstate import WorldParams, pack_objects
from latentskill.physics import ball, hinged_panel

native = pytest.importorskip("latentskill.kernels._native")


def _kernel_args(rng, with_objects):
    spec = default_body()
    world = WorldParams()
    q = np.concatenate((rng.uniform(-1, 1, 2) + [0.0, 0.9],
                        [rng.uniform(-0.5, 0.5)],
                        rng.uniform(-1, 1, NUM_JOINTS)))
    v = rng.uniform(-2, 2, 3 + NUM_JOINTS)
    targets = rng.uniform(-1, 1, NUM_JOINTS)
    objects = []
    if with_objects:
        objects = [ball(q[0] + 0.3, 0.11, vel=rng.uniform(-1, 1, 2)),
                   hinged_panel(q[0] + 0.6, 1.6)]
    obj_kinds, obj_data = pack_objects(objects)
    return (q, v, targets,
            spec.link_lengths, spec.link_masses,
            spec.pd_gains[:, 0].copy(), spec.pd_gains[:, 1].copy(), spec.damping,
            spec.joint_limits[:, 0].copy(), spec.joint_limits[:, 1].copy(),
            spec.joint_inertias, spec.root_mass, spec.root_inertia,
            spec.contact_radius, LINK_PARENT, LINK_REST, world.pack(),
            obj_kinds, obj_data, 1.0 / 120.0, 4)


@pytest.mark.parametrize("with_objects", [False, True])
def test_step_agent_bitwise_parity(with_objects):
    rng = np.random.default_rng(7)
    for trial in range(50):
        args = _kernel_args(rng, with_objects)
        q1, v1, d1 = args[0].copy(), args[1].copy(), args[18].copy()
        q2, v2, d2 = args[0].copy(), args[1].copy(), args[18].copy()
        s1 = pure.step_agent(q1, v1, *args[2:18], d1, *args[19:])
        s2 = native.step_agent(q2, v2, *args[2:18], d2, *args[19:])
        assert s1 == s2 == 0
        assert np.array_equal(q1, q2), f"trial {trial}: q mismatch"
        assert np.array_equal(v1, v2), f"trial {trial}: v mismatch"
        assert np.array_equal(d1, d2), f"trial {trial}: object mismatch"


def test_raster_bitwise_parity():
    rng = np.random.default_rng(11)
    for _ in range(30):
        a = np.zeros((48, 48))
        b = np.zeros((48, 48))
        x0, y0, x1, y1 = rng.uniform(-10, 58, 4)
        hw, aa = rng.uniform(0.5, 4.0), 1.0
        pure.raster_capsule(a, x0, y0, x1, y1, hw, aa)
        native.raster_capsule(b, x0, y0, x1, y1, hw, aa)
        assert np.array_equal(a, b)
        cx, cy, r = rng.uniform(-5, 53, 2).tolist() + [rng.uniform(0.5, 8.0)]
        pure.raster_disc(a, cx, cy, r, aa)
        native.raster_disc(b, cx, cy, r, aa)
        assert np.array_equal(a, b)


def test_backend_reported():
    assert kernels.BACKEND in ("native", "pure")
