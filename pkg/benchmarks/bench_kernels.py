#!/usr/bin/env python3
"""Benchmark the native kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [n_steps]
"""

import sys
import time

import numpy as np

from latentskill.bodies import LINK_PARENT, LINK_REST, NUM_JOINTS, default_body
from latentskill.kernels import pure
from latentskill.simstate import WorldParams, pack_objects
from latentskill.physics import ball

try:
    from latentskill.kernels import _native as native
except ImportError:
    native = None


def bench_step(impl, n_steps):
    spec = default_body()
    world = WorldParams()
    rng = np.random.default_rng(0)
    q = np.concatenate(([0.0, 0.85, 0.0], np.zeros(NUM_JOINTS)))
    v = np.zeros(3 + NUM_JOINTS)
    targets = rng.uniform(-0.5, 0.5, NUM_JOINTS)
    obj_kinds, obj_data = pack_objects([ball(0.5, 0.11)])
    args = (spec.link_lengths, spec.link_masses,
            spec.pd_gains[:, 0].copy(), spec.pd_gains[:, 1].copy(), spec.damping,
            spec.joint_limits[:, 0].copy(), spec.joint_limits[:, 1].copy(),
            spec.joint_inertias, spec.root_mass, spec.root_inertia,
            spec.contact_radius, LINK_PARENT, LINK_REST, world.pack())
    t0 = time.perf_counter()
    for _ in range(n_steps):
        impl.step_agent(q, v, targets, *args, obj_kinds, obj_data, 1.0 / 120.0, 4)
    return time.perf_counter() - t0


def bench_raster(impl, n_frames):
    rng = np.random.default_rng(0)
    segs = rng.uniform(0, 63, (9, 4))
    t0 = time.perf_counter()
    for _ in range(n_frames):
        img = np.zeros((64, 64))
        for x0, y0, x1, y1 in segs:
            impl.raster_capsule(img, x0, y0, x1, y1, 0.7, 1.0)
        impl.raster_disc(img, 32.0, 32.0, 1.2, 1.0)
    return time.perf_counter() - t0


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
    print(f"physics control steps (4 substeps each, 1 ball): n={n}")
    t_pure = bench_step(pure, n)
    print(f"  pure   {t_pure:8.3f}s  ({1e6 * t_pure / n:7.1f} us/step)")
    if native is not None:
        t_nat = bench_step(native, n)
        print(f"  native {t_nat:8.3f}s  ({1e6 * t_nat / n:7.1f} us/step)")
        print(f"  speedup: {t_pure / t_nat:.1f}x")
    else:
        print("  native kernel not built")

    m = max(1, n // 10)
    print(f"64x64 frame rasterization: n={m}")
    t_pure = bench_raster(pure, m)
    print(f"  pure   {t_pure:8.3f}s  ({1e6 * t_pure / m:7.1f} us/frame)")
    if native is not None:
        t_nat = bench_raster(native, m)
        print(f"  native {t_nat:8.3f}s  ({1e6 * t_nat / m:7.1f} us/frame)")
        print(f"  speedup: {t_pure / t_nat:.1f}x")


if __name__ == "__main__":
    main()
