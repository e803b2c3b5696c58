import numpy as np
import pytest

from latentskill.checkpoints import (
    arrays_to_mlp,
    arrays_to_policy,
    load_checkpoint,
    mlp_meta,
    mlp_to_arrays,
    policy_to_arrays,
    save_checkpoint,
)
from latentskill.errors import CheckpointError
from latentskill.mlp import init_mlp, mlp_forward
from latentskill.ppo import init_policy


def test_roundtrip_groups_and_meta(tmp_path, rng):
    groups = {
        "encoder": {"w0": rng.normal(size=(4, 3)), "b0": rng.normal(size=4)},
        "scalars": {"x": np.array([1.5])},
    }
    meta = {"latent_dim": 16, "note": "fixture"}
    path = tmp_path / "ckpt.bin"
    save_checkpoint(path, groups, meta)
    loaded, got_meta = load_checkpoint(path)
    assert got_meta == meta
    for g, arrays in groups.items():
        for name, arr in arrays.items():
            assert np.array_equal(loaded[g][name], arr)


def test_mlp_roundtrip(tmp_path, rng):
    params = init_mlp([5, 7, 2], rng, "tanh", "sigmoid")
    path = tmp_path / "mlp.bin"
    save_checkpoint(path, {"net": mlp_to_arrays(params)}, mlp_meta(params))
    groups, meta = load_checkpoint(path)
    back = arrays_to_mlp(groups["net"], meta)
    x = rng.normal(size=5)
    a, _ = mlp_forward(params, x)
    b, _ = mlp_forward(back, x)
    assert np.array_equal(a, b)


def test_policy_roundtrip(tmp_path, rng):
    policy = init_policy(6, 3, [8], rng)
    path = tmp_path / "pol.bin"
    save_checkpoint(path, {"policy": policy_to_arrays(policy)}, mlp_meta(policy.net))
    groups, meta = load_checkpoint(path)
    back = arrays_to_policy(groups["policy"], meta)
    assert np.array_equal(back.log_std, policy.log_std)
    obs = rng.normal(size=(4, 6))
    np.testing.assert_array_equal(back.mean(obs), policy.mean(obs))


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOTACKPT" + b"\x00" * 32)
    with pytest.raises(CheckpointError):
        load_checkpoint(path)
