"""Versioned binary checkpoint container.

Layout: 8-byte magic ``LSKCKPT1``, little-endian u32 manifest length, JSON
manifest (version, free-form meta, named parameter groups with array shapes
and payload offsets), then the concatenated raw little-endian float64
payloads. Writes are atomic (tmp file + rename). Documented in
``docs/checkpoint-format.md``.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

from .errors import CheckpointError
from .mlp import MlpParams
from .ppo import GaussianPolicyHead

MAGIC = b"LSKCKPT1"
VERSION = 1


def save_checkpoint(path, groups: dict[str, dict[str, np.ndarray]],
                    meta: dict | None = None) -> None:
    manifest: dict = {"version": VERSION, "meta": meta or {}, "groups": {}}
    payloads = []
    offset = 0
    for gname, arrays in groups.items():
        entry = {}
        for pname, arr in arrays.items():
            arr = np.ascontiguousarray(arr, dtype="<f8")
            entry[pname] = {"shape": list(arr.shape), "dtype": "<f8",
                            "offset": offset, "nbytes": arr.nbytes}
            payloads.append(arr.tobytes())
            offset += arr.nbytes
        manifest["groups"][gname] = entry
    blob = json.dumps(manifest, sort_keys=True).encode()

    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            for p in payloads:
                fh.write(p)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path) -> tuple[dict[str, dict[str, np.ndarray]], dict]:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise CheckpointError(f"{path}: bad magic {magic!r}")
        (blob_len,) = struct.unpack("<I", fh.read(4))
        manifest = json.loads(fh.read(blob_len))
        if manifest.get("version") != VERSION:
            raise CheckpointError(f"{path}: unsupported version {manifest.get('version')}")
        payload = fh.read()
    groups: dict[str, dict[str, np.ndarray]] = {}
    for gname, entry in manifest["groups"].items():
        arrays = {}
        for pname, info in entry.items():
            start = info["offset"]
            raw = payload[start:start + info["nbytes"]]
            if len(raw) != info["nbytes"]:
                raise CheckpointError(f"{path}: truncated payload for {gname}/{pname}")
            arrays[pname] = np.frombuffer(raw, dtype="<f8").reshape(info["shape"]).copy()
        groups[gname] = arrays
    return groups, manifest["meta"]


def mlp_to_arrays(params: MlpParams) -> dict[str, np.ndarray]:
    out = {}
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        out[f"w{l}"] = w
        out[f"b{l}"] = b
    return out


def mlp_meta(params: MlpParams) -> dict:
    return {"layer_sizes": list(params.layer_sizes), "activation": params.activation,
            "output_activation": params.output_activation}


def arrays_to_mlp(arrays: dict[str, np.ndarray], meta: dict) -> MlpParams:
    sizes = meta["layer_sizes"]
    n = len(sizes) - 1
    try:
        weights = [arrays[f"w{l}"] for l in range(n)]
        biases = [arrays[f"b{l}"] for l in range(n)]
    except KeyError as exc:
        raise CheckpointError(f"checkpoint missing layer array {exc}") from exc
    return MlpParams(list(sizes), weights, biases, meta["activation"],
                     meta["output_activation"])


def policy_to_arrays(policy: GaussianPolicyHead) -> dict[str, np.ndarray]:
    out = mlp_to_arrays(policy.net)
    out["log_std"] = policy.log_std
    return out


def arrays_to_policy(arrays: dict[str, np.ndarray], meta: dict) -> GaussianPolicyHead:
    net = arrays_to_mlp(arrays, meta)
    if "log_std" not in arrays:
        raise CheckpointError("checkpoint missing log_std for policy head")
    return GaussianPolicyHead(net=net, log_std=arrays["log_std"])
