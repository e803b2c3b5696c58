"""Remote encoder client: JSON over HTTP with record/replay fixtures.

Protocol (see ``docs/encoder-protocol.md``): POST ``{endpoint}/encode`` with
``{"type": "image"|"text", "data": <base64 PGM or raw text>}``; the service
answers ``{"embedding": [floats]}``. Replay mode never touches the network:
requests are looked up by the SHA-256 of their canonical JSON in a JSONL
fixture file, which record mode appends to.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import time
import urllib.error
import urllib.request

import numpy as np

from .errors import ConfigError, ProviderError, ReplayCacheMiss
from .rendering import CameraSpec, Frame, write_pgm
from .simstate import SimState

MODES = ("live", "record", "replay")


def request_key(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


class RemoteEncoderClient:
    def __init__(self, endpoint: str | None = None, mode: str = "live",
                 fixtures_path=None, timeout: float = 10.0, retries: int = 1,
                 backoff: float = 0.2):
        if mode not in MODES:
            raise ConfigError(f"unknown client mode {mode!r}")
        if mode in ("live", "record") and not endpoint:
            raise ConfigError(f"{mode} mode needs an endpoint URL")
        if mode in ("record", "replay") and fixtures_path is None:
            raise ConfigError(f"{mode} mode needs a fixtures path")
        self.endpoint = endpoint.rstrip("/") if endpoint else None
        self.mode = mode
        self.fixtures_path = fixtures_path
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._cache: dict[str, dict] = {}
        if mode == "replay":
            self._load_fixtures()

    def _load_fixtures(self) -> None:
        try:
            with open(self.fixtures_path) as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    entry = json.loads(line)
                    self._cache[entry["key"]] = entry["response"]
        except FileNotFoundError as exc:
            raise ConfigError(f"replay fixtures not found: {self.fixtures_path}") from exc

    def _post(self, payload: dict) -> dict:
        body = json.dumps(payload).encode()
        req = urllib.request.Request(
            self.endpoint + "/encode", data=body,
            headers={"Content-Type": "application/json"}, method="POST")
        last_err = None
        for attempt in range(self.retries + 1):
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    return json.loads(resp.read())
            except (urllib.error.URLError, TimeoutError, json.JSONDecodeError) as exc:
                last_err = exc
                if attempt < self.retries:
                    time.sleep(self.backoff * (attempt + 1))
        raise ProviderError(f"encoder request failed after retries: {last_err}")

    def _encode(self, payload: dict) -> np.ndarray:
        key = request_key(payload)
        if self.mode == "replay":
            if key not in self._cache:
                raise ReplayCacheMiss(f"no recorded response for request {key}")
            response = self._cache[key]
        else:
            response = self._post(payload)
            if self.mode == "record":
                with open(self.fixtures_path, "a") as fh:
                    fh.write(json.dumps({"key": key, "request": payload,
                                         "response": response}) + "\n")
        if "embedding" not in response:
            raise ProviderError(f"malformed encoder response: {response}")
        vec = np.asarray(response["embedding"], dtype=np.float64)
        norm = float(np.linalg.norm(vec))
        if not np.isfinite(norm) or norm == 0.0:
            raise ProviderError("encoder returned a zero or non-finite embedding")
        return vec / norm

    def encode_image(self, pgm_bytes: bytes) -> np.ndarray:
        return self._encode({"type": "image",
                             "data": base64.b64encode(pgm_bytes).decode()})

    def encode_text(self, text: str) -> np.ndarray:
        return self._encode({"type": "text", "data": text})


def frame_to_pgm_bytes(frame: Frame) -> bytes:
    buf = io.BytesIO()
    data = np.clip(np.rint(frame.pixels * 255.0), 0, 255).astype(np.uint8)
    buf.write(f"P5\n{frame.width} {frame.height}\n255\n".encode())
    buf.write(data.tobytes())
    return buf.getvalue()


class RemoteProvider:
    """Embedding provider speaking to an external encoder service."""

    def __init__(self, client: RemoteEncoderClient, body_spec, camera: CameraSpec,
                 width: int = 64, height: int = 64):
        from .rendering import render

        self.client = client
        self.body_spec = body_spec
        self.camera = camera
        self.width = width
        self.height = height
        self._render = render

    def encode_state(self, state: SimState) -> np.ndarray:
        frame = self._render(state, [], self.camera, self.body_spec,
                             self.width, self.height)
        return self.client.encode_image(frame_to_pgm_bytes(frame))

    def encode_text(self, instruction: str) -> np.ndarray:
        return self.client.encode_text(instruction)
