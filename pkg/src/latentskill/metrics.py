"""Training metrics: JSONL records, one per iteration.

Deterministic scalars go to ``metrics.jsonl`` (canonical JSON, sorted keys,
so identical runs produce identical bytes). Wall-clock timings are kept out
of that file on purpose and land in ``timing.jsonl`` next to it.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

from .errors import ConfigError


@dataclass
class MetricsRecord:
    iteration: int
    wall_time: float
    scalars: dict[str, float] = field(default_factory=dict)


class MetricsWriter:
    def __init__(self, out_dir, name: str = "metrics"):
        os.makedirs(out_dir, exist_ok=True)
        self.path = os.path.join(out_dir, f"{name}.jsonl")
        self.timing_path = os.path.join(out_dir, "timing.jsonl")
        self._fh = open(self.path, "w")
        self._timing_fh = open(self.timing_path, "w")
        self._start = time.monotonic()
        self._last_iteration = None

    def write(self, iteration: int, scalars: dict) -> MetricsRecord:
        if self._last_iteration is not None and iteration <= self._last_iteration:
            raise ConfigError("metrics iterations must increase monotonically")
        self._last_iteration = iteration
        record = {"iteration": iteration}
        for key, val in scalars.items():
            record[key] = float(val) if isinstance(val, (int, float)) else val
        self._fh.write(json.dumps(record, sort_keys=True) + "\n")
        self._fh.flush()
        wall = time.monotonic() - self._start
        self._timing_fh.write(json.dumps({"iteration": iteration, "wall_time": wall}) + "\n")
        self._timing_fh.flush()
        return MetricsRecord(iteration=iteration, wall_time=wall, scalars=dict(scalars))

    def close(self) -> None:
        self._fh.close()
        self._timing_fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_metrics(path) -> list[dict]:
    records = []
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{ln}: malformed JSONL ({exc})") from exc
    if not records:
        raise ConfigError(f"{path}: empty metrics file")
    return records
