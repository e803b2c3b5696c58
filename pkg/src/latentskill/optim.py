"""Adam optimizer over flat lists of parameter arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0


def adam_init(arrays: list[np.ndarray]) -> AdamState:
    return AdamState(m=[np.zeros_like(a) for a in arrays],
                     v=[np.zeros_like(a) for a in arrays])


def adam_update(arrays: list[np.ndarray], grads: list[np.ndarray], state: AdamState,
                lr: float, betas: tuple[float, float] = (0.9, 0.999),
                eps: float = 1e-8) -> tuple[list[np.ndarray], AdamState]:
    """One Adam step; ``arrays`` are updated in place and returned."""
    if len(arrays) != len(grads) or len(arrays) != len(state.m):
        raise ConfigError("adam_update: mismatched parameter/gradient lists")
    b1, b2 = betas
    state.t += 1
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for a, g, m, v in zip(arrays, grads, state.m, state.v):
        if a.shape != g.shape:
            raise ConfigError(f"adam_update: shape mismatch {a.shape} vs {g.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        a -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return arrays, state
