"""Dense-network stack with manual reverse-mode gradients.

Forward/backward operate on batches (rows = samples). Besides parameter
gradients, the backward pass returns the gradient with respect to the input,
and :func:`gradient_penalty` differentiates the squared input-gradient norm
with respect to the parameters (the second reverse pass a gradient-penalty
regularizer needs).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

_HIDDEN_ACTS = ("relu", "tanh")
_OUTPUT_ACTS = ("none", "tanh", "sigmoid")


@dataclass
class MlpParams:
    """Weights/biases of a fully connected net; ``weights[l]`` is (out, in)."""

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"
    output_activation: str = "none"

    def __post_init__(self):
        if self.activation not in _HIDDEN_ACTS:
            raise ConfigError(f"unknown hidden activation {self.activation!r}")
        if self.output_activation not in _OUTPUT_ACTS:
            raise ConfigError(f"unknown output activation {self.output_activation!r}")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            expect = (self.layer_sizes[l + 1], self.layer_sizes[l])
            if w.shape != expect or b.shape != (expect[0],):
                raise ConfigError(f"layer {l}: weight shape {w.shape} != {expect}")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    def arrays(self) -> list[np.ndarray]:
        """Flat parameter list (weights then biases, layer order) for optimizers."""
        return list(self.weights) + list(self.biases)

    def copy(self) -> "MlpParams":
        return MlpParams(list(self.layer_sizes), [w.copy() for w in self.weights],
                         [b.copy() for b in self.biases], self.activation,
                         self.output_activation)


@dataclass
class MlpGrads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def arrays(self) -> list[np.ndarray]:
        return list(self.weights) + list(self.biases)

    def add_scaled(self, other: "MlpGrads", scale: float) -> None:
        for a, b in zip(self.weights, other.weights):
            a += scale * b
        for a, b in zip(self.biases, other.biases):
            a += scale * b


def zero_grads(params: MlpParams) -> MlpGrads:
    return MlpGrads([np.zeros_like(w) for w in params.weights],
                    [np.zeros_like(b) for b in params.biases])


def init_mlp(layer_sizes, rng: np.random.Generator, activation="relu",
             output_activation="none", out_scale=1.0) -> MlpParams:
    """He/Xavier-style init; ``out_scale`` shrinks the last layer (small
    initial policy outputs keep early rollouts near the reference pose)."""
    weights, biases = [], []
    n = len(layer_sizes) - 1
    for l in range(n):
        fan_in = layer_sizes[l]
        std = np.sqrt(2.0 / fan_in) if activation == "relu" else np.sqrt(1.0 / fan_in)
        if l == n - 1:
            std *= out_scale
        weights.append(rng.normal(0.0, std, (layer_sizes[l + 1], fan_in)))
        biases.append(np.zeros(layer_sizes[l + 1]))
    return MlpParams(list(layer_sizes), weights, biases, activation, output_activation)


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return z


def _act_prime(name: str, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "tanh":
        return 1.0 - h * h
    if name == "sigmoid":
        return h * (1.0 - h)
    return np.ones_like(z)


def _act_second(name: str, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return -2.0 * h * (1.0 - h * h)
    if name == "sigmoid":
        return h * (1.0 - h) * (1.0 - 2.0 * h)
    return np.zeros_like(z)


@dataclass
class ForwardCache:
    x: np.ndarray
    zs: list[np.ndarray] = field(default_factory=list)
    hs: list[np.ndarray] = field(default_factory=list)  # hs[0] = x, hs[l] = post-act


def mlp_forward(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, ForwardCache]:
    """Batched forward pass; accepts (d,) or (B, d) input."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[1] != params.in_dim:
        raise ConfigError(f"input dim {x.shape[1]} != expected {params.in_dim}")
    cache = ForwardCache(x=x, hs=[x])
    h = x
    n = params.n_layers
    for l in range(n):
        z = h @ params.weights[l].T + params.biases[l]
        name = params.activation if l < n - 1 else params.output_activation
        h = _act(name, z)
        cache.zs.append(z)
        cache.hs.append(h)
    out = h[0] if squeeze else h
    return out, cache


def _layer_act(params: MlpParams, l: int) -> str:
    return params.activation if l < params.n_layers - 1 else params.output_activation


def mlp_backward(params: MlpParams, cache: ForwardCache,
                 out_grad: np.ndarray) -> tuple[MlpGrads, np.ndarray]:
    """Exact reverse-mode gradients for parameters and the input."""
    dy = np.asarray(out_grad, dtype=np.float64)
    squeeze = dy.ndim == 1
    if squeeze:
        dy = dy[None, :]
    grads = zero_grads(params)
    dh = dy
    for l in range(params.n_layers - 1, -1, -1):
        fp = _act_prime(_layer_act(params, l), cache.zs[l], cache.hs[l + 1])
        delta = dh * fp
        grads.weights[l][:] = delta.T @ cache.hs[l]
        grads.biases[l][:] = delta.sum(axis=0)
        dh = delta @ params.weights[l]
    dx = dh[0] if squeeze else dh
    return grads, dx


def mlp_input_gradient(params: MlpParams, cache: ForwardCache) -> tuple[np.ndarray, list[np.ndarray]]:
    """Per-sample gradient of the scalar output w.r.t. the input.

    Only valid for out_dim == 1. Returns ``(g, us)`` where ``g`` is (B, d_in)
    and ``us[l]`` = dy/dz_l, kept for :func:`gradient_penalty`.
    """
    if params.out_dim != 1:
        raise ConfigError("input gradient needs a scalar-output network")
    n = params.n_layers
    us: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    u = _act_prime(_layer_act(params, n - 1), cache.zs[n - 1], cache.hs[n])
    us[n - 1] = u
    for l in range(n - 1, 0, -1):
        u = (u @ params.weights[l]) * _act_prime(_layer_act(params, l - 1),
                                                 cache.zs[l - 1], cache.hs[l])
        us[l - 1] = u
    g = us[0] @ params.weights[0]
    return g, us


def gradient_penalty(params: MlpParams, cache: ForwardCache,
                     input_slice: slice | None = None) -> tuple[float, MlpGrads]:
    """Mean squared input-gradient norm of a scalar net, with parameter grads.

    ``input_slice`` restricts the penalized coordinates (e.g. the state part
    of a state+latent input). The value is
    ``mean_b || d y_b / d x_b [slice] ||^2`` and the returned grads are its
    exact derivative w.r.t. every weight and bias (second reverse pass).
    """
    g, us = mlp_input_gradient(params, cache)
    batch = g.shape[0]
    mask = np.zeros(g.shape[1])
    mask[input_slice if input_slice is not None else slice(None)] = 1.0
    value = float(np.mean(np.sum((g * mask) ** 2, axis=1)))

    grads = zero_grads(params)
    n = params.n_layers
    dz = [np.zeros_like(z) for z in cache.zs]

    # dL/dg, then walk the input-gradient recursion g = u_0 W_0,
    # u_{l-1} = (u_l W_l) * act'(z_{l-1}).
    r = (2.0 / batch) * g * mask
    grads.weights[0] += us[0].T @ r
    du = r @ params.weights[0].T
    for l in range(1, n):
        uw = us[l] @ params.weights[l]
        fp = _act_prime(_layer_act(params, l - 1), cache.zs[l - 1], cache.hs[l])
        t = du * fp
        grads.weights[l] += us[l].T @ t
        dz[l - 1] += du * uw * _act_second(_layer_act(params, l - 1),
                                           cache.zs[l - 1], cache.hs[l])
        du = t @ params.weights[l].T
    dz[n - 1] += du * _act_second(_layer_act(params, n - 1), cache.zs[n - 1], cache.hs[n])

    # Forward-graph backprop of the accumulated dL/dz contributions.
    dh = np.zeros_like(cache.hs[n])
    for l in range(n - 1, -1, -1):
        delta = dz[l] + dh * _act_prime(_layer_act(params, l), cache.zs[l], cache.hs[l + 1])
        grads.weights[l] += delta.T @ cache.hs[l]
        grads.biases[l] += delta.sum(axis=0)
        dh = delta @ params.weights[l]
    return value, grads


def l2_normalize(x: np.ndarray, eps: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise unit normalization; returns (y, norms) for the backward pass."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    norms = np.maximum(np.linalg.norm(x, axis=1, keepdims=True), eps)
    y = x / norms
    if squeeze:
        return y[0], norms
    return y, norms


def l2_normalize_backward(y: np.ndarray, norms: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Gradient through row-wise normalization: dx = (dy - y (y.dy)) / n."""
    squeeze = dy.ndim == 1
    if squeeze:
        dy = dy[None, :]
        y = y[None, :]
    dx = (dy - y * np.sum(dy * y, axis=1, keepdims=True)) / norms
    return dx[0] if squeeze else dx
