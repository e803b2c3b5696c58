import numpy as np
import pytest

from latentskill.errors import ConfigError
from latentskill.mlp import (
    MlpParams,
    gradient_penalty,
    init_mlp,
    l2_normalize,
    l2_normalize_backward,
    mlp_backward,
    mlp_forward,
    mlp_input_gradient,
)


def flatten(arrays):
    return np.concatenate([a.ravel() for a in arrays])


def fd_param_grads(params, x, loss_fn, h=1e-5):
    """Central finite differences of a scalar loss over every parameter."""
    grads = []
    for arr in params.arrays():
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gflat = g.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp = loss_fn(params, x)
            flat[i] = orig - h
            lm = loss_fn(params, x)
            flat[i] = orig
            gflat[i] = (lp - lm) / (2 * h)
        grads.append(g)
    return grads


class TestForward:
    def test_zero_weights_relu(self):
        params = MlpParams([3, 4, 2], [np.zeros((4, 3)), np.zeros((2, 4))],
                           [np.zeros(4), np.zeros(2)], "relu", "none")
        out, _ = mlp_forward(params, np.ones(3))
        assert np.array_equal(out, np.zeros(2))

    def test_scalar_affine(self):
        params = MlpParams([1, 1], [np.array([[2.0]])], [np.array([1.0])], "relu", "none")
        out, _ = mlp_forward(params, np.array([3.0]))
        assert out[0] == 7.0

    def test_deterministic(self, rng):
        params = init_mlp([5, 8, 3], rng, "tanh")
        x = rng.normal(size=5)
        a, _ = mlp_forward(params, x)
        b, _ = mlp_forward(params, x)
        assert np.array_equal(a, b)

    def test_shape_mismatch_rejected(self, rng):
        params = init_mlp([5, 8, 3], rng)
        with pytest.raises(ConfigError):
            mlp_forward(params, np.zeros(4))


class TestBackward:
    def test_linear_input_grad(self):
        params = MlpParams([1, 1], [np.array([[2.0]])], [np.array([0.0])], "relu", "none")
        _, cache = mlp_forward(params, np.array([1.5]))
        _, dx = mlp_backward(params, cache, np.array([1.0]))
        assert dx[0] == 2.0

    @pytest.mark.parametrize("hidden_act,out_act", [("relu", "none"), ("tanh", "sigmoid"),
                                                    ("tanh", "none"), ("relu", "tanh")])
    def test_grads_match_finite_differences(self, hidden_act, out_act, rng):
        params = init_mlp([4, 6, 5, 2], rng, hidden_act, out_act)
        x = rng.normal(size=(3, 4))
        w_out = rng.normal(size=2)

        def loss(p, xin):
            out, _ = mlp_forward(p, xin)
            return float(np.sum(out @ w_out))

        out, cache = mlp_forward(params, x)
        grads, dx = mlp_backward(params, cache, np.tile(w_out, (3, 1)))

        fd = fd_param_grads(params, x, loss)
        ana = flatten(grads.arrays())
        num = flatten(fd)
        denom = np.maximum(np.abs(num), 1e-3)
        assert np.max(np.abs(ana - num) / denom) < 1e-4

        # input gradients
        fdx = np.zeros_like(x)
        h = 1e-5
        for i in np.ndindex(x.shape):
            xp = x.copy()
            xp[i] += h
            xm = x.copy()
            xm[i] -= h
            fdx[i] = (loss(params, xp) - loss(params, xm)) / (2 * h)
        denom = np.maximum(np.abs(fdx), 1e-3)
        assert np.max(np.abs(dx - fdx) / denom) < 1e-4


class TestGradientPenalty:
    def test_linear_discriminator_closed_form(self):
        w = np.array([[1.5, -2.0, 0.5]])
        params = MlpParams([3, 1], [w.copy()], [np.array([0.3])], "relu", "none")
        _, cache = mlp_forward(params, np.random.default_rng(0).normal(size=(4, 3)))
        value, _ = gradient_penalty(params, cache)
        assert abs(value - float(np.sum(w ** 2))) < 1e-12
        value_sliced, _ = gradient_penalty(params, cache, input_slice=slice(0, 2))
        assert abs(value_sliced - float(np.sum(w[0, :2] ** 2))) < 1e-12

    def test_penalty_grads_match_finite_differences(self, rng):
        params = init_mlp([4, 5, 4, 1], rng, "tanh", "none")
        x = rng.normal(size=(3, 4))
        sl = slice(0, 3)

        def gp_value(p, xin):
            _, cache = mlp_forward(p, xin)
            val, _ = gradient_penalty(p, cache, input_slice=sl)
            return val

        _, cache = mlp_forward(params, x)
        _, grads = gradient_penalty(params, cache, input_slice=sl)
        fd = fd_param_grads(params, x, gp_value)
        ana = flatten(grads.arrays())
        num = flatten(fd)
        denom = np.maximum(np.abs(num), 1e-3)
        assert np.max(np.abs(ana - num) / denom) < 1e-4

    def test_input_gradient_shape(self, rng):
        params = init_mlp([6, 4, 1], rng, "relu")
        _, cache = mlp_forward(params, rng.normal(size=(5, 6)))
        g, _ = mlp_input_gradient(params, cache)
        assert g.shape == (5, 6)
        with pytest.raises(ConfigError):
            mlp_input_gradient(init_mlp([3, 4, 2], rng), mlp_forward(init_mlp([3, 4, 2], rng), np.zeros(3))[1])


class TestNormalize:
    def test_unit_norm(self, rng):
        y, _ = l2_normalize(rng.normal(size=(10, 4)))
        np.testing.assert_allclose(np.linalg.norm(y, axis=1), 1.0, atol=1e-12)

    def test_backward_matches_fd(self, rng):
        x = rng.normal(size=(3, 5))
        w = rng.normal(size=5)

        def loss(xin):
            y, _ = l2_normalize(xin)
            return float(np.sum(y @ w))

        y, norms = l2_normalize(x)
        dx = l2_normalize_backward(y, norms, np.tile(w, (3, 1)))
        h = 1e-6
        for i in np.ndindex(x.shape):
            xp = x.copy()
            xp[i] += h
            xm = x.copy()
            xm[i] -= h
            fd = (loss(xp) - loss(xm)) / (2 * h)
            assert abs(dx[i] - fd) < 1e-5
