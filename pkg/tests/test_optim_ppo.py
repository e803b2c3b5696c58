import copy

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latentskill.errors import ConfigError
from latentskill.mlp import init_mlp, mlp_forward
from latentskill.optim import adam_init, adam_update
from latentskill.ppo import (
    GaussianPolicyHead,
    PpoConfig,
    RolloutBuffer,
    clipped_surrogate,
    gae,
    init_policy,
    make_value_net,
    policy_optimizer,
    ppo_update,
    value_optimizer,
)


class TestAdam:
    def test_zero_gradient_no_change(self, rng):
        arrays = [rng.normal(size=(3, 2)), rng.normal(size=4)]
        before = [a.copy() for a in arrays]
        state = adam_init(arrays)
        adam_update(arrays, [np.zeros_like(a) for a in arrays], state, lr=1e-2)
        for a, b in zip(arrays, before):
            assert np.array_equal(a, b)

    def test_constant_gradient_step_approaches_lr(self):
        arrays = [np.zeros(1)]
        state = adam_init(arrays)
        grad = [np.array([3.7])]
        lr = 1e-3
        prev = arrays[0].copy()
        for _ in range(200):
            prev = arrays[0].copy()
            adam_update(arrays, grad, state, lr=lr)
        assert abs(abs(prev[0] - arrays[0][0]) - lr) < 1e-5

    def test_deterministic(self, rng):
        a1 = [rng.normal(size=(4, 4))]
        a2 = [a1[0].copy()]
        g = [rng.normal(size=(4, 4))]
        s1, s2 = adam_init(a1), adam_init(a2)
        for _ in range(10):
            adam_update(a1, g, s1, 1e-2)
            adam_update(a2, g, s2, 1e-2)
        assert np.array_equal(a1[0], a2[0])


class TestGae:
    def test_single_terminal_step(self):
        adv, tgt = gae([2.0], [0.5], [True], gamma=0.99, lam=0.95)
        assert abs(adv[0] - (2.0 - 0.5)) < 1e-12
        assert abs(tgt[0] - 2.0) < 1e-12

    def test_lambda_zero_is_one_step_td(self, rng):
        r = rng.normal(size=6)
        v = rng.normal(size=6)
        dones = np.zeros(6, dtype=bool)
        boot = 0.3
        adv, _ = gae(r, v, dones, gamma=0.99, lam=0.0, bootstrap_value=boot)
        for t in range(6):
            nxt = boot if t == 5 else v[t + 1]
            assert abs(adv[t] - (r[t] + 0.99 * nxt - v[t])) < 1e-12

    def test_five_step_hand_unrolled(self):
        gamma, lam = 0.99, 0.95
        r = np.array([1.0, 0.5, -0.2, 0.8, 1.5])
        v = np.array([0.3, 0.1, 0.4, -0.2, 0.6])
        dones = np.array([False, False, False, False, True])
        deltas = np.empty(5)
        for t in range(5):
            nxt = 0.0 if dones[t] else v[t + 1]
            deltas[t] = r[t] + gamma * nxt - v[t]
        expected = np.empty(5)
        acc = 0.0
        for t in range(4, -1, -1):
            acc = deltas[t] + gamma * lam * (0.0 if dones[t] else acc)
            expected[t] = acc
        adv, tgt = gae(r, v, dones, gamma, lam)
        np.testing.assert_allclose(adv, expected, atol=1e-9)
        np.testing.assert_allclose(tgt, expected + v, atol=1e-9)

    @given(st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_lambda_one_is_monte_carlo(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 12))
        r = rng.normal(size=n)
        v = rng.normal(size=n)
        gamma = float(rng.uniform(0.5, 1.0))
        dones = np.zeros(n, dtype=bool)
        dones[-1] = True
        adv, _ = gae(r, v, dones, gamma, lam=1.0)
        returns = np.empty(n)
        acc = 0.0
        for t in range(n - 1, -1, -1):
            acc = r[t] + gamma * acc
            returns[t] = acc
        np.testing.assert_allclose(adv, returns - v, atol=1e-9)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ConfigError):
            gae([1.0, 2.0], [0.0], [False], 0.99, 0.95)


class TestSurrogate:
    def test_positive_advantage_clipped_above(self):
        contrib, _ = clipped_surrogate(np.array([1.5]), np.array([1.0]), 0.2)
        assert abs(contrib[0] - 1.2) < 1e-12

    def test_negative_advantage_clipped_below(self):
        contrib, _ = clipped_surrogate(np.array([0.5]), np.array([-1.0]), 0.2)
        assert abs(contrib[0] - (-0.8)) < 1e-12

    def test_inside_clip_passthrough(self):
        contrib, active = clipped_surrogate(np.array([1.1]), np.array([2.0]), 0.2)
        assert abs(contrib[0] - 2.2) < 1e-12
        assert active[0] == 1.0


def _filled_buffer(rng, n=32, obs_dim=6, act_dim=3, reward_fn=None):
    buf = RolloutBuffer(capacity=n)
    for i in range(n):
        reward = float(rng.normal()) if reward_fn is None else reward_fn(i)
        buf.add(rng.normal(size=obs_dim), rng.normal(size=act_dim),
                float(rng.normal(-1.0, 0.3)), float(rng.normal()), reward,
                i % 8 == 7)
    buf.bootstrap_value = 0.0
    return buf


class TestPpoUpdate:
    def test_zero_advantages_leave_policy_unchanged(self, rng):
        policy = init_policy(6, 3, [8], rng)
        value_net = make_value_net(6, [8], rng)
        buf = RolloutBuffer(capacity=16)
        for i in range(16):
            buf.add(rng.normal(size=6), rng.normal(size=3), -1.0, 0.0, 0.0, False)
        before = [a.copy() for a in policy.arrays()]
        cfg = PpoConfig.desk(learning_rate=1e-2)
        ppo_update(policy, value_net, buf, cfg, policy_optimizer(policy),
                   value_optimizer(value_net), np.random.default_rng(0))
        for a, b in zip(policy.arrays(), before):
            assert np.array_equal(a, b)

    def test_deterministic_stats(self, rng):
        buf = _filled_buffer(rng)
        results = []
        for _ in range(2):
            r = np.random.default_rng(99)
            policy = init_policy(6, 3, [8], np.random.default_rng(5))
            value_net = make_value_net(6, [8], np.random.default_rng(6))
            stats = ppo_update(policy, value_net, buf, PpoConfig.desk(),
                               policy_optimizer(policy), value_optimizer(value_net), r)
            results.append((stats, [a.copy() for a in policy.arrays()]))
        assert results[0][0] == results[1][0]
        for a, b in zip(results[0][1], results[1][1]):
            assert np.array_equal(a, b)

    def test_advantage_scale_invariance(self, rng):
        # Positive rescaling of rewards and values rescales raw advantages;
        # after batch normalization the policy update must be identical.
        base = _filled_buffer(rng, n=24)
        scaled = RolloutBuffer(capacity=24)
        c = 3.7
        for i in range(24):
            scaled.add(base.obs[i], base.actions[i], base.log_probs[i],
                       base.values[i] * c, base.rewards[i] * c, base.dones[i])
        scaled.bootstrap_value = base.bootstrap_value * c

        nets = []
        for buf in (base, scaled):
            policy = init_policy(6, 3, [8], np.random.default_rng(7))
            value_net = make_value_net(6, [8], np.random.default_rng(8))
            ppo_update(policy, value_net, buf, PpoConfig.desk(update_epochs=1),
                       policy_optimizer(policy), value_optimizer(value_net),
                       np.random.default_rng(3))
            nets.append(policy.arrays())
        for a, b in zip(nets[0], nets[1]):
            np.testing.assert_allclose(a, b, atol=1e-6)

    def test_buffer_capacity_enforced(self, rng):
        buf = RolloutBuffer(capacity=1)
        buf.add(np.zeros(2), np.zeros(1), 0.0, 0.0, 0.0, False)
        assert buf.full
        with pytest.raises(ConfigError):
            buf.add(np.zeros(2), np.zeros(1), 0.0, 0.0, 0.0, False)


class TestGaussianHead:
    def test_log_std_clamped(self, rng):
        head = GaussianPolicyHead(net=init_mlp([4, 3], rng), log_std=np.array([-9.0, 0.0, 5.0]))
        assert head.log_std.min() >= -5.0 and head.log_std.max() <= 2.0

    def test_log_prob_matches_scipy_formula(self, rng):
        head = init_policy(4, 2, [6], rng, init_log_std=-0.5)
        obs = rng.normal(size=(5, 4))
        act, logp = head.sample(obs, rng)
        mean, _ = mlp_forward(head.net, obs)
        std = np.exp(head.log_std)
        expected = -0.5 * np.sum(((act - mean) / std) ** 2, axis=1) \
            - np.sum(np.log(std)) - 0.5 * 2 * np.log(2 * np.pi)
        np.testing.assert_allclose(logp, expected, atol=1e-12)
