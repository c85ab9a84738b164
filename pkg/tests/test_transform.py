"""Algebraic checks for the squashed-return transform."""

import numpy as np
import pytest

from refreshrl.transform import TBConfig, h, h_inv, tb_bootstrap_target, tb_bootstrap_targets, tb_returns

# Frozen from a 40-digit mpmath evaluation of the closed forms.
H1_EPS001 = 0.42421356237309505  # h(1) with epsilon = 0.01
H1_EPS0 = 0.41421356237309505    # h(1) with epsilon = 0


def test_h_fixed_points_and_oracle_values():
    assert h(0.0, 0.01) == 0.0
    assert h(1.0, 0.01) == pytest.approx(H1_EPS001, abs=1e-15)
    assert h(-1.0, 0.01) == pytest.approx(-H1_EPS001, abs=1e-15)


def test_h_matches_independent_high_precision_eval():
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 40
    for z in [0.3, 1.0, -2.5, 17.0, -123.456, 9876.5]:
        want = float(mp.sign(z) * (mp.sqrt(abs(mp.mpf(z)) + 1) - 1) + mp.mpf("0.01") * z)
        assert h(z, 0.01) == pytest.approx(want, rel=1e-14)


def test_h_rejects_non_finite():
    for bad in [np.nan, np.inf, -np.inf]:
        with pytest.raises(ValueError):
            h(bad)
        with pytest.raises(ValueError):
            h_inv(bad)
    with pytest.raises(ValueError):
        h(np.array([1.0, np.nan]))


def test_h_inv_round_trip():
    assert h_inv(0.0, 0.01) == 0.0
    assert h_inv(h(5.0, 0.01), 0.01) == pytest.approx(5.0, abs=1e-9)
    assert h_inv(H1_EPS001, 0.01) == pytest.approx(1.0, abs=1e-9)


def test_round_trip_property_over_wide_range():
    rng = np.random.default_rng(0)
    z = rng.uniform(-1e4, 1e4, size=100_000)
    back = h_inv(h(z, 0.01), 0.01)
    assert np.all(np.abs(back - z) <= 1e-9 * np.maximum(1.0, np.abs(z)))


def test_round_trip_epsilon_zero():
    rng = np.random.default_rng(1)
    z = rng.uniform(-1e3, 1e3, size=10_000)
    back = h_inv(h(z, 0.0), 0.0)
    assert np.all(np.abs(back - z) <= 1e-9 * np.maximum(1.0, np.abs(z)))


def test_strict_monotonicity():
    z = np.linspace(-1e4, 1e4, 200_001)
    hz = h(z, 0.01)
    assert np.all(np.diff(hz) > 0)
    x = np.linspace(-90.0, 90.0, 100_001)
    assert np.all(np.diff(h_inv(x, 0.01)) > 0)


def test_oddness():
    rng = np.random.default_rng(2)
    z = rng.uniform(0, 1e4, size=10_000)
    assert np.all(np.abs(h(-z, 0.01) + h(z, 0.01)) <= 1e-12 * np.maximum(1.0, np.abs(h(z, 0.01))))


def test_tb_returns_zero_rewards():
    cfg = TBConfig()
    assert np.array_equal(tb_returns([0.0, 0.0, 0.0], cfg), np.zeros(3))


def test_tb_returns_single_terminal_reward():
    cfg = TBConfig(epsilon=0.01, gamma=0.99)
    got = tb_returns([1.0], cfg)
    assert got[0] == pytest.approx(H1_EPS001, abs=1e-12)


def test_tb_returns_propagates_through_inverse():
    # G0 = h(0 + 1 * h_inv(h(1))) = h(1) when gamma=1, eps=0
    cfg = TBConfig(epsilon=0.0, gamma=1.0)
    got = tb_returns([0.0, 1.0], cfg)
    assert got[0] == pytest.approx(H1_EPS0, abs=1e-12)
    assert got[1] == pytest.approx(H1_EPS0, abs=1e-12)


def test_tb_returns_empty():
    assert tb_returns([], TBConfig()).size == 0


def test_tb_returns_degenerate_equals_h_of_suffix_sums():
    # eps -> 0 and gamma = 1: recursion collapses to h(sum of remaining rewards)
    cfg = TBConfig(epsilon=0.0, gamma=1.0)
    rng = np.random.default_rng(3)
    rewards = rng.uniform(0, 3, size=17)
    got = tb_returns(rewards, cfg)
    suffix = np.cumsum(rewards[::-1])[::-1]
    assert np.allclose(got, h(suffix, 0.0), atol=1e-9)


def test_tb_returns_identity_hook_gives_plain_discounted_returns():
    # With the squash replaced by the identity the recursion is G = r + gamma*G.
    gamma = 0.9
    rewards = np.array([1.0, 0.0, 2.0, 5.0])
    g = 0.0
    want = np.empty(4)
    for i in range(3, -1, -1):
        g = rewards[i] + gamma * g
        want[i] = g
    cfg = TBConfig(epsilon=0.01, gamma=gamma)
    ident = (lambda z: z, lambda x: x)
    got = tb_bootstrap_targets(rewards, 0.0, cfg, squash=ident)
    assert np.allclose(got, want, atol=1e-12)


def test_order_preservation_against_untransformed_oracle():
    cfg = TBConfig(epsilon=0.01, gamma=0.99)
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = rng.integers(1, 8)
        a = rng.uniform(0, 5, size=n)
        b = rng.uniform(0, 5, size=n)
        plain_a = sum(r * cfg.gamma**i for i, r in enumerate(a))
        plain_b = sum(r * cfg.gamma**i for i, r in enumerate(b))
        if abs(plain_a - plain_b) < 1e-9:
            continue
        ta = tb_returns(a, cfg)[0]
        tb = tb_returns(b, cfg)[0]
        assert (ta > tb) == (plain_a > plain_b)


def test_bootstrap_target_identity_path():
    cfg = TBConfig(epsilon=0.0, gamma=1.0)
    for v in [-2.0, 0.0, 0.7, 3.3]:
        assert tb_bootstrap_target([0.0, 0.0, 0.0], v, cfg) == pytest.approx(v, abs=1e-9)


def test_bootstrap_target_single_step():
    cfg = TBConfig(epsilon=0.01, gamma=0.99)
    assert tb_bootstrap_target([1.0], 0.0, cfg) == pytest.approx(H1_EPS001, abs=1e-12)


def test_bootstrap_target_folds_bootstrap_value():
    cfg = TBConfig(epsilon=0.0, gamma=1.0)
    got = tb_bootstrap_target([1.0], h(2.0, 0.0), cfg)
    assert got == pytest.approx(1.0, abs=1e-12)  # h(3) = sqrt(4) - 1


def test_config_validation():
    with pytest.raises(ValueError):
        TBConfig(epsilon=-1e-3)
    with pytest.raises(ValueError):
        TBConfig(gamma=1.5)
