import numpy as np
import pytest

from ookfusion.channel import BODY_CHANNEL_MODELS, NoiseSpec
from ookfusion.errors import ConfigError
from ookfusion.frames import FrameConfig, pilot_symbols, simulate_frame

D7 = BODY_CHANNEL_MODELS["d7"][0]
D1 = BODY_CHANNEL_MODELS["d1"][0]


def make_config(**overrides):
    base = dict(
        k_nodes=2,
        n_pilot=8,
        n_data=5,
        tx_power_watts=1e-3,
        node_dists=(D7, D1),
        noise=NoiseSpec(),
    )
    base.update(overrides)
    return FrameConfig(**base)


def test_pilot_pattern():
    np.testing.assert_array_equal(
        pilot_symbols(6), np.array([1, 1, 1, 0, 0, 0], dtype=np.int8)
    )
    with pytest.raises(ConfigError):
        pilot_symbols(5)
    with pytest.raises(ConfigError):
        pilot_symbols(0)


def test_frame_layout():
    cfg = make_config()
    frame = simulate_frame(cfg, np.random.default_rng(3))
    assert frame.symbols.shape == (13,)
    assert frame.samples.shape == (2, 13)
    assert frame.true_channels.shape == (2, 13)
    np.testing.assert_array_equal(frame.symbols[:8], pilot_symbols(8))
    assert set(np.unique(frame.data_symbols)) <= {0, 1}
    assert frame.pilot_samples.shape == (2, 8)
    assert frame.data_samples.shape == (2, 5)
    assert frame.data_channels.shape == (2, 5)


def test_simulation_reproducible():
    cfg = make_config()
    a = simulate_frame(cfg, np.random.default_rng(11))
    b = simulate_frame(cfg, np.random.default_rng(11))
    np.testing.assert_array_equal(a.symbols, b.symbols)
    np.testing.assert_array_equal(a.samples, b.samples)
    c = simulate_frame(cfg, np.random.default_rng(12))
    assert not np.array_equal(a.samples, c.samples)


def test_received_samples_compose_channel_and_noise():
    # With the channel draws known, y - sqrt(P) h x must be the noise draw,
    # identically distributed across on and off slots.
    cfg = make_config(n_pilot=400, n_data=400)
    frame = simulate_frame(cfg, np.random.default_rng(21))
    residual = frame.samples - np.sqrt(cfg.tx_power_watts) * frame.true_channels * frame.symbols
    power = np.mean(np.abs(residual) ** 2)
    assert power == pytest.approx(cfg.noise.power_watts, rel=0.1)


def test_zero_power_frame_is_noise_only():
    cfg = make_config(tx_power_watts=0.0)
    frame = simulate_frame(cfg, np.random.default_rng(5))
    # Every slot reduces to pure noise around the expected noise scale.
    assert np.all(np.abs(frame.samples) < 50.0 * np.sqrt(cfg.noise.power_watts))
    assert np.any(frame.samples != 0.0)


def test_off_slots_ignore_channel():
    cfg = make_config(n_pilot=6, n_data=3)
    rng = np.random.default_rng(9)
    frame = simulate_frame(cfg, rng)
    off = frame.symbols == 0
    # Off slots carry no signal term: replaying the same generator with a
    # different power leaves them bit-identical.
    frame2 = simulate_frame(make_config(n_pilot=6, n_data=3, tx_power_watts=2e-3), np.random.default_rng(9))
    np.testing.assert_array_equal(frame.samples[:, off], frame2.samples[:, off])
    assert not np.array_equal(frame.samples[:, ~off], frame2.samples[:, ~off])


def test_config_validation():
    with pytest.raises(ConfigError):
        make_config(k_nodes=0, node_dists=())
    with pytest.raises(ConfigError):
        make_config(n_pilot=7)
    with pytest.raises(ConfigError):
        make_config(n_data=0)
    with pytest.raises(ConfigError):
        make_config(tx_power_watts=-1.0)
    with pytest.raises(ConfigError):
        make_config(node_dists=(D7,))
