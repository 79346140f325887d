import math

import numpy as np
import pytest
from scipy.integrate import simpson
from scipy.special import iv

from ookfusion.channel import (
    BODY_CHANNEL_MODELS,
    NoiseSpec,
    dbm_to_watts,
    sample_channel,
    sample_noise,
    squared_gain_ppf,
)
from ookfusion.errors import ConfigError, NumericalError
from ookfusion.oracle import (
    StatCsiDetector,
    StatCsiTable,
    conditional_log_density,
    detect_mrc,
    detect_stat_csi,
    detect_stat_csi_tabulated,
    kernel_density_gap,
    log_i0,
)

NOISE = NoiseSpec()
N0B = NOISE.power_watts
D7 = BODY_CHANNEL_MODELS["d7"][0]


@pytest.fixture
def det_d7_0dbm():
    return StatCsiDetector(dist=D7, noise=NOISE, tx_power_watts=dbm_to_watts(0.0))


def test_log_i0_against_direct_bessel():
    z = np.array([0.0, 0.1, 1.0, 5.0, 20.0])
    np.testing.assert_allclose(log_i0(z), np.log(iv(0, z)), rtol=1e-12)


def test_log_i0_large_argument_asymptotics():
    # I0(z) ~ e^z / sqrt(2 pi z); direct evaluation overflows near z = 700.
    for z in (800.0, 5e4, 1e8):
        expected = z - 0.5 * math.log(2.0 * math.pi * z)
        assert log_i0(z) == pytest.approx(expected, rel=1e-6)


def test_off_density_closed_form(det_d7_0dbm):
    y = 3.0e-5 + 4.0e-5j
    expected = -math.log(math.pi * N0B) - abs(y) ** 2 / N0B
    assert conditional_log_density(det_d7_0dbm, y, 0) == pytest.approx(expected)


def test_zero_power_on_density_reduces_to_noise():
    det = StatCsiDetector(dist=D7, noise=NOISE, tx_power_watts=0.0)
    y = np.array([0.0, 1e-7, 5e-7]) + 0.0j
    on = conditional_log_density(det, y, 1)
    off = conditional_log_density(det, y, 0)
    # The gain integral only loses the quadrature's dropped tail mass.
    np.testing.assert_allclose(on - off, math.log1p(-det.tail_mass), atol=1e-12)


@pytest.mark.parametrize("power_dbm", [-40.0, 0.0, 40.0])
def test_on_density_normalizes(power_dbm):
    det = StatCsiDetector(
        dist=D7, noise=NOISE, tx_power_watts=dbm_to_watts(power_dbm)
    )
    sigma = math.sqrt(N0B / 2.0)
    r_max = math.sqrt(
        det.tx_power_watts * squared_gain_ppf(det.dist, 1.0 - 1e-12)
    ) + 12.0 * sigma
    r = np.linspace(0.0, r_max, 8001)
    dens = np.exp(conditional_log_density(det, r, 1))
    mass = simpson(2.0 * math.pi * r * dens, x=r)
    assert mass == pytest.approx(1.0 - det.tail_mass, abs=1e-6)


def test_on_density_matches_monte_carlo(det_d7_0dbm):
    """Band probabilities from quadrature density vs direct link simulation."""
    det = det_d7_0dbm
    rng = np.random.default_rng(77)
    n = 1_000_000
    h = sample_channel(det.dist, rng, n)
    w = sample_noise(det.noise, rng, n)
    r = np.abs(math.sqrt(det.tx_power_watts) * h + w)

    grid = np.linspace(0.0, np.quantile(r, 0.999), 3001)
    dens = np.exp(conditional_log_density(det, grid, 1))
    cdf_grid = 2.0 * math.pi * np.concatenate(
        [[0.0], np.cumsum(0.5 * (dens[1:] * grid[1:] + dens[:-1] * grid[:-1]) * np.diff(grid))]
    )
    for lo_q, hi_q in [(0.05, 0.25), (0.4, 0.6), (0.8, 0.95)]:
        lo, hi = np.quantile(r, [lo_q, hi_q])
        p_mc = np.mean((r >= lo) & (r < hi))
        p_quad = np.interp(hi, grid, cdf_grid) - np.interp(lo, grid, cdf_grid)
        se = math.sqrt(p_mc * (1.0 - p_mc) / n)
        assert abs(p_quad - p_mc) < 5.0 * se


def test_table_matches_exact_density(det_d7_0dbm):
    det = det_d7_0dbm
    table = StatCsiTable.build(det, n_points=2048)
    rng = np.random.default_rng(5)
    amps = rng.uniform(0.0, table.r_grid[-1], 400)
    exact = conditional_log_density(det, amps, 1) - conditional_log_density(
        det, amps + 0.0j, 0
    )
    np.testing.assert_allclose(table.log_ratio(amps), exact, atol=0.02, rtol=1e-3)


def test_tabulated_decisions_match_exact(det_d7_0dbm):
    det = det_d7_0dbm
    table = StatCsiTable.build(det, n_points=2048)
    rng = np.random.default_rng(6)
    n = 2000
    h = sample_channel(det.dist, rng, (1, n))
    w = sample_noise(det.noise, rng, (1, n))
    bits = rng.integers(0, 2, n)
    y = math.sqrt(det.tx_power_watts) * h * bits + w
    exact_bits, _ = detect_stat_csi([det], y)
    table_bits, _ = detect_stat_csi_tabulated([table], y)
    # Interpolation may flip only samples sitting on the decision boundary.
    assert np.mean(exact_bits != table_bits) < 1e-3


def test_stat_csi_scalar_and_batch_agree(det_d7_0dbm):
    det = det_d7_0dbm
    rng = np.random.default_rng(15)
    y = rng.normal(size=(1, 5)) * 3e-5 + 1j * rng.normal(size=(1, 5)) * 3e-5
    bits, ties = detect_stat_csi([det], y)
    for j in range(5):
        bit, tie = detect_stat_csi([det], y[:, j])
        assert bit == bits[j]
        assert tie == bool(ties[j])


def test_stat_csi_needs_matching_node_count(det_d7_0dbm):
    with pytest.raises(ConfigError):
        detect_stat_csi([det_d7_0dbm], np.zeros((2, 3), dtype=complex))


def test_quadrature_nonconvergence_raises():
    det = StatCsiDetector(
        dist=D7, noise=NOISE, tx_power_watts=1.0, rel_tol=1e-18,
        initial_order=8, max_order=8,
    )
    with pytest.raises(NumericalError, match="did not converge"):
        conditional_log_density(det, 1e-5 + 0.0j, 1)


def test_detector_validation():
    with pytest.raises(ConfigError):
        StatCsiDetector(dist=D7, noise=NOISE, tx_power_watts=-1.0)
    with pytest.raises(ConfigError):
        StatCsiDetector(dist=D7, noise=NOISE, tx_power_watts=1.0, tail_mass=0.5)
    det = StatCsiDetector(dist=D7, noise=NOISE, tx_power_watts=1.0)
    with pytest.raises(ConfigError):
        conditional_log_density(det, 1.0 + 0.0j, 2)


def test_mrc_hand_cases():
    h = np.array([1.0 + 0.0j])
    # Threshold for P = 4 and unit channel: Re(y) = 1.
    assert detect_mrc(h, np.array([1.2 + 0.0j]), 4.0) == (1, False)
    assert detect_mrc(h, np.array([0.8 + 0.0j]), 4.0) == (0, False)
    assert detect_mrc(h, np.array([1.0 + 5.0j]), 4.0) == (0, True)


def test_mrc_combines_nodes():
    h = np.array([1.0 + 0.0j, 0.0 + 2.0j])
    y = np.array([0.4 + 0.0j, 0.0 + 1.4j])
    # Combined statistic: 0.4 + 2*1.4 = 3.2 vs (1/2)*(1 + 4) = 2.5.
    assert detect_mrc(h, y, 1.0) == (1, False)


def test_mrc_batch_and_validation():
    rng = np.random.default_rng(3)
    h = rng.normal(size=(2, 7)) + 1j * rng.normal(size=(2, 7))
    y = rng.normal(size=(2, 7)) + 1j * rng.normal(size=(2, 7))
    bits, ties = detect_mrc(h, y, 2.0)
    assert bits.shape == (7,)
    assert not ties.any()
    with pytest.raises(ConfigError):
        detect_mrc(h, y[:, :3], 2.0)
    with pytest.raises(ConfigError):
        detect_mrc(h, y, -2.0)


def test_kernel_density_gap_shrinks_with_pilot_count(det_d7_0dbm):
    det = det_d7_0dbm
    y = complex(math.sqrt(det.tx_power_watts * squared_gain_ppf(det.dist, 0.65)), 0.0)
    kernel_c = 0.03 / N0B

    def mean_gap(n_pilot):
        gaps = [
            kernel_density_gap(det, n_pilot, kernel_c, y, np.random.default_rng((9, n_pilot, s)))
            for s in range(10)
        ]
        return float(np.mean(gaps))

    assert mean_gap(10_000) < mean_gap(100)


def test_kernel_density_gap_validation(det_d7_0dbm):
    rng = np.random.default_rng(1)
    with pytest.raises(ConfigError):
        kernel_density_gap(det_d7_0dbm, 3, 1.0, 0.0j, rng)
    with pytest.raises(ConfigError):
        kernel_density_gap(det_d7_0dbm, 10, -1.0, 0.0j, rng)
