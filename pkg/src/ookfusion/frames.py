"""Frame structure and per-frame link simulation.

A frame carries ``n_pilot`` pilot slots followed by ``n_data`` payload slots.
The pilot pattern is fixed and known to every receiving node: the first half
of the pilot slots transmit 1, the second half transmit 0.  The channel is
fast-varying, so every slot of every node gets an independent channel draw;
noncoherent receivers only ever look at sample amplitudes, but the simulated
complex samples (and the true channels) are kept for the coherent baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import GainDistribution, NoiseSpec, squared_gain_ppf
from .errors import ConfigError


@dataclass(frozen=True)
class FrameConfig:
    """Static description of one simulated link configuration.

    ``node_dists`` holds one squared-gain model per receiving node;
    ``tx_power_watts`` is the on-symbol transmit power ``P`` (off symbols
    transmit nothing).
    """

    k_nodes: int
    n_pilot: int
    n_data: int
    tx_power_watts: float
    node_dists: tuple[GainDistribution, ...]
    noise: NoiseSpec

    def __post_init__(self) -> None:
        if self.k_nodes < 1:
            raise ConfigError("k_nodes must be >= 1")
        if self.n_pilot < 2 or self.n_pilot % 2 != 0:
            raise ConfigError("n_pilot must be an even integer >= 2")
        if self.n_data < 1:
            raise ConfigError("n_data must be >= 1")
        if not self.tx_power_watts >= 0:
            raise ConfigError("tx_power_watts must be >= 0")
        if len(self.node_dists) != self.k_nodes:
            raise ConfigError(
                f"expected {self.k_nodes} node distributions, got {len(self.node_dists)}"
            )

    @property
    def n_slots(self) -> int:
        return self.n_pilot + self.n_data


@dataclass(frozen=True)
class ReceivedFrame:
    """One simulated frame: transmitted bits plus per-node complex samples."""

    symbols: np.ndarray        # (n_slots,) int8, pilot prefix then payload
    samples: np.ndarray        # (k_nodes, n_slots) complex128
    true_channels: np.ndarray  # (k_nodes, n_slots) complex128
    n_pilot: int

    @property
    def pilot_samples(self) -> np.ndarray:
        return self.samples[:, : self.n_pilot]

    @property
    def data_samples(self) -> np.ndarray:
        return self.samples[:, self.n_pilot :]

    @property
    def data_symbols(self) -> np.ndarray:
        return self.symbols[self.n_pilot :]

    @property
    def data_channels(self) -> np.ndarray:
        return self.true_channels[:, self.n_pilot :]


def pilot_symbols(n_pilot: int) -> np.ndarray:
    """Known pilot pattern: ``n_pilot/2`` ones followed by ``n_pilot/2`` zeros."""
    if n_pilot < 2 or n_pilot % 2 != 0:
        raise ConfigError("n_pilot must be an even integer >= 2")
    out = np.zeros(n_pilot, dtype=np.int8)
    out[: n_pilot // 2] = 1
    return out


def simulate_frame(cfg: FrameConfig, rng: np.random.Generator) -> ReceivedFrame:
    """Simulate one frame through independent per-slot fading and noise.

    Draw order is fixed so runs are reproducible from the generator seed
    alone: payload bits, then gain uniforms (all nodes x slots), then phases,
    then noise real parts, then noise imaginary parts.  Received samples are
    ``sqrt(P) * h * x + w`` with ``x`` the 0/1 symbol.
    """
    bits = rng.integers(0, 2, size=cfg.n_data).astype(np.int8)
    symbols = np.concatenate([pilot_symbols(cfg.n_pilot), bits])

    shape = (cfg.k_nodes, cfg.n_slots)
    gain_u = rng.random(shape)
    rho = np.empty(shape, dtype=float)
    for node, dist in enumerate(cfg.node_dists):
        rho[node] = squared_gain_ppf(dist, gain_u[node])
    theta = 2.0 * np.pi * rng.random(shape)
    channels = np.sqrt(rho) * np.exp(1j * theta)

    sigma = np.sqrt(cfg.noise.power_watts / 2.0)
    noise = sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    amp = np.sqrt(cfg.tx_power_watts)
    samples = amp * channels * symbols[np.newaxis, :] + noise
    return ReceivedFrame(
        symbols=symbols, samples=samples, true_channels=channels, n_pilot=cfg.n_pilot
    )
