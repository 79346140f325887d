"""Channel-state-informed baseline detectors and density references.

Two baselines bracket the noncoherent detectors from the training side:

* a coherent combiner that knows every per-slot channel realization and
  projects the received vector onto it;
* a statistical-CSI likelihood-ratio detector that knows only the per-link
  squared-gain distribution and marginalizes the channel out of the sample
  density.

Because the gain phase is uniform and the noise circularly symmetric, the
marginal "on" density of a received sample depends only on its amplitude
``r = |y|`` and reduces to a one-dimensional integral over the squared gain
with a Rician kernel.  That integral is evaluated in the log domain with
panelled Gauss-Legendre quadrature; panels follow both the gain
distribution's quantiles and the Rician ridge around the observed amplitude.
An interpolation table over amplitude is provided as a fast path for Monte
Carlo sweeps.  The same machinery doubles as the convergence reference for
the kernel-density detector (``kernel_density_gap``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import i0e, logsumexp, roots_legendre

from .channel import GainDistribution, NoiseSpec, log_squared_gain_pdf, squared_gain_ppf
from .errors import ConfigError, NumericalError


def log_i0(z):
    """Log of the modified Bessel function I0, stable for large arguments."""
    z = np.asarray(z, dtype=float)
    out = z + np.log(i0e(z))
    return float(out[()]) if out.ndim == 0 else out


@dataclass(frozen=True)
class StatCsiDetector:
    """Statistical-CSI likelihood-ratio detector for one link.

    ``tail_mass`` is the gain-distribution tail probability dropped by the
    quadrature; ``rel_tol`` is the relative convergence target between
    successive quadrature refinements.
    """

    dist: GainDistribution
    noise: NoiseSpec
    tx_power_watts: float
    tail_mass: float = 1e-10
    rel_tol: float = 1e-8
    initial_order: int = 8
    max_order: int = 512

    def __post_init__(self) -> None:
        if not self.tx_power_watts >= 0:
            raise ConfigError("tx_power_watts must be >= 0")
        if not 0 < self.tail_mass < 1e-3:
            raise ConfigError("tail_mass must lie in (0, 1e-3)")


# Quantile levels whose gain values anchor quadrature panel edges; the last
# edge is always ppf(1 - tail_mass).
_EDGE_QUANTILES = np.array(
    [
        1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 0.01, 0.05, 0.1, 0.2, 0.3,
        0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999, 1 - 1e-4, 1 - 1e-6,
        1 - 1e-8,
    ]
)

# Amplitude offsets (in units of the per-component noise sigma) that bracket
# the Rician ridge around the observed amplitude.
_RIDGE_OFFSETS = np.array(
    [-40.0, -20.0, -12.0, -7.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 7.0, 12.0, 20.0, 40.0]
)

# Gain values (in units of N0*B/P) that bracket the near-origin noise region.
_ORIGIN_FACTORS = np.array([0.01, 0.1, 1.0, 10.0, 100.0])

# Multiples of the boundary-layer width resolved at the tail cutoff when the
# Rician ridge falls beyond it (the integrand then peaks at the cutoff).
_CUTOFF_LAYERS = np.array([0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 1000.0])


def _panel_edges(det: StatCsiDetector, r: np.ndarray) -> np.ndarray:
    """Sorted quadrature panel edges in gain space, one row per amplitude."""
    p = det.tx_power_watts
    n0b = det.noise.power_watts
    rho_max = squared_gain_ppf(det.dist, 1.0 - det.tail_mass)

    quant = squared_gain_ppf(det.dist, _EDGE_QUANTILES)
    fixed = [np.zeros(1), quant, np.array([rho_max])]
    if p > 0:
        fixed.append(n0b / p * _ORIGIN_FACTORS)
    fixed_edges = np.concatenate(fixed)

    n_r = r.shape[0]
    if p > 0:
        sigma = math.sqrt(n0b / 2.0)
        s = np.clip(r[:, None] + sigma * _RIDGE_OFFSETS[None, :], 0.0, None)
        ridge = s * s / p
        # Amplitudes beyond the tail cutoff leave the integrand exponentially
        # increasing toward rho_max; resolve that boundary layer explicitly.
        s_max = math.sqrt(p * rho_max)
        slope = np.maximum(r / s_max - 1.0, 0.0) * (p / n0b)
        with np.errstate(divide="ignore"):
            layer = np.where(
                slope[:, None] > 0, rho_max - _CUTOFF_LAYERS[None, :] / slope[:, None], rho_max
            )
        edges = np.concatenate(
            [np.broadcast_to(fixed_edges, (n_r, fixed_edges.size)), ridge, layer], axis=1
        )
    else:
        edges = np.broadcast_to(fixed_edges, (n_r, fixed_edges.size)).copy()
    np.clip(edges, 0.0, rho_max, out=edges)
    edges.sort(axis=1)
    return edges


def _log_on_integrand(det: StatCsiDetector, rho: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Log of the gain-marginal 'on' density integrand at gains rho, amplitudes r.

    The Gaussian exponent and the Bessel growth are combined analytically as
    ``-(r - s)^2/N0B + log(i0e(z))`` with ``s = sqrt(P*rho)``; forming
    ``-(r^2 + P*rho)/N0B + log(I0(z))`` directly would cancel catastrophically
    at high signal-to-noise ratios.
    """
    n0b = det.noise.power_watts
    p = det.tx_power_watts
    log_f = log_squared_gain_pdf(det.dist, rho)
    s = np.sqrt(p * rho)
    z = 2.0 * r * s / n0b
    diff = r - s
    return log_f - math.log(math.pi * n0b) - diff * diff / n0b + np.log(i0e(z))


# Upper bound on (amplitudes x panels x nodes) elements evaluated at once.
_BLOCK_BUDGET = 4_000_000


def _quadrature_log_on(det: StatCsiDetector, r: np.ndarray, order: int) -> np.ndarray:
    nodes_x, nodes_w = roots_legendre(order)
    out = np.empty(r.shape[0], dtype=float)
    n_panels = _panel_edges(det, r[:1]).shape[1] - 1
    # Evaluate in amplitude blocks so refinement at high orders stays in RAM.
    block = max(1, _BLOCK_BUDGET // (n_panels * order))
    for pos in range(0, r.shape[0], block):
        rr = r[pos : pos + block]
        edges = _panel_edges(det, rr)
        lo = edges[:, :-1]
        hi = edges[:, 1:]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        # rho: (block, n_panels, order); zero-width panels land at log(0) weights.
        rho = mid[:, :, None] + half[:, :, None] * nodes_x[None, None, :]
        log_g = _log_on_integrand(det, rho, rr[:, None, None])
        with np.errstate(divide="ignore"):
            log_w = np.log(half[:, :, None] * nodes_w[None, None, :])
        out[pos : pos + block] = logsumexp(log_g + log_w, axis=(1, 2))
    return out


def conditional_log_density(det: StatCsiDetector, y, x: int):
    """Log marginal density of a received sample under symbol ``x`` (0 or 1).

    Under "off" the sample is pure complex Gaussian noise (closed form).
    Under "on" the channel gain is integrated out numerically; successive
    quadrature refinements must agree to ``rel_tol`` or a numerical error is
    raised.  Accepts complex scalars or arrays; only ``|y|`` matters.
    """
    if x not in (0, 1):
        raise ConfigError("x must be 0 or 1")
    r = np.abs(np.asarray(y))
    scalar = r.ndim == 0
    r_flat = np.atleast_1d(r).astype(float).ravel()
    if not np.all(np.isfinite(r_flat)):
        raise ConfigError("y must be finite")

    n0b = det.noise.power_watts
    if x == 0:
        out = -math.log(math.pi * n0b) - r_flat * r_flat / n0b
    else:
        out = _refined_log_on(det, r_flat)
    out = out.reshape(np.shape(r)) if not scalar else out
    return float(out[0]) if scalar else out


def _refined_log_on(det: StatCsiDetector, r: np.ndarray) -> np.ndarray:
    prev = _quadrature_log_on(det, r, det.initial_order)
    order = det.initial_order
    worst = math.inf
    eps = np.finfo(float).eps
    while order < det.max_order:
        order *= 2
        cur = _quadrature_log_on(det, r, order)
        with np.errstate(invalid="ignore"):
            step = np.abs(cur - prev)
        # The log itself is only representable to ~eps*|log|, so huge-magnitude
        # (physically zero) densities get a correspondingly wider tolerance.
        tol = det.rel_tol + 8.0 * eps * np.abs(cur)
        # -inf on both rounds means the mass is truly below the log floor.
        both_floor = np.isneginf(cur) & np.isneginf(prev)
        if np.all(both_floor | (step < tol)):
            return cur
        worst = float(np.nanmax(np.where(both_floor, 0.0, step)))
        prev = cur
    raise NumericalError(
        f"gain-marginal quadrature did not converge: worst relative step {worst:.3e} "
        f"at order {det.max_order} (tx_power={det.tx_power_watts:.3e} W)"
    )


def detect_stat_csi(dets: Sequence[StatCsiDetector], y) -> tuple[np.ndarray, np.ndarray]:
    """Fused statistical-CSI decision over ``k`` links.

    ``dets`` holds one detector per node and ``y`` has shape ``(k,)`` or
    ``(k, n)``.  Decides 1 where the summed per-node log-likelihood ratio is
    positive; exact ties decide 0 and are flagged.
    """
    y = np.asarray(y)
    scalar = y.ndim == 1
    yy = y[:, np.newaxis] if scalar else y
    if yy.shape[0] != len(dets):
        raise ConfigError("need one statistical-CSI detector per node")
    llr = np.zeros(yy.shape[1], dtype=float)
    for det, row in zip(dets, yy):
        llr += conditional_log_density(det, row, 1) - conditional_log_density(det, row, 0)
    bits = (llr > 0).astype(np.int8)
    ties = llr == 0
    if scalar:
        return int(bits[0]), bool(ties[0])
    return bits, ties


@dataclass(frozen=True)
class StatCsiTable:
    """Amplitude-indexed interpolation table for one link's 'on' log-density.

    The "off" log-density stays in closed form.  Amplitudes beyond the table
    end clamp to the last grid value; the grid extends past the gain
    distribution's 1 - 1e-12 quantile so clamping only affects amplitudes
    whose decision is already saturated.
    """

    det: StatCsiDetector
    r_grid: np.ndarray
    log_on: np.ndarray

    @classmethod
    def build(cls, det: StatCsiDetector, n_points: int = 4096) -> "StatCsiTable":
        n0b = det.noise.power_watts
        sigma = math.sqrt(n0b / 2.0)
        r_tail = math.sqrt(det.tx_power_watts * squared_gain_ppf(det.dist, 1.0 - 1e-12))
        r_max = r_tail + 12.0 * sigma
        # Dense spacing where the density varies on the noise scale, coarser
        # out to the far gain tail.
        r_break = min(80.0 * sigma, r_max / 2.0)
        n_fine = n_points // 2
        fine = np.linspace(0.0, r_break, n_fine, endpoint=False)
        coarse = np.linspace(r_break, r_max, n_points - n_fine)
        grid = np.concatenate([fine, coarse])
        log_on = conditional_log_density(det, grid, 1)
        return cls(det=det, r_grid=grid, log_on=log_on)

    def log_ratio(self, amps: np.ndarray) -> np.ndarray:
        """Interpolated on/off log-likelihood ratio at the given amplitudes."""
        amps = np.asarray(amps, dtype=float)
        n0b = self.det.noise.power_watts
        log_on = np.interp(amps, self.r_grid, self.log_on)
        log_off = -math.log(math.pi * n0b) - amps * amps / n0b
        return log_on - log_off


def detect_stat_csi_tabulated(
    tables: Sequence[StatCsiTable], y
) -> tuple[np.ndarray, np.ndarray]:
    """Table-driven variant of ``detect_stat_csi`` for high-volume sweeps."""
    y = np.asarray(y)
    scalar = y.ndim == 1
    yy = y[:, np.newaxis] if scalar else y
    if yy.shape[0] != len(tables):
        raise ConfigError("need one amplitude table per node")
    llr = np.zeros(yy.shape[1], dtype=float)
    for table, row in zip(tables, yy):
        llr += table.log_ratio(np.abs(row))
    bits = (llr > 0).astype(np.int8)
    ties = llr == 0
    if scalar:
        return int(bits[0]), bool(ties[0])
    return bits, ties


def detect_mrc(channels, y, tx_power_watts: float) -> tuple[np.ndarray, np.ndarray]:
    """Coherent maximal-ratio decision with perfect per-slot channel knowledge.

    Decides 1 where the real part of the combined sample exceeds half the
    on-symbol mean, i.e. ``Re(sum conj(h) y) > (sqrt(P)/2) * sum |h|^2``.
    ``channels`` and ``y`` have shape ``(k,)`` or ``(k, n)``; exact ties
    decide 0 and are flagged.
    """
    if not tx_power_watts >= 0:
        raise ConfigError("tx_power_watts must be >= 0")
    h = np.asarray(channels)
    yy = np.asarray(y)
    if h.shape != yy.shape:
        raise ConfigError("channels and samples must share a shape")
    stat = np.real(np.conj(h) * yy).sum(axis=0) - (
        math.sqrt(tx_power_watts) / 2.0
    ) * (np.abs(h) ** 2).sum(axis=0)
    bits = (stat > 0).astype(np.int8)
    ties = stat == 0
    if np.ndim(stat) == 0:
        return int(bits[()]), bool(ties[()])
    return bits, ties


def kernel_density_gap(
    det: StatCsiDetector,
    n_pilot: int,
    kernel_c: float,
    y: complex,
    rng: np.random.Generator,
) -> float:
    """Relative gap between the kernel-density 'on' likelihood and the true one.

    Draws the "on" half of an ``n_pilot``-slot pilot block through the
    detector's link model (gains, then phases, then noise, matching the frame
    simulator's per-slot order), forms the Parzen estimate at the fixed
    sample ``y``, and returns ``|estimate/truth - 1|``.  The estimate
    converges to the truth as the pilot count and the kernel precision grow
    together; this gap is the measurable diagnostic of that convergence.
    """
    if n_pilot < 2 or n_pilot % 2 != 0:
        raise ConfigError("n_pilot must be an even integer >= 2")
    if not (math.isfinite(kernel_c) and kernel_c > 0):
        raise ConfigError("kernel_c must be positive and finite")
    half = n_pilot // 2
    rho = squared_gain_ppf(det.dist, rng.random(half))
    theta = 2.0 * np.pi * rng.random(half)
    sigma = math.sqrt(det.noise.power_watts / 2.0)
    noise = sigma * (rng.standard_normal(half) + 1j * rng.standard_normal(half))
    pilots = math.sqrt(det.tx_power_watts) * np.sqrt(rho) * np.exp(1j * theta) + noise

    sq = np.abs(y - pilots) ** 2
    log_est = (
        math.log(2.0 / n_pilot)
        + math.log(kernel_c / math.pi)
        + logsumexp(-kernel_c * sq)
    )
    log_truth = conditional_log_density(det, y, 1)
    return float(abs(math.expm1(log_est - log_truth)))
