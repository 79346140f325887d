"""Noncoherent detectors trained on per-frame pilot amplitudes.

Every detector here sees only sample amplitudes ``|y|`` (no channel state).
The weight-comparing family first trains per-node reference values from the
pilot half-frames, then scores each payload sample with a pair of weights,
one voting for "on" and one for "off"; the fusion center decides "on" when
the summed on-weights exceed the summed off-weights.  Variants differ only
in how the weights are built:

* probability weights: log conditional probabilities of the per-node
  threshold decision being what it was, under each hypothesis;
* deviation weights: negative distance from the observed amplitude to each
  trained class amplitude;
* combination weights: deviation-squared terms scaled by the class
  amplitudes and reinforced by the log-probabilities;
* majority rule: per-node threshold decisions, decided by count.

An empirical likelihood-ratio detector based on Gaussian kernel density
estimates over the raw complex pilot samples is included as the
asymptotically optimal (but heavier) noncoherent reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, DegenerateTrainingError


@dataclass(frozen=True)
class ReferenceValues:
    """Per-node quantities trained from one frame's pilot amplitudes.

    All arrays have shape ``(k_nodes,)``.  ``a1``/``a0`` are the mean
    amplitudes over the on/off pilot halves, ``a_th`` their midpoint (which
    equals the mean amplitude over the full pilot block).  ``g1``/``g0``
    count correct per-slot threshold decisions on each half, and
    ``p11``/``p00`` are the corresponding empirical conditional
    probabilities, clamped away from 0 and 1.
    """

    a_th: np.ndarray
    a1: np.ndarray
    a0: np.ndarray
    g1: np.ndarray
    g0: np.ndarray
    p11: np.ndarray
    p00: np.ndarray
    n_pilot: int


class WeightPairs(NamedTuple):
    """On/off vote weights, shape ``(k_nodes,)`` or ``(k_nodes, n)``."""

    w1: np.ndarray
    w0: np.ndarray


def train_references(pilot_samples: np.ndarray) -> ReferenceValues:
    """Train per-node reference values from pilot samples of shape (k, n_pilot).

    The first half of the pilot slots carries "on" symbols, the second half
    "off".  Raises ``ConfigError`` for pilot blocks shorter than 4 slots (the
    probability clamp needs 2/n_pilot <= 1/2) and ``DegenerateTrainingError``
    when a node's trained amplitudes are all zero.
    """
    pilots = np.asarray(pilot_samples)
    if pilots.ndim != 2:
        raise ConfigError("pilot_samples must have shape (k_nodes, n_pilot)")
    n_pilot = pilots.shape[1]
    if n_pilot < 4 or n_pilot % 2 != 0:
        raise ConfigError("pilot length must be an even integer >= 4")
    half = n_pilot // 2

    amps = np.abs(pilots)
    a1 = amps[:, :half].mean(axis=1)
    a0 = amps[:, half:].mean(axis=1)
    # Midpoint of the half-means equals the full-block mean amplitude exactly.
    a_th = 0.5 * (a1 + a0)
    if np.any(a1 <= 0.0) or np.any(a0 <= 0.0):
        raise DegenerateTrainingError("pilot amplitudes are all zero on some node")

    decided_on = amps >= a_th[:, np.newaxis]
    g1 = decided_on[:, :half].sum(axis=1)
    g0 = (~decided_on[:, half:]).sum(axis=1)
    p11 = _clamped_probability(g1, n_pilot)
    p00 = _clamped_probability(g0, n_pilot)
    return ReferenceValues(
        a_th=a_th, a1=a1, a0=a0, g1=g1, g0=g0, p11=p11, p00=p00, n_pilot=n_pilot
    )


def _clamped_probability(g: np.ndarray, n_pilot: int) -> np.ndarray:
    """Empirical probability g/(n_pilot/2), clamped to [2/n_pilot, 1 - 2/n_pilot]."""
    half = n_pilot // 2
    p = g * (2.0 / n_pilot)
    p = np.where(g == 0, 2.0 / n_pilot, p)
    p = np.where(g == half, 1.0 - 2.0 / n_pilot, p)
    return p


def threshold_detect(amps: np.ndarray, a_th: np.ndarray) -> np.ndarray:
    """Per-node hard decision: 1 where the amplitude reaches the threshold.

    ``amps`` has shape ``(k,)`` or ``(k, n)``; the boundary case
    ``amp == a_th`` decides 1.
    """
    amps = np.asarray(amps)
    return (amps >= _per_node(a_th, amps)).astype(np.int8)


def _per_node(ref_vec: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """Broadcast a (k,) reference vector against (k,) or (k, n) amplitudes."""
    return ref_vec[:, np.newaxis] if amps.ndim == 2 else ref_vec


def weights_p(ref: ReferenceValues, amps: np.ndarray) -> WeightPairs:
    """Probability weights from the per-node threshold decisions.

    A node that decided "on" contributes ``log(p11)`` to the on-vote and
    ``log(1 - p00)`` to the off-vote; a node that decided "off" contributes
    ``log(1 - p11)`` and ``log(p00)``.
    """
    amps = np.asarray(amps)
    on = threshold_detect(amps, ref.a_th).astype(bool)
    p11 = _per_node(ref.p11, amps)
    p00 = _per_node(ref.p00, amps)
    w1 = np.where(on, np.log(p11), np.log1p(-p11))
    w0 = np.where(on, np.log1p(-p00), np.log(p00))
    return WeightPairs(w1=w1, w0=w0)


def weights_d(ref: ReferenceValues, amps: np.ndarray) -> WeightPairs:
    """Deviation weights: negative distance to each trained class amplitude."""
    amps = np.asarray(amps)
    w1 = -np.abs(amps - _per_node(ref.a1, amps))
    w0 = -np.abs(amps - _per_node(ref.a0, amps))
    return WeightPairs(w1=w1, w0=w0)


def weights_c(ref: ReferenceValues, amps: np.ndarray) -> WeightPairs:
    """Combination weights: squared deviations scaled by the class amplitudes,
    reinforced by the threshold-decision log-probabilities.

    Both components are nonpositive, so each weight is too.  Requires the
    trained amplitudes (and hence the threshold) to be strictly positive.
    """
    if np.any(ref.a1 <= 0.0) or np.any(ref.a0 <= 0.0) or np.any(ref.a_th <= 0.0):
        raise DegenerateTrainingError("combination weights need positive trained amplitudes")
    amps = np.asarray(amps)
    dev1_sq = (amps - _per_node(ref.a1, amps)) ** 2
    dev0_sq = (amps - _per_node(ref.a0, amps)) ** 2
    on = threshold_detect(amps, ref.a_th).astype(bool)
    p11 = _per_node(ref.p11, amps)
    p00 = _per_node(ref.p00, amps)
    a_th = _per_node(ref.a_th, amps)
    log_on = np.where(on, np.log(p11), np.log1p(-p11))
    log_off = np.where(on, np.log1p(-p00), np.log(p00))
    w1 = -dev1_sq / _per_node(ref.a1, amps) + dev1_sq * log_on / a_th
    w0 = -dev0_sq / _per_node(ref.a0, amps) + dev0_sq * log_off / a_th
    return WeightPairs(w1=w1, w0=w0)


def fuse(weights: WeightPairs) -> tuple[np.ndarray, np.ndarray]:
    """Fusion-center decision: 1 where summed on-weights exceed off-weights.

    Returns ``(bits, ties)``; an exact tie decides 0 and is flagged.  Weight
    arrays are summed over the node axis (axis 0).
    """
    diff = weights.w1.sum(axis=0) - weights.w0.sum(axis=0)
    bits = (diff > 0).astype(np.int8)
    ties = diff == 0
    return bits, ties


def detect_m(ref: ReferenceValues, amps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Majority rule over the per-node threshold decisions.

    Decides 1 when more than half of the nodes saw an on-amplitude; an exact
    split (even node counts) decides 0 and is flagged as a tie.
    """
    votes = threshold_detect(np.asarray(amps), ref.a_th)
    k = votes.shape[0]
    count_on = votes.sum(axis=0)
    bits = (2 * count_on > k).astype(np.int8)
    ties = 2 * count_on == k
    return bits, ties


def elrt_logliks(
    pilot_samples: np.ndarray, y: np.ndarray, kernel_c: float
) -> tuple[np.ndarray, np.ndarray]:
    """Kernel-density log-likelihoods of on/off built from raw pilot samples.

    Each hypothesis density is a Parzen estimate over that hypothesis's pilot
    half using the kernel ``(c/pi) * exp(-c * |y - y_m|^2)``; per-node log
    densities are summed over nodes (conditional independence).  ``y`` has
    shape ``(k,)`` for one fused symbol or ``(k, n)`` for a batch; returns a
    pair of scalars or of ``(n,)`` arrays.
    """
    if not (math.isfinite(kernel_c) and kernel_c > 0):
        raise ConfigError("kernel_c must be positive and finite")
    pilots = np.asarray(pilot_samples)
    if pilots.ndim != 2:
        raise ConfigError("pilot_samples must have shape (k_nodes, n_pilot)")
    n_pilot = pilots.shape[1]
    if n_pilot < 2 or n_pilot % 2 != 0:
        raise ConfigError("pilot length must be an even integer >= 2")
    half = n_pilot // 2

    y = np.asarray(y)
    scalar = y.ndim == 1
    yy = y[:, np.newaxis] if scalar else y
    if yy.ndim != 2 or yy.shape[0] != pilots.shape[0]:
        raise ConfigError("y must have shape (k_nodes,) or (k_nodes, n)")

    lead = math.log(2.0 / n_pilot) + math.log(kernel_c / math.pi)

    def half_loglik(ref_half: np.ndarray) -> np.ndarray:
        # (k, half, n) squared distances; logsumexp over the pilot axis.
        sq = np.abs(yy[:, np.newaxis, :] - ref_half[:, :, np.newaxis]) ** 2
        per_node = lead + logsumexp(-kernel_c * sq, axis=1)
        return per_node.sum(axis=0)

    ll1 = half_loglik(pilots[:, :half])
    ll0 = half_loglik(pilots[:, half:])
    if scalar:
        return float(ll1[0]), float(ll0[0])
    return ll1, ll0


def detect_elrt(
    pilot_samples: np.ndarray, y: np.ndarray, kernel_c: float
) -> tuple[np.ndarray, np.ndarray]:
    """Empirical likelihood-ratio decision: 1 where the on log-likelihood wins.

    Exact likelihood ties decide 0 and are flagged (a fully symmetric pilot
    set ties for every input).
    """
    ll1, ll0 = elrt_logliks(pilot_samples, y, kernel_c)
    diff = np.asarray(ll1) - np.asarray(ll0)
    bits = (diff > 0).astype(np.int8)
    ties = diff == 0
    if np.ndim(y) == 1:
        return int(bits[()]), bool(ties[()])
    return bits, ties
