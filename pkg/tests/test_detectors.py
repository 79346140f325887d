import math

import numpy as np
import pytest

from ookfusion.detectors import (
    ReferenceValues,
    WeightPairs,
    detect_elrt,
    detect_m,
    elrt_logliks,
    fuse,
    threshold_detect,
    train_references,
    weights_c,
    weights_d,
    weights_p,
)
from ookfusion.errors import ConfigError, DegenerateTrainingError


def pilots_from_amps(amps):
    """Build a complex pilot block from real amplitudes."""
    return np.asarray(amps, dtype=float).astype(complex)


@pytest.fixture
def simple_ref():
    # On half [4, 4, 2, 2] -> a1 = 3; off half [1, 1, 1, 1] -> a0 = 1.
    # Threshold 2: every on slot decides on (g1 = 4), every off slot decides
    # off (g0 = 4), both clamped to 1 - 2/8 = 0.75.
    return train_references(pilots_from_amps([[4, 4, 2, 2, 1, 1, 1, 1]]))


def test_training_hand_example(simple_ref):
    ref = simple_ref
    assert ref.a1[0] == pytest.approx(3.0)
    assert ref.a0[0] == pytest.approx(1.0)
    assert ref.a_th[0] == pytest.approx(2.0)
    assert ref.g1[0] == 4 and ref.g0[0] == 4
    assert ref.p11[0] == pytest.approx(0.75)
    assert ref.p00[0] == pytest.approx(0.75)
    assert ref.n_pilot == 8


def test_threshold_midpoint_equals_block_mean():
    rng = np.random.default_rng(2)
    pilots = rng.random((3, 12)) + 1j * rng.random((3, 12))
    ref = train_references(pilots)
    np.testing.assert_allclose(ref.a_th, np.abs(pilots).mean(axis=1))


def test_training_unclamped_probabilities():
    # a1 = 1.75, a0 = 1, threshold 1.375: one on slot above, all off below.
    ref = train_references(pilots_from_amps([[4, 1, 1, 1, 1, 1, 1, 1]]))
    assert ref.g1[0] == 1
    assert ref.p11[0] == pytest.approx(0.25)
    assert ref.p00[0] == pytest.approx(0.75)


def test_training_clamp_at_zero_counts():
    # Inverted halves: no on slot reaches the threshold, no off slot stays
    # below it, so both raw probabilities are 0 and get clamped to 2/n.
    ref = train_references(pilots_from_amps([[1, 1, 3, 3]]))
    assert ref.g1[0] == 0 and ref.g0[0] == 0
    assert ref.p11[0] == pytest.approx(0.5)
    assert ref.p00[0] == pytest.approx(0.5)
    assert ref.a1[0] < ref.a0[0]


def test_training_validation():
    with pytest.raises(ConfigError):
        train_references(pilots_from_amps([1, 2, 3, 4]))
    with pytest.raises(ConfigError):
        train_references(pilots_from_amps([[1, 2]]))
    with pytest.raises(ConfigError):
        train_references(pilots_from_amps([[1, 2, 3, 4, 5, 6, 7]]))
    with pytest.raises(DegenerateTrainingError):
        train_references(np.zeros((2, 8), dtype=complex))


def test_threshold_detect_boundary():
    a_th = np.array([2.0])
    np.testing.assert_array_equal(
        threshold_detect(np.array([[1.9, 2.0, 2.1]]), a_th), [[0, 1, 1]]
    )


def test_probability_weights(simple_ref):
    pairs = weights_p(simple_ref, np.array([[2.5, 1.5]]))
    np.testing.assert_allclose(pairs.w1[0], [math.log(0.75), math.log(0.25)])
    np.testing.assert_allclose(pairs.w0[0], [math.log(0.25), math.log(0.75)])


def test_deviation_weights(simple_ref):
    pairs = weights_d(simple_ref, np.array([[3.0, 2.5]]))
    np.testing.assert_allclose(pairs.w1[0], [0.0, -0.5])
    np.testing.assert_allclose(pairs.w0[0], [-2.0, -1.5])


def test_combination_weights(simple_ref):
    # At amplitude 3 (an on decision): the on deviation vanishes, the off
    # deviation is 2, so w0 = -4/1 + 4 * log(0.25)/2.
    pairs = weights_c(simple_ref, np.array([[3.0]]))
    assert pairs.w1[0, 0] == pytest.approx(0.0)
    assert pairs.w0[0, 0] == pytest.approx(-4.0 + 2.0 * math.log(0.25))
    assert pairs.w0[0, 0] == pytest.approx(-6.772588722239782)


def test_combination_weights_are_nonpositive(simple_ref):
    rng = np.random.default_rng(8)
    pairs = weights_c(simple_ref, rng.random((1, 64)) * 6.0)
    assert np.all(pairs.w1 <= 0.0)
    assert np.all(pairs.w0 <= 0.0)


def test_combination_weights_need_positive_amplitudes():
    ref = ReferenceValues(
        a_th=np.array([0.5]),
        a1=np.array([0.0]),
        a0=np.array([1.0]),
        g1=np.array([2]),
        g0=np.array([2]),
        p11=np.array([0.5]),
        p00=np.array([0.5]),
        n_pilot=8,
    )
    with pytest.raises(DegenerateTrainingError):
        weights_c(ref, np.array([[1.0]]))


def test_decisions_are_scale_invariant():
    # Amplitude rescaling rescales the trained references linearly and the
    # weight pairs by a positive factor, so every fused decision survives.
    rng = np.random.default_rng(17)
    pilots = rng.random((3, 20)) + 1j * rng.random((3, 20))
    pilots[:, :10] *= 3.0
    amps = np.abs(rng.random((3, 40)) * 2.0)
    scale = 7.5

    ref = train_references(pilots)
    ref_s = train_references(pilots * scale)
    np.testing.assert_allclose(ref_s.a_th, scale * ref.a_th)
    np.testing.assert_allclose(ref_s.p11, ref.p11)

    for weight_fn in (weights_p, weights_d, weights_c):
        bits, ties = fuse(weight_fn(ref, amps))
        bits_s, ties_s = fuse(weight_fn(ref_s, amps * scale))
        np.testing.assert_array_equal(bits, bits_s)
        np.testing.assert_array_equal(ties, ties_s)
    np.testing.assert_array_equal(
        detect_m(ref, amps)[0], detect_m(ref_s, amps * scale)[0]
    )


def test_fuse_tie_decides_zero():
    pairs = WeightPairs(
        w1=np.array([[0.5, 1.0]]), w0=np.array([[0.5, 0.5]])
    )
    bits, ties = fuse(pairs)
    np.testing.assert_array_equal(bits, [0, 1])
    np.testing.assert_array_equal(ties, [True, False])


def test_majority_rule():
    ref = ReferenceValues(
        a_th=np.ones(3),
        a1=2.0 * np.ones(3),
        a0=0.5 * np.ones(3),
        g1=np.full(3, 4),
        g0=np.full(3, 4),
        p11=np.full(3, 0.75),
        p00=np.full(3, 0.75),
        n_pilot=8,
    )
    amps = np.array([[2.0, 2.0], [0.5, 2.0], [0.6, 0.6]])
    bits, ties = detect_m(ref, amps)
    np.testing.assert_array_equal(bits, [0, 1])
    assert not ties.any()

    # Even split on an even node count is a flagged tie deciding 0.
    ref2 = ReferenceValues(
        a_th=np.ones(2),
        a1=2.0 * np.ones(2),
        a0=0.5 * np.ones(2),
        g1=np.full(2, 4),
        g0=np.full(2, 4),
        p11=np.full(2, 0.75),
        p00=np.full(2, 0.75),
        n_pilot=8,
    )
    bits2, ties2 = detect_m(ref2, np.array([[2.0], [0.5]]))
    assert bits2[0] == 0 and ties2[0]


def test_equal_probabilities_reduce_to_majority():
    # With one shared p11 = p00 > 1/2 across nodes the probability weights
    # add a fixed positive log-ratio per on vote, so fusion equals majority.
    k = 5
    ref = ReferenceValues(
        a_th=np.linspace(0.5, 1.5, k),
        a1=np.linspace(1.0, 3.0, k),
        a0=np.linspace(0.1, 0.4, k),
        g1=np.full(k, 7),
        g0=np.full(k, 7),
        p11=np.full(k, 0.7),
        p00=np.full(k, 0.7),
        n_pilot=20,
    )
    rng = np.random.default_rng(23)
    amps = rng.random((k, 200)) * 2.0
    bits_p, ties_p = fuse(weights_p(ref, amps))
    bits_m, ties_m = detect_m(ref, amps)
    np.testing.assert_array_equal(bits_p, bits_m)
    np.testing.assert_array_equal(ties_p, ties_m)


def test_single_node_probability_equals_deviation():
    # For one node, both rules reduce to the amplitude threshold whenever
    # the trained statistics are coherent (p11 + p00 > 1 and a1 > a0).
    rng = np.random.default_rng(31)
    agreements = 0
    for _ in range(50):
        on = rng.random(10) + 2.0
        off = rng.random(10) * 0.5
        ref = train_references(pilots_from_amps([np.concatenate([on, off])]))
        assert ref.p11[0] + ref.p00[0] > 1.0
        assert ref.a1[0] > ref.a0[0]
        amps = rng.random((1, 20)) * 3.0
        bits_p, ties_p = fuse(weights_p(ref, amps))
        bits_d, ties_d = fuse(weights_d(ref, amps))
        keep = ~(ties_p | ties_d)
        np.testing.assert_array_equal(bits_p[keep], bits_d[keep])
        agreements += int(keep.sum())
    assert agreements > 900


def test_elrt_hand_value_single_pilot_pair():
    # One pilot per half at 2 and 0, unit kernel precision: the constant in
    # front is log(2/n) + log(c/pi) = log(1/pi).
    pilots = np.array([[2.0 + 0.0j, 0.0 + 0.0j]])
    y = np.array([1.5 + 0.0j])
    ll1, ll0 = elrt_logliks(pilots, y, kernel_c=1.0)
    assert ll1 == pytest.approx(math.log(1.0 / math.pi) - 0.25)
    assert ll0 == pytest.approx(math.log(1.0 / math.pi) - 2.25)
    bit, tie = detect_elrt(pilots, y, kernel_c=1.0)
    assert bit == 1 and not tie


def test_elrt_zero_distance_constant():
    pilots = np.array([[0.0 + 0.0j, 0.0 + 0.0j]])
    ll1, ll0 = elrt_logliks(pilots, np.array([0.0 + 0.0j]), kernel_c=1.0)
    assert ll1 == pytest.approx(-1.1447298858494002)
    assert ll0 == pytest.approx(ll1)


def test_elrt_symmetric_pilots_tie_to_zero():
    pilots = np.array([[1.0 + 0.0j, 1.0 + 0.0j]])
    bit, tie = detect_elrt(pilots, np.array([3.0 + 1.0j]), kernel_c=2.0)
    assert bit == 0 and tie


def test_elrt_batch_matches_single():
    rng = np.random.default_rng(41)
    pilots = rng.normal(size=(2, 10)) + 1j * rng.normal(size=(2, 10))
    ys = rng.normal(size=(2, 6)) + 1j * rng.normal(size=(2, 6))
    ll1_b, ll0_b = elrt_logliks(pilots, ys, kernel_c=0.7)
    for j in range(ys.shape[1]):
        ll1, ll0 = elrt_logliks(pilots, ys[:, j], kernel_c=0.7)
        assert ll1 == pytest.approx(ll1_b[j])
        assert ll0 == pytest.approx(ll0_b[j])
    bits, ties = detect_elrt(pilots, ys, kernel_c=0.7)
    assert bits.shape == (6,) and ties.shape == (6,)


def test_elrt_sums_nodes():
    rng = np.random.default_rng(43)
    pilots = rng.normal(size=(3, 8)) + 1j * rng.normal(size=(3, 8))
    y = rng.normal(size=3) + 1j * rng.normal(size=3)
    ll1, _ = elrt_logliks(pilots, y, kernel_c=1.3)
    parts = [
        elrt_logliks(pilots[k : k + 1], y[k : k + 1], kernel_c=1.3)[0]
        for k in range(3)
    ]
    assert ll1 == pytest.approx(sum(parts))


def test_elrt_validation():
    pilots = np.array([[1.0 + 0.0j, 0.0 + 0.0j]])
    with pytest.raises(ConfigError):
        elrt_logliks(pilots, np.array([0.0j]), kernel_c=0.0)
    with pytest.raises(ConfigError):
        elrt_logliks(pilots, np.array([0.0j]), kernel_c=math.inf)
    with pytest.raises(ConfigError):
        elrt_logliks(np.array([1.0 + 0.0j, 0.0j]), np.array([0.0j]), 1.0)
    with pytest.raises(ConfigError):
        elrt_logliks(np.array([[1.0 + 0.0j, 0.0j, 2.0j]]), np.array([0.0j]), 1.0)
    with pytest.raises(ConfigError):
        elrt_logliks(pilots, np.zeros((3, 2), dtype=complex), 1.0)
