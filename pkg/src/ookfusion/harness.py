"""Monte Carlo BER harness: deterministic streams, sweeps, and CSV output.

Every random draw descends from a master seed through named substreams keyed
by integer indices (context, grid cell, frame).  A grid cell's frame
sequence never depends on the detector under test or on how work is spread
across processes, so detectors are always compared on identical frames and
a sweep's CSV bytes are identical for any worker count.

Error counting follows a sequential stopping rule per cell: frames are
consumed until a minimum error count is reached or a data-symbol budget is
exhausted; whole frames always count.  Frames whose pilot training is
degenerate are counted and skipped.  Confidence intervals are 95% Wilson.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .channel import dbm_to_watts, squared_gain_ppf
from .detectors import (
    WeightPairs,
    detect_elrt,
    detect_m,
    fuse,
    threshold_detect,
    train_references,
    weights_c,
    weights_d,
    weights_p,
)
from .errors import ConfigError, DegenerateTrainingError
from .frames import FrameConfig, ReceivedFrame, simulate_frame
from .oracle import (
    StatCsiDetector,
    StatCsiTable,
    detect_mrc,
    detect_stat_csi_tabulated,
    kernel_density_gap,
)

DETECTOR_IDS = ("mrc", "stat", "elrt", "m-wcnde", "p-wcnde", "d-wcnde", "c-wcnde")

# Weight-comparing detectors train on pilot amplitudes every frame.
TRAINED_IDS = ("m-wcnde", "p-wcnde", "d-wcnde", "c-wcnde")

# Substream contexts; a new context means a fresh independent stream family.
STREAM_SWEEP = 1
STREAM_SCATTER = 2
STREAM_CONVERGENCE = 3
STREAM_CONVERGENCE_PROBE = 4

SWEEP_COLUMNS = (
    "detector", "power_dbm", "np", "k_nodes", "data_symbols",
    "errors", "ber", "ci_lo", "ci_hi", "ties", "seed",
)
SCATTER_COLUMNS = ("true_bit", "norm_weight_diff", "decided_bit")
CONVERGENCE_COLUMNS = ("np", "kernel_c", "mean_gap", "std_gap", "seeds")

WILSON_Z = 1.959963984540054  # two-sided 95%


def substream(master_seed: int, context: int, *indices: int) -> np.random.Generator:
    """Independent generator for one (context, index...) cell of a run.

    Streams are derived from integer entropy tuples, so results do not
    depend on process scheduling or on how many cells run in parallel.
    """
    entropy = (int(master_seed), int(context), *(int(i) for i in indices))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def wilson_interval(errors: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion.

    Returns ``(0.0, 1.0)`` for zero trials.
    """
    if trials < 0 or errors < 0 or errors > trials:
        raise ConfigError("need 0 <= errors <= trials")
    if trials == 0:
        return 0.0, 1.0
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2.0 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class SweepConfig:
    """Full description of one BER sweep over a power grid (and pilot grid).

    ``frame`` provides the node models, noise, payload length, and the
    default pilot length; per-cell transmit power (and pilot length, when a
    ``pilot_grid`` is given) override its values.  ``kernel_c_scale`` sets
    the kernel precision of the kernel-density detector as a multiple of
    ``1/(N0*B)``.
    """

    frame: FrameConfig
    detectors: tuple[str, ...]
    power_grid_dbm: tuple[float, ...]
    pilot_grid: tuple[int, ...] = ()
    min_errors: int = 100
    max_data_symbols: int = 10_000_000
    kernel_c_scale: float = 1.0
    master_seed: int = 0

    def __post_init__(self) -> None:
        unknown = [d for d in self.detectors if d not in DETECTOR_IDS]
        if unknown:
            raise ConfigError(f"unknown detector ids: {unknown}")
        if not self.detectors:
            raise ConfigError("at least one detector is required")
        if not self.power_grid_dbm:
            raise ConfigError("power grid must be non-empty")
        if any(not math.isfinite(p) for p in self.power_grid_dbm):
            raise ConfigError("power grid entries must be finite")
        for n in self.pilot_grid:
            if n < 4 or n % 2 != 0:
                raise ConfigError("pilot grid entries must be even integers >= 4")
        if self.min_errors < 1:
            raise ConfigError("min_errors must be >= 1")
        if self.max_data_symbols < self.frame.n_data:
            raise ConfigError("max_data_symbols must cover at least one frame")
        if not (math.isfinite(self.kernel_c_scale) and self.kernel_c_scale > 0):
            raise ConfigError("kernel_c_scale must be positive and finite")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must fit in an unsigned 64-bit integer")

    @property
    def effective_pilot_grid(self) -> tuple[int, ...]:
        return self.pilot_grid if self.pilot_grid else (self.frame.n_pilot,)


@dataclass(frozen=True)
class BerPoint:
    """One grid cell's Monte Carlo outcome."""

    detector: str
    power_dbm: float
    n_pilot: int
    k_nodes: int
    data_symbols: int
    errors: int
    ber: float
    ci_lo: float
    ci_hi: float
    ties: int
    seed: int
    degenerate_frames: int = 0


@dataclass(frozen=True)
class ScatterPoint:
    """One payload symbol's fused weight difference, normalized to [-1, 1]."""

    true_bit: int
    norm_weight_diff: float
    decided_bit: int


_TABLE_CACHE: dict[tuple, StatCsiTable] = {}


def _stat_tables(cfg: FrameConfig) -> list[StatCsiTable]:
    tables = []
    for dist in cfg.node_dists:
        key = (dist, cfg.noise, cfg.tx_power_watts)
        table = _TABLE_CACHE.get(key)
        if table is None:
            det = StatCsiDetector(dist=dist, noise=cfg.noise, tx_power_watts=cfg.tx_power_watts)
            table = StatCsiTable.build(det)
            _TABLE_CACHE[key] = table
        tables.append(table)
    return tables


def weight_pairs(detector: str, ref, amps: np.ndarray) -> WeightPairs:
    """Per-node on/off weights for any weight-comparing detector id.

    The majority rule is expressed as indicator weights (its vote count
    difference), so all four variants share the same fusion step.
    """
    if detector == "p-wcnde":
        return weights_p(ref, amps)
    if detector == "d-wcnde":
        return weights_d(ref, amps)
    if detector == "c-wcnde":
        return weights_c(ref, amps)
    if detector == "m-wcnde":
        votes = threshold_detect(amps, ref.a_th).astype(float)
        return WeightPairs(w1=votes, w0=1.0 - votes)
    raise ConfigError(f"{detector!r} is not a weight-comparing detector")


def decide_frame(
    detector: str,
    frame: ReceivedFrame,
    tx_power_watts: float,
    stat_tables=None,
    kernel_c: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Decide all payload symbols of one frame with the named detector.

    Returns ``(bits, ties)`` over the payload slots.  Raises
    ``DegenerateTrainingError`` when a trained detector cannot be fit to this
    frame's pilots.
    """
    if detector == "mrc":
        return detect_mrc(frame.data_channels, frame.data_samples, tx_power_watts)
    if detector == "stat":
        if stat_tables is None:
            raise ConfigError("statistical-CSI decisions need per-node tables")
        return detect_stat_csi_tabulated(stat_tables, frame.data_samples)
    if detector == "elrt":
        if kernel_c is None:
            raise ConfigError("kernel-density decisions need kernel_c")
        return detect_elrt(frame.pilot_samples, frame.data_samples, kernel_c)
    if detector in TRAINED_IDS:
        ref = train_references(frame.pilot_samples)
        amps = np.abs(frame.data_samples)
        if detector == "m-wcnde":
            return detect_m(ref, amps)
        return fuse(weight_pairs(detector, ref, amps))
    raise ConfigError(f"unknown detector id {detector!r}")


def run_ber_point(cfg: SweepConfig, detector: str, power_idx: int, pilot_idx: int) -> BerPoint:
    """Run one grid cell until ``min_errors`` or the symbol budget is reached.

    The frame stream is keyed by (master seed, grid cell, frame index) only,
    never by the detector, so every detector at a cell sees identical frames.
    """
    power_dbm = cfg.power_grid_dbm[power_idx]
    n_pilot = cfg.effective_pilot_grid[pilot_idx]
    frame_cfg = replace(
        cfg.frame, n_pilot=n_pilot, tx_power_watts=dbm_to_watts(power_dbm)
    )
    stat_tables = _stat_tables(frame_cfg) if detector == "stat" else None
    kernel_c = (
        cfg.kernel_c_scale / frame_cfg.noise.power_watts if detector == "elrt" else None
    )

    errors = 0
    ties = 0
    symbols = 0
    degenerate = 0
    frame_idx = 0
    # Degenerate frames consume no symbols; the hard frame cap keeps a
    # pathological configuration from looping forever.
    max_frames = 4 * math.ceil(cfg.max_data_symbols / frame_cfg.n_data) + 64
    while errors < cfg.min_errors and symbols < cfg.max_data_symbols:
        if frame_idx >= max_frames:
            break
        rng = substream(cfg.master_seed, STREAM_SWEEP, power_idx, pilot_idx, frame_idx)
        frame_idx += 1
        frame = simulate_frame(frame_cfg, rng)
        try:
            bits, tie_mask = decide_frame(
                detector, frame, frame_cfg.tx_power_watts, stat_tables, kernel_c
            )
        except DegenerateTrainingError:
            degenerate += 1
            continue
        errors += int(np.count_nonzero(bits != frame.data_symbols))
        ties += int(np.count_nonzero(tie_mask))
        symbols += frame_cfg.n_data

    ber = errors / symbols if symbols else 0.0
    ci_lo, ci_hi = wilson_interval(errors, symbols)
    return BerPoint(
        detector=detector,
        power_dbm=power_dbm,
        n_pilot=n_pilot,
        k_nodes=frame_cfg.k_nodes,
        data_symbols=symbols,
        errors=errors,
        ber=ber,
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        ties=ties,
        seed=cfg.master_seed,
        degenerate_frames=degenerate,
    )


def _run_cell(args: tuple[SweepConfig, str, int, int]) -> BerPoint:
    return run_ber_point(*args)


def run_sweep(cfg: SweepConfig, workers: int = 1) -> list[BerPoint]:
    """Run the full detector x pilot x power grid, in deterministic order.

    ``workers > 1`` spreads grid cells over processes; results are returned
    in grid order regardless of scheduling, so output files are byte-stable
    for any worker count.
    """
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    cells = [
        (cfg, detector, power_idx, pilot_idx)
        for detector in cfg.detectors
        for pilot_idx in range(len(cfg.effective_pilot_grid))
        for power_idx in range(len(cfg.power_grid_dbm))
    ]
    if workers == 1 or len(cells) == 1:
        return [_run_cell(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_cell, cells))


def collect_scatter(
    frame_cfg: FrameConfig, detector: str, n_symbols: int, master_seed: int
) -> list[ScatterPoint]:
    """Collect normalized fused weight differences for payload symbols.

    Runs frames from the scatter stream until ``n_symbols`` payload symbols
    are gathered, then normalizes the fused on/off weight difference by its
    largest magnitude in the batch (an all-zero batch stays at zero).  Only
    weight-comparing detectors participate.
    """
    if detector not in TRAINED_IDS:
        raise ConfigError(f"scatter export needs a weight-comparing detector, got {detector!r}")
    if n_symbols < 1:
        raise ConfigError("n_symbols must be >= 1")

    true_bits: list[np.ndarray] = []
    diffs: list[np.ndarray] = []
    decided: list[np.ndarray] = []
    collected = 0
    frame_idx = 0
    max_frames = 4 * math.ceil(n_symbols / frame_cfg.n_data) + 64
    while collected < n_symbols and frame_idx < max_frames:
        rng = substream(master_seed, STREAM_SCATTER, frame_idx)
        frame_idx += 1
        frame = simulate_frame(frame_cfg, rng)
        try:
            ref = train_references(frame.pilot_samples)
        except DegenerateTrainingError:
            continue
        pairs = weight_pairs(detector, ref, np.abs(frame.data_samples))
        diff = pairs.w1.sum(axis=0) - pairs.w0.sum(axis=0)
        bits = (diff > 0).astype(np.int8)
        true_bits.append(frame.data_symbols)
        diffs.append(diff)
        decided.append(bits)
        collected += frame.data_symbols.size

    truth = np.concatenate(true_bits)[:n_symbols]
    diff = np.concatenate(diffs)[:n_symbols]
    bits = np.concatenate(decided)[:n_symbols]
    scale = float(np.max(np.abs(diff)))
    norm = diff / scale if scale > 0 else np.zeros_like(diff)
    return [
        ScatterPoint(int(t), float(d), int(b)) for t, d, b in zip(truth, norm, bits)
    ]


@dataclass(frozen=True)
class ConvergenceCell:
    """Mean and spread of the kernel-density gap over seeds at one grid cell."""

    n_pilot: int
    kernel_c: float
    mean_gap: float
    std_gap: float
    n_seeds: int


def run_convergence(
    det: StatCsiDetector,
    pilot_grid: tuple[int, ...],
    kernel_c_grid: tuple[float, ...],
    n_seeds: int,
    master_seed: int,
    probe: complex | None = None,
) -> tuple[complex, list[ConvergenceCell]]:
    """Measure the kernel-density estimator's gap over a pilot x kernel grid.

    The probed sample is drawn once (an "on" sample through the detector's
    own link model) unless supplied, then held fixed across the whole grid;
    every (pilot count, kernel precision, seed) cell gets an independent
    pilot draw.  Returns the probe and the per-cell gap statistics.
    """
    if n_seeds < 2:
        raise ConfigError("n_seeds must be >= 2")
    if probe is None:
        rng = substream(master_seed, STREAM_CONVERGENCE_PROBE, 0)
        rho = squared_gain_ppf(det.dist, rng.random())
        theta = 2.0 * np.pi * rng.random()
        sigma = math.sqrt(det.noise.power_watts / 2.0)
        noise = sigma * complex(rng.standard_normal(), rng.standard_normal())
        h = math.sqrt(rho) * complex(math.cos(theta), math.sin(theta))
        probe = math.sqrt(det.tx_power_watts) * h + noise

    cells = []
    for np_idx, n_pilot in enumerate(pilot_grid):
        for c_idx, kernel_c in enumerate(kernel_c_grid):
            gaps = np.array(
                [
                    kernel_density_gap(
                        det,
                        n_pilot,
                        kernel_c,
                        probe,
                        substream(master_seed, STREAM_CONVERGENCE, np_idx, c_idx, s),
                    )
                    for s in range(n_seeds)
                ]
            )
            cells.append(
                ConvergenceCell(
                    n_pilot=n_pilot,
                    kernel_c=kernel_c,
                    mean_gap=float(gaps.mean()),
                    std_gap=float(gaps.std(ddof=1)),
                    n_seeds=n_seeds,
                )
            )
    return probe, cells


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.9g}"


def render_sweep_csv(points: list[BerPoint]) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for p in points:
        lines.append(
            ",".join(
                [
                    p.detector,
                    _fmt(p.power_dbm),
                    _fmt(p.n_pilot),
                    _fmt(p.k_nodes),
                    _fmt(p.data_symbols),
                    _fmt(p.errors),
                    _fmt(p.ber),
                    _fmt(p.ci_lo),
                    _fmt(p.ci_hi),
                    _fmt(p.ties),
                    _fmt(p.seed),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def render_scatter_csv(points: list[ScatterPoint]) -> str:
    lines = [",".join(SCATTER_COLUMNS)]
    for p in points:
        lines.append(f"{p.true_bit},{_fmt(p.norm_weight_diff)},{p.decided_bit}")
    return "\n".join(lines) + "\n"


def render_convergence_csv(cells: list[ConvergenceCell]) -> str:
    lines = [",".join(CONVERGENCE_COLUMNS)]
    for c in cells:
        lines.append(
            f"{c.n_pilot},{_fmt(c.kernel_c)},{_fmt(c.mean_gap)},{_fmt(c.std_gap)},{c.n_seeds}"
        )
    return "\n".join(lines) + "\n"
