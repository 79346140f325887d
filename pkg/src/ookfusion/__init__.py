"""Link-level Monte Carlo for noncoherent distributed on-off keying.

Several battery-free nodes each receive the same on-off keyed symbol over
independent fast-varying fading links and forward per-sample scores to a
fusion center.  This package provides the channel models, the per-frame
pilot-trained detector family, channel-state-informed baselines, and a
deterministic Monte Carlo harness with CSV output.
"""

__version__ = "0.1.0"

from .channel import (
    BODY_CHANNEL_MODELS,
    Family,
    GainDistribution,
    NoiseSpec,
    coefficient_of_variation,
    dbm_to_watts,
    moment,
    sample_channel,
    sample_noise,
    sample_squared_gain,
    squared_gain_cdf,
    squared_gain_pdf,
    squared_gain_ppf,
    watts_to_dbm,
)
from .detectors import (
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
from .errors import (
    ConfigError,
    DegenerateTrainingError,
    NumericalError,
    OokFusionError,
)
from .frames import FrameConfig, ReceivedFrame, pilot_symbols, simulate_frame
from .harness import (
    BerPoint,
    ConvergenceCell,
    ScatterPoint,
    SweepConfig,
    collect_scatter,
    run_ber_point,
    run_convergence,
    run_sweep,
    substream,
    wilson_interval,
)
from .oracle import (
    StatCsiDetector,
    StatCsiTable,
    conditional_log_density,
    detect_mrc,
    detect_stat_csi,
    detect_stat_csi_tabulated,
    kernel_density_gap,
    log_i0,
)

__all__ = [
    "BODY_CHANNEL_MODELS",
    "BerPoint",
    "ConfigError",
    "ConvergenceCell",
    "DegenerateTrainingError",
    "Family",
    "FrameConfig",
    "GainDistribution",
    "NoiseSpec",
    "NumericalError",
    "OokFusionError",
    "ReceivedFrame",
    "ReferenceValues",
    "ScatterPoint",
    "StatCsiDetector",
    "StatCsiTable",
    "SweepConfig",
    "WeightPairs",
    "coefficient_of_variation",
    "collect_scatter",
    "conditional_log_density",
    "dbm_to_watts",
    "detect_elrt",
    "detect_m",
    "detect_mrc",
    "detect_stat_csi",
    "detect_stat_csi_tabulated",
    "elrt_logliks",
    "fuse",
    "kernel_density_gap",
    "log_i0",
    "moment",
    "pilot_symbols",
    "run_ber_point",
    "run_convergence",
    "run_sweep",
    "sample_channel",
    "sample_noise",
    "sample_squared_gain",
    "simulate_frame",
    "squared_gain_cdf",
    "squared_gain_pdf",
    "squared_gain_ppf",
    "substream",
    "threshold_detect",
    "train_references",
    "watts_to_dbm",
    "weights_c",
    "weights_d",
    "weights_p",
    "wilson_interval",
]
