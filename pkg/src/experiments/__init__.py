"""Parameter sweeps and derived studies built on the chain and phonon modules."""

from src.experiments.disorder import DisorderStudy, disorder_localization
from src.experiments.minima import MinimaRow, minima_statistics
from src.experiments.sweeps import SweepRecord, default_k_grid, sweep_gap_vs_k
from src.experiments.transition import (
    KcMethod,
    TransitionEstimate,
    TransitionStatus,
    estimate_kc,
    fit_power_law,
    kc_scaling_scan,
    trap_softening,
)

__all__ = [
    "DisorderStudy",
    "KcMethod",
    "MinimaRow",
    "SweepRecord",
    "TransitionEstimate",
    "TransitionStatus",
    "default_k_grid",
    "disorder_localization",
    "estimate_kc",
    "fit_power_law",
    "kc_scaling_scan",
    "minima_statistics",
    "sweep_gap_vs_k",
    "trap_softening",
]
