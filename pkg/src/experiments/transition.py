"""Locating the pinning transition and its scaling with density."""

import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

import numpy as np
import pandas as pd

from src.chain.ground_state import RelaxSettings, TrapCalibration, calibrate_trap
from src.errors import ConvergenceError, DomainError
from src.experiments.pool import run_ordered
from src.experiments.sweeps import SeriesTask, SweepRecord, default_k_grid, run_series

logger = logging.getLogger(__name__)

TRANSITION_COLUMNS = ["method", "k_c", "detail_json"]


class KcMethod(StrEnum):
    N_COLLAPSE = "NCollapse"
    GAP_THRESHOLD = "GapThreshold"


class TransitionStatus(StrEnum):
    FOUND = "found"
    NO_TRANSITION = "no-transition"


@dataclass
class TransitionEstimate:
    k_c_estimate: float
    method: KcMethod
    status: TransitionStatus
    details: dict[float, float] = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return self.status is TransitionStatus.FOUND

    def to_row(self) -> dict[str, Any]:
        detail = {
            "status": self.status.value,
            "metric": {f"{k:.12g}": float(f"{v:.12g}") for k, v in sorted(self.details.items())},
        }
        return {
            "method": self.method.value,
            "k_c": self.k_c_estimate,
            "detail_json": json.dumps(detail, sort_keys=True),
        }


def transition_frame(estimates: list[TransitionEstimate]) -> pd.DataFrame:
    return pd.DataFrame([e.to_row() for e in estimates], columns=TRANSITION_COLUMNS)


def estimate_kc(
    records: list[SweepRecord],
    method: KcMethod = KcMethod.N_COLLAPSE,
    collapse_tolerance: float = 0.05,
    floor_factor: float = 3.0,
) -> TransitionEstimate:
    """Smallest swept K at which the chain is pinned.

    NCollapse: the gap curves of all chain sizes agree within collapse_tolerance
    and every gap exceeds floor_factor times the largest trap frequency.
    GapThreshold: every chain's gap is at least floor_factor times its own trap
    frequency. The per-K metric is the relative spread or the smallest
    gap-to-trap ratio respectively.
    """
    usable = [r for r in records if r.converged and math.isfinite(r.omega0)]
    if not usable:
        raise DomainError("no converged records to analyse")
    if method is KcMethod.N_COLLAPSE and len({r.n_ions for r in usable}) < 2:
        raise DomainError("N-collapse needs records for at least two chain sizes")

    by_k: dict[float, list[SweepRecord]] = defaultdict(list)
    for r in usable:
        by_k[r.k].append(r)

    details: dict[float, float] = {}
    k_c = math.nan
    for k in sorted(by_k):
        group = by_k[k]
        gaps = np.array([r.omega0 for r in group])
        traps = np.array([r.omega_tr for r in group])
        if method is KcMethod.N_COLLAPSE:
            if len({r.n_ions for r in group}) < 2 or gaps.max() <= 0:
                continue
            metric = float((gaps.max() - gaps.min()) / gaps.max())
            pinned = metric < collapse_tolerance and gaps.min() > floor_factor * traps.max()
        else:
            metric = float(np.min(gaps / traps))
            pinned = metric >= floor_factor
        details[k] = metric
        if pinned and math.isnan(k_c):
            k_c = k

    status = TransitionStatus.NO_TRANSITION if math.isnan(k_c) else TransitionStatus.FOUND
    if status is TransitionStatus.NO_TRANSITION:
        logger.warning("no transition found with method %s", method.value)
    return TransitionEstimate(k_c_estimate=k_c, method=method, status=status, details=details)


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float

    def __call__(self, x: float) -> float:
        return self.prefactor * x**self.exponent


def fit_power_law(x, y) -> PowerLawFit:
    """Least-squares line through (log x, log y)."""
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    if xs.size < 2 or xs.shape != ys.shape:
        raise DomainError("power-law fit needs at least two matching points")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise DomainError("power-law fit needs positive data")
    slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
    return PowerLawFit(exponent=float(slope), prefactor=float(math.exp(intercept)))


@dataclass
class KcScaling:
    densities: list[float]
    omega_tr: list[float]
    k_c: list[float]
    fit: PowerLawFit

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"nu": self.densities, "omega_tr": self.omega_tr, "k_c": self.k_c})


def kc_scaling_scan(
    densities,
    n_ions: int,
    settings: RelaxSettings,
    k_grid=None,
    density_tolerance: float = 0.005,
    threads: int | None = None,
) -> KcScaling:
    """Gap-threshold K_c at each density and the fitted law K_c ∝ ν^exponent."""
    nus = [float(nu) for nu in densities]
    if len(nus) < 2 or min(nus) <= 0 or max(nus) / min(nus) < 2.0:
        raise DomainError("densities must be positive and span at least a factor 2")
    grid = tuple(float(k) for k in (default_k_grid() if k_grid is None else k_grid))
    tasks = [
        SeriesTask(n_ions, grid, nu, settings, None, density_tolerance) for nu in nus
    ]
    series = run_ordered(run_series, tasks, threads)

    kept_nu, kept_omega, kept_kc = [], [], []
    for nu, records in zip(nus, series):
        try:
            estimate = estimate_kc(records, KcMethod.GAP_THRESHOLD)
        except DomainError as exc:
            logger.warning("nu=%g: %s", nu, exc)
            continue
        if not estimate.found:
            logger.warning("nu=%g: no pinning inside the K grid", nu)
            continue
        kept_nu.append(nu)
        kept_omega.append(records[0].omega_tr)
        kept_kc.append(estimate.k_c_estimate)
        logger.info("nu=%g K_c=%.6g", nu, estimate.k_c_estimate)
    if len(kept_nu) < 2:
        raise ConvergenceError("fewer than two densities produced a transition")
    return KcScaling(kept_nu, kept_omega, kept_kc, fit_power_law(kept_nu, kept_kc))


@dataclass(frozen=True)
class _CalibrationTask:
    n_ions: int
    density: float
    lattice_amplitude: float
    density_tolerance: float
    settings: RelaxSettings


def _calibrate(task: _CalibrationTask) -> TrapCalibration:
    return calibrate_trap(
        task.n_ions, task.density, task.lattice_amplitude, task.density_tolerance, task.settings
    )


@dataclass
class TrapSoftening:
    calibrations: list[TrapCalibration]
    fit: PowerLawFit

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([c.to_dict() for c in self.calibrations])


def trap_softening(
    n_list,
    density: float,
    lattice_amplitude: float,
    settings: RelaxSettings,
    density_tolerance: float = 0.005,
    threads: int | None = None,
) -> TrapSoftening:
    """Calibrated ω_tr for each chain size and the exponent of ω_tr ∝ N^β."""
    sizes = [int(n) for n in n_list]
    if len(set(sizes)) < 2:
        raise DomainError("trap softening needs at least two chain sizes")
    tasks = [
        _CalibrationTask(n, density, lattice_amplitude, density_tolerance, settings)
        for n in sizes
    ]
    calibrations = run_ordered(_calibrate, tasks, threads)
    fit = fit_power_law(sizes, [c.omega_tr for c in calibrations])
    return TrapSoftening(calibrations, fit)
