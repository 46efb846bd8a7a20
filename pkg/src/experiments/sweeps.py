"""Gap-versus-amplitude sweeps at fixed trap frequency per chain size."""

import logging
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
import pandas as pd

from src.chain.ground_state import RelaxSettings, calibrate_trap, ground_state, relax
from src.chain.model import ChainParams, IonConfiguration
from src.errors import ConvergenceError, DomainError, SaddlePointError
from src.experiments.pool import run_ordered
from src.phonons import spectrum

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ["K", "N", "omega_tr", "omega0", "energy", "n_minima", "converged"]

DEFAULT_N_LIST = (50, 150)
EXTENDED_N_LIST = (50, 150, 300)


@dataclass
class SweepRecord:
    """Ground state and gap at one (K, N) grid point."""

    k: float
    n_ions: int
    omega_tr: float
    omega0: float
    energy: float
    n_distinct_minima: int
    seed: int
    converged: bool

    def to_row(self) -> dict[str, Any]:
        return {
            "K": self.k,
            "N": self.n_ions,
            "omega_tr": self.omega_tr,
            "omega0": self.omega0,
            "energy": self.energy,
            "n_minima": self.n_distinct_minima,
            "converged": self.converged,
        }

    @classmethod
    def from_row(cls, row: dict[str, Any], seed: int = 0) -> "SweepRecord":
        return cls(
            k=float(row["K"]),
            n_ions=int(row["N"]),
            omega_tr=float(row["omega_tr"]),
            omega0=float(row["omega0"]),
            energy=float(row["energy"]),
            n_distinct_minima=int(row["n_minima"]),
            seed=seed,
            converged=bool(row["converged"]),
        )


def records_frame(records: list[SweepRecord]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in records], columns=SWEEP_COLUMNS)


def default_k_grid() -> np.ndarray:
    """24 log-spaced amplitudes over [0.005, 0.3], doubled in [0.03, 0.08]."""
    base = np.geomspace(0.005, 0.3, 24)
    mids = np.sqrt(base[:-1] * base[1:])
    extra = mids[(mids >= 0.03) & (mids <= 0.08)]
    return np.sort(np.concatenate([base, extra]))


@dataclass(frozen=True)
class SeriesTask:
    """One warm-started K series at fixed N. omega_tr None means calibrate first."""

    n_ions: int
    k_grid: tuple[float, ...]
    density: float
    settings: RelaxSettings
    omega_tr: float | None = None
    density_tolerance: float = 0.005


def _failed(task: SeriesTask, k: float, omega_tr: float) -> SweepRecord:
    return SweepRecord(k, task.n_ions, omega_tr, math.nan, math.nan, 0, task.settings.seed, False)


def run_series(task: SeriesTask) -> list[SweepRecord]:
    """Sweep K upward, each point taking the better of a warm start and a fresh multi-start."""
    omega_tr = task.omega_tr
    if omega_tr is None:
        try:
            omega_tr = calibrate_trap(
                task.n_ions,
                task.density,
                task.k_grid[0],
                task.density_tolerance,
                task.settings,
            ).omega_tr
        except ConvergenceError as exc:
            logger.warning("calibration failed for N=%d nu=%g: %s", task.n_ions, task.density, exc)
            return [_failed(task, k, math.nan) for k in task.k_grid]
        logger.info("N=%d calibrated omega_tr=%.6g", task.n_ions, omega_tr)

    records: list[SweepRecord] = []
    previous: IonConfiguration | None = None
    for k in task.k_grid:
        params = ChainParams(task.n_ions, omega_tr, k)
        candidates: list[IonConfiguration] = []
        n_minima = 0
        try:
            best, catalog = ground_state(params, task.settings, task.density)
            candidates.append(best)
            n_minima = catalog.n_distinct
        except ConvergenceError as exc:
            logger.warning("fresh multi-start failed at N=%d K=%.6g: %s", task.n_ions, k, exc)
        if previous is not None:
            warm = relax(params, previous.positions, task.settings)
            if warm.converged:
                candidates.append(warm)
        if not candidates:
            records.append(_failed(task, k, omega_tr))
            continue
        best = min(candidates, key=lambda c: c.energy)
        try:
            omega0 = spectrum(params, best).gap
        except SaddlePointError as exc:
            logger.warning("saddle at N=%d K=%.6g: %s", task.n_ions, k, exc)
            records.append(_failed(task, k, omega_tr))
            continue
        records.append(
            SweepRecord(
                k=k,
                n_ions=task.n_ions,
                omega_tr=omega_tr,
                omega0=omega0,
                energy=best.energy,
                n_distinct_minima=n_minima,
                seed=task.settings.seed,
                converged=True,
            )
        )
        previous = best
        logger.info("N=%d K=%.6g omega0=%.6g", task.n_ions, k, omega0)
    return records


def sweep_gap_vs_k(
    k_grid,
    n_list,
    density: float,
    settings: RelaxSettings,
    omega_by_n: dict[int, float] | None = None,
    density_tolerance: float = 0.005,
    threads: int | None = None,
) -> list[SweepRecord]:
    """ω_0(K) for each chain size; records are ordered N-major, K-minor."""
    grid = tuple(float(k) for k in k_grid)
    if not grid:
        raise DomainError("K grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise DomainError("K grid must be sorted ascending")
    if not n_list:
        raise DomainError("need at least one chain size")
    omega_by_n = omega_by_n or {}
    tasks = [
        SeriesTask(
            n_ions=int(n),
            k_grid=grid,
            density=density,
            settings=settings,
            omega_tr=omega_by_n.get(int(n)),
            density_tolerance=density_tolerance,
        )
        for n in n_list
    ]
    series = run_ordered(run_series, tasks, threads)
    return [record for records in series for record in records]
