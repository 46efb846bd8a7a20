"""Counting quasi-degenerate metastable configurations."""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.chain.ground_state import RelaxSettings, calibrate_trap, ground_state
from src.chain.model import ChainParams
from src.errors import DomainError
from src.experiments.pool import run_ordered

logger = logging.getLogger(__name__)

MIN_STARTS = 50
MINIMA_COLUMNS = ["K", "N", "n_minima", "dE1", "dE_median"]


@dataclass(frozen=True)
class MinimaRow:
    k: float
    n_ions: int
    n_minima: int
    delta_e1: float
    delta_e_median: float
    ground_energy: float

    def to_row(self) -> dict[str, float | int]:
        return {
            "K": self.k,
            "N": self.n_ions,
            "n_minima": self.n_minima,
            "dE1": self.delta_e1,
            "dE_median": self.delta_e_median,
        }


@dataclass(frozen=True)
class _MinimaTask:
    params: ChainParams
    settings: RelaxSettings
    density: float


def _enumerate(task: _MinimaTask) -> MinimaRow:
    _, catalog = ground_state(task.params, task.settings, task.density)
    gaps = catalog.energy_gaps[1:]
    row = MinimaRow(
        k=task.params.lattice_amplitude,
        n_ions=task.params.n_ions,
        n_minima=catalog.n_distinct,
        delta_e1=gaps[0] if gaps else math.nan,
        delta_e_median=float(np.median(gaps)) if gaps else math.nan,
        ground_energy=catalog.ground.energy,
    )
    logger.info("K=%.6g N=%d: %d distinct minima", row.k, row.n_ions, row.n_minima)
    return row


def minima_statistics(
    k_list,
    n_list,
    settings: RelaxSettings,
    density: float,
    omega_by_n: dict[int, float] | None = None,
    density_tolerance: float = 0.005,
    threads: int | None = None,
) -> list[MinimaRow]:
    """Number of distinct minima and their energy gaps above the ground state.

    Trap frequencies missing from omega_by_n are calibrated at the smallest K.
    """
    if settings.n_starts < MIN_STARTS:
        raise DomainError(f"minima enumeration needs at least {MIN_STARTS} starts")
    ks = sorted(float(k) for k in k_list)
    if not ks or not n_list:
        raise DomainError("need at least one K and one N")
    omegas = dict(omega_by_n or {})
    for n in n_list:
        if int(n) not in omegas:
            omegas[int(n)] = calibrate_trap(
                int(n), density, ks[0], density_tolerance, settings
            ).omega_tr
    tasks = [
        _MinimaTask(ChainParams(int(n), omegas[int(n)], k), settings, density)
        for k in ks
        for n in n_list
    ]
    return run_ordered(_enumerate, tasks, threads)


def minima_frame(rows: list[MinimaRow]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in rows], columns=MINIMA_COLUMNS)
