"""Mode localization in chains of randomly spaced microtraps."""

import logging
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from src.chain.ground_state import RelaxSettings, relax
from src.chain.model import ChainParams, DisorderParams, trap_centers
from src.errors import ConvergenceError, DomainError
from src.experiments.pool import run_ordered
from src.phonons import localization_report, spectrum

logger = logging.getLogger(__name__)

MIN_SEEDS = 10
DISORDER_COLUMNS = ["N", "seed", "min_omega", "pr_median", "pr_q25", "pr_q75"]
DEFAULT_N_LIST = (50, 100, 200)


@dataclass(frozen=True)
class DisorderRow:
    n_ions: int
    seed: int
    min_omega: float
    pr_median: float
    pr_q25: float
    pr_q75: float
    spread_median: float

    def to_row(self) -> dict[str, float | int]:
        return {
            "N": self.n_ions,
            "seed": self.seed,
            "min_omega": self.min_omega,
            "pr_median": self.pr_median,
            "pr_q25": self.pr_q25,
            "pr_q75": self.pr_q75,
        }


@dataclass(frozen=True)
class DisorderSummary:
    """Aggregates over seeds at one chain size."""

    n_ions: int
    pr_median: float
    spread_median: float
    min_omega_mean: float
    min_omega_lowest: float


@dataclass
class DisorderStudy:
    rows: list[DisorderRow]
    summaries: list[DisorderSummary]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_row() for r in self.rows], columns=DISORDER_COLUMNS)

    def summary(self, n_ions: int) -> DisorderSummary:
        for s in self.summaries:
            if s.n_ions == n_ions:
                return s
        raise KeyError(n_ions)


@dataclass(frozen=True)
class _SeedTask:
    n_ions: int
    disorder: DisorderParams
    settings: RelaxSettings


def _analyse_seed(task: _SeedTask) -> DisorderRow:
    params = ChainParams(task.n_ions, disorder=task.disorder)
    config = relax(params, trap_centers(task.disorder, task.n_ions), task.settings)
    if not config.converged:
        raise ConvergenceError(
            f"microtrap chain N={task.n_ions} seed={task.disorder.seed} did not relax"
        )
    spec = spectrum(params, config)
    q25, median, q75 = np.percentile(spec.participation_ratios, [25, 50, 75])
    spread = np.median([mode.spread for mode in localization_report(spec)])
    return DisorderRow(
        n_ions=task.n_ions,
        seed=task.disorder.seed,
        min_omega=spec.gap,
        pr_median=float(median),
        pr_q25=float(q25),
        pr_q75=float(q75),
        spread_median=float(spread),
    )


def disorder_localization(
    n_list,
    disorder: DisorderParams,
    n_seeds: int,
    settings: RelaxSettings,
    threads: int | None = None,
) -> DisorderStudy:
    """Participation ratios, mode spreads and lowest frequency over seeds disorder.seed + s.

    Per-seed rows hold medians over modes; the spread is the rms extent in ion
    index from localization_report.
    """
    if n_seeds < MIN_SEEDS:
        raise DomainError(f"need at least {MIN_SEEDS} disorder seeds")
    sizes = [int(n) for n in n_list]
    if not sizes or min(sizes) < 2:
        raise DomainError("chain sizes must be at least 2")
    tasks = [
        _SeedTask(n, replace(disorder, seed=disorder.seed + s), settings)
        for n in sizes
        for s in range(n_seeds)
    ]
    rows = run_ordered(_analyse_seed, tasks, threads)

    summaries = []
    for n in sizes:
        mine = [r for r in rows if r.n_ions == n]
        gaps = np.array([r.min_omega for r in mine])
        summaries.append(
            DisorderSummary(
                n_ions=n,
                pr_median=float(np.median([r.pr_median for r in mine])),
                spread_median=float(np.median([r.spread_median for r in mine])),
                min_omega_mean=float(gaps.mean()),
                min_omega_lowest=float(gaps.min()),
            )
        )
        logger.info(
            "N=%d: median PR %.3g, median spread %.3g, mean lowest frequency %.4g",
            n,
            summaries[-1].pr_median,
            summaries[-1].spread_median,
            summaries[-1].min_omega_mean,
        )
    return DisorderStudy(rows, summaries)
