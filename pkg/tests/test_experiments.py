import json
import math

import numpy as np
import pytest
from conftest import OMEGA_N50

from src.chain.ground_state import RelaxSettings, energy_slack, ground_state, relax
from src.chain.model import ChainParams, DisorderParams
from src.errors import DomainError
from src.experiments import (
    KcMethod,
    SweepRecord,
    TransitionStatus,
    default_k_grid,
    disorder_localization,
    estimate_kc,
    fit_power_law,
    kc_scaling_scan,
    minima_statistics,
    sweep_gap_vs_k,
    trap_softening,
)
from src.experiments.sweeps import records_frame
from src.experiments.transition import transition_frame
from src.maps import GOLDEN_MEAN
from src.output import table_text
from src.phonons import spectrum

FAST = RelaxSettings(n_starts=2)


def record(k: float, n: int, omega_tr: float, omega0: float) -> SweepRecord:
    return SweepRecord(k, n, omega_tr, omega0, -1.0, 1, 0, True)


def synthetic_records() -> list[SweepRecord]:
    rows = []
    for n, omega_tr in ((50, 0.01), (150, 0.005)):
        for k in (0.01, 0.05, 0.1, 0.2):
            omega0 = 0.5 if k >= 0.1 else omega_tr * (1 + 10 * k)
            rows.append(record(k, n, omega_tr, omega0))
    return rows


def test_default_k_grid() -> None:
    grid = default_k_grid()
    assert grid[0] == pytest.approx(0.005)
    assert grid[-1] == pytest.approx(0.3)
    assert np.all(np.diff(grid) > 0)
    base = np.geomspace(0.005, 0.3, 24)
    inside = np.sum((base >= 0.03) & (base <= 0.08))
    assert np.sum((grid >= 0.03) & (grid <= 0.08)) >= 2 * inside - 1


def test_collapse_estimate_on_constructed_crossover() -> None:
    estimate = estimate_kc(synthetic_records())
    assert estimate.status is TransitionStatus.FOUND
    assert estimate.k_c_estimate == 0.1
    assert set(estimate.details) == {0.01, 0.05, 0.1, 0.2}
    assert estimate.details[0.2] == 0.0


def test_gap_threshold_estimate() -> None:
    estimate = estimate_kc(synthetic_records(), KcMethod.GAP_THRESHOLD)
    assert estimate.k_c_estimate == 0.1


def test_no_transition_without_lattice() -> None:
    records = [record(0.0, n, w, w) for n, w in ((50, 0.014), (150, 0.00528))]
    estimate = estimate_kc(records)
    assert estimate.status is TransitionStatus.NO_TRANSITION
    assert math.isnan(estimate.k_c_estimate)


def test_collapse_needs_two_chain_sizes() -> None:
    with pytest.raises(DomainError):
        estimate_kc([record(0.1, 50, 0.01, 0.5)])


def test_transition_table_row() -> None:
    frame = transition_frame([estimate_kc(synthetic_records())])
    assert list(frame.columns) == ["method", "k_c", "detail_json"]
    detail = json.loads(frame["detail_json"][0])
    assert detail["status"] == "found"
    assert detail["metric"]["0.2"] == 0.0


def test_power_law_fit_is_exact_for_cubic_data() -> None:
    nus = np.array([1.0, 1.3, GOLDEN_MEAN, 2.0, 2.6])
    fit = fit_power_law(nus, 0.034 * (nus / GOLDEN_MEAN) ** 3)
    assert fit.exponent == pytest.approx(3.0, abs=1e-12)
    assert fit(GOLDEN_MEAN) == pytest.approx(0.034, rel=1e-12)


def test_power_law_fit_rejects_bad_input() -> None:
    with pytest.raises(DomainError):
        fit_power_law([1.0], [2.0])
    with pytest.raises(DomainError):
        fit_power_law([1.0, 2.0], [0.0, 1.0])


def test_sweep_layout_and_trap_column() -> None:
    records = sweep_gap_vs_k([0.0, 0.1], [8, 12], GOLDEN_MEAN, FAST, {8: 0.05, 12: 0.04})
    assert [(r.n_ions, r.k) for r in records] == [(8, 0.0), (8, 0.1), (12, 0.0), (12, 0.1)]
    assert all(r.converged for r in records)
    for r in records:
        assert r.omega0 >= 0 and math.isfinite(r.energy)
        if r.k == 0.0:
            assert r.omega0 == pytest.approx(r.omega_tr, rel=1e-8)
    frame = records_frame(records)
    assert list(frame.columns) == [
        "K", "N", "omega_tr", "omega0", "energy", "n_minima", "converged"
    ]


def test_sweep_is_deterministic_across_worker_counts() -> None:
    args = ([0.02, 0.2], [6, 9], GOLDEN_MEAN, FAST, {6: 0.06, 9: 0.05})
    serial = table_text(records_frame(sweep_gap_vs_k(*args)))
    again = table_text(records_frame(sweep_gap_vs_k(*args)))
    parallel = table_text(records_frame(sweep_gap_vs_k(*args, threads=2)))
    assert serial == again == parallel


def test_warm_start_never_worsens_the_fresh_minimum() -> None:
    omega = 0.03
    records = sweep_gap_vs_k([0.05, 0.15], [15], GOLDEN_MEAN, FAST, {15: omega})
    fresh, _ = ground_state(ChainParams(15, omega, 0.15), FAST, GOLDEN_MEAN)
    assert records[-1].energy <= fresh.energy + energy_slack(fresh.energy)


def test_warm_started_gap_matches_cold_multistart() -> None:
    omega = 0.03
    grid = [0.0, 0.001, 0.002]
    records = sweep_gap_vs_k(grid, [15], GOLDEN_MEAN, FAST, {15: omega})
    previous = None
    for k, r in zip(grid, records):
        params = ChainParams(15, omega, k)
        cold, _ = ground_state(params, RelaxSettings(n_starts=8), GOLDEN_MEAN)
        assert r.omega0 == pytest.approx(spectrum(params, cold).gap, rel=0.01)
        if previous is not None:
            warm = relax(params, previous.positions)
            assert spectrum(params, warm).gap == pytest.approx(r.omega0, rel=0.01)
        previous = cold


def test_sweep_rejects_unsorted_grid() -> None:
    with pytest.raises(DomainError):
        sweep_gap_vs_k([0.2, 0.1], [10], GOLDEN_MEAN, FAST, {10: 0.05})


def test_minima_statistics_needs_many_starts() -> None:
    with pytest.raises(DomainError):
        minima_statistics([0.0], [10], RelaxSettings(n_starts=10), GOLDEN_MEAN, {10: 0.05})


def test_single_minimum_without_lattice() -> None:
    omegas = {5: 0.08, 8: 0.06}
    rows = minima_statistics([0.0], [5, 8], RelaxSettings(n_starts=50), GOLDEN_MEAN, omegas)
    assert [r.n_minima for r in rows] == [1, 1]
    assert all(math.isnan(r.delta_e1) for r in rows)


@pytest.mark.slow
def test_minima_count_grows_with_chain_size() -> None:
    rows = minima_statistics(
        [0.2], [25, 50], RelaxSettings(n_starts=100), GOLDEN_MEAN, {25: 0.025, 50: OMEGA_N50}
    )
    small, large = rows
    assert large.n_minima >= small.n_minima
    assert large.delta_e1 / abs(large.ground_energy) < 1e-3


def test_disorder_needs_ten_seeds() -> None:
    with pytest.raises(DomainError):
        disorder_localization([20], DisorderParams(), 5, FAST)


def test_uniform_microtraps_have_extended_modes() -> None:
    study = disorder_localization([20, 40], DisorderParams(relative_halfwidth=0.0), 10, FAST)
    ratio = study.summary(40).pr_median / study.summary(20).pr_median
    assert 1.6 <= ratio <= 2.4
    assert study.summary(40).spread_median > study.summary(20).spread_median
    for row in study.rows:
        assert 0.0 < row.spread_median <= row.n_ions / 2


def test_microtrap_gap_is_bounded_by_stiffness() -> None:
    disorder = DisorderParams(relative_halfwidth=0.25, trap_stiffness=0.2)
    study = disorder_localization([20, 40], disorder, 10, FAST)
    assert len(study.rows) == 20
    assert [r.seed for r in study.rows[:10]] == list(range(10))
    assert all(r.min_omega >= math.sqrt(0.2) - 1e-9 for r in study.rows)
    assert list(study.to_frame().columns) == [
        "N",
        "seed",
        "min_omega",
        "pr_median",
        "pr_q25",
        "pr_q75",
    ]


@pytest.mark.slow
def test_disorder_localizes_modes_and_keeps_a_gap() -> None:
    study = disorder_localization([50, 100, 200], DisorderParams(), 10, RelaxSettings())
    prs = [study.summary(n).pr_median for n in (50, 100, 200)]
    assert prs[1] / prs[0] < 1.3
    assert prs[2] / prs[1] < 1.3
    gaps = [study.summary(n).min_omega_mean for n in (50, 100, 200)]
    assert (max(gaps) - min(gaps)) / max(gaps) < 0.15


@pytest.mark.slow
def test_gap_rises_with_lattice() -> None:
    records = sweep_gap_vs_k([0.03, 0.2], [50], GOLDEN_MEAN, RelaxSettings(), {50: OMEGA_N50})
    assert records[0].omega0 <= 0.05
    assert records[1].omega0 >= 0.3


@pytest.mark.slow
def test_transition_for_golden_density() -> None:
    records = sweep_gap_vs_k(default_k_grid(), [50, 150], GOLDEN_MEAN, RelaxSettings())
    estimate = estimate_kc(records)
    assert estimate.found
    assert 0.035 <= estimate.k_c_estimate <= 0.06

    gaps = {(r.n_ions, r.k): r.omega0 for r in records if r.converged}
    sliding = [k for k in default_k_grid() if k < 0.02]
    pinned = [k for k in default_k_grid() if k > 0.1]
    assert sliding and pinned
    for k in sliding:
        assert gaps[150, k] / gaps[50, k] < 0.7
    for k in pinned:
        pair = (gaps[50, k], gaps[150, k])
        assert (max(pair) - min(pair)) / max(pair) < 0.1


@pytest.mark.slow
def test_critical_amplitude_scales_cubically() -> None:
    result = kc_scaling_scan([1.0, 1.3, GOLDEN_MEAN, 2.0, 2.6], 50, RelaxSettings())
    assert 2.5 <= result.fit.exponent <= 3.5
    golden = result.k_c[result.densities.index(GOLDEN_MEAN)]
    assert 0.03 <= golden <= 0.06


@pytest.mark.slow
def test_trap_softens_with_chain_size() -> None:
    result = trap_softening([50, 150, 300], GOLDEN_MEAN, 0.005, RelaxSettings(n_starts=1))
    assert -1.0 <= result.fit.exponent <= -0.8
