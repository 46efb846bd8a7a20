import math

import numpy as np
import pytest
from conftest import OMEGA_N50, random_ordered_positions, two_ion_spacing

from src.chain.model import (
    ChainParams,
    DisorderParams,
    Variant,
    energy,
    gradient,
    hessian,
    trap_centers,
)
from src.errors import DomainError, SingularityError


def test_single_ion_energy() -> None:
    assert energy(ChainParams(1, OMEGA_N50, 0.0), [0.0]) == 0.0
    assert energy(ChainParams(1, OMEGA_N50, 0.2), [0.0]) == pytest.approx(-0.2)


def test_two_ion_energy_is_minimal_at_force_balance(two_ion_params, two_ion_positions) -> None:
    d = two_ion_spacing(OMEGA_N50)
    assert d == pytest.approx(21.68, abs=0.01)
    e0 = energy(two_ion_params, two_ion_positions)
    assert e0 == pytest.approx(OMEGA_N50**2 * d**2 / 4 + 1 / d, rel=1e-14)
    for delta in (-0.1, 0.1):
        stretched = two_ion_positions * (1 + delta / d)
        assert energy(two_ion_params, stretched) > e0


def test_gradient_vanishes_at_analytic_equilibria(two_ion_params, two_ion_positions) -> None:
    np.testing.assert_allclose(gradient(ChainParams(1, 0.1, 0.3), [0.0]), [0.0], atol=0)
    np.testing.assert_allclose(gradient(two_ion_params, two_ion_positions), 0.0, atol=1e-12)


def test_gradient_matches_finite_differences(rng) -> None:
    h = 1e-6
    for _ in range(100):
        params = ChainParams(5, rng.uniform(0.01, 0.5), rng.uniform(0.0, 0.5))
        x = random_ordered_positions(rng, 5)
        g = gradient(params, x)
        fd = np.empty(5)
        for i in range(5):
            step = np.zeros(5)
            step[i] = h
            fd[i] = (energy(params, x + step) - energy(params, x - step)) / (2 * h)
        assert np.max(np.abs(fd - g)) / np.max(np.abs(g)) < 1e-6


def test_hessian_matches_finite_differences(rng) -> None:
    h = 1e-6
    for _ in range(20):
        params = ChainParams(5, rng.uniform(0.01, 0.5), rng.uniform(0.0, 0.5))
        x = random_ordered_positions(rng, 5)
        fd = np.empty((5, 5))
        for i in range(5):
            step = np.zeros(5)
            step[i] = h
            fd[:, i] = (gradient(params, x + step) - gradient(params, x - step)) / (2 * h)
        exact = hessian(params, x)
        assert np.max(np.abs(fd - exact)) / np.max(np.abs(exact)) < 1e-5


def test_hessian_is_exactly_symmetric(rng) -> None:
    params = ChainParams(30, 0.02, 0.1)
    x = random_ordered_positions(rng, 30)
    h = hessian(params, x)
    assert np.array_equal(h, h.T)


def test_hessian_row_sums_are_on_site_curvature(rng) -> None:
    params = ChainParams(12, 0.03, 0.2)
    x = random_ordered_positions(rng, 12)
    expected = params.omega_tr**2 + params.lattice_amplitude * np.cos(x)
    np.testing.assert_allclose(hessian(params, x).sum(axis=1), expected, atol=1e-12)


def test_single_ion_hessian() -> None:
    np.testing.assert_allclose(hessian(ChainParams(1, OMEGA_N50), [3.0]), [[OMEGA_N50**2]])


def test_two_ion_hessian_eigenvalues(two_ion_params, two_ion_positions) -> None:
    eig = np.linalg.eigvalsh(hessian(two_ion_params, two_ion_positions))
    np.testing.assert_allclose(eig, [OMEGA_N50**2, 3 * OMEGA_N50**2], rtol=1e-10)


def test_parity(rng) -> None:
    params = ChainParams(7, 0.05, 0.3)
    x = random_ordered_positions(rng, 7)
    mirrored = -x[::-1]
    assert energy(params, mirrored) == pytest.approx(energy(params, x), rel=1e-14)
    np.testing.assert_allclose(gradient(params, mirrored), -gradient(params, x)[::-1], atol=1e-12)


def test_mirror_image_is_bitwise_identical_without_lattice(rng) -> None:
    params = ChainParams(40, 0.02, 0.0)
    x = random_ordered_positions(rng, 40)
    mirrored = -x[::-1]
    assert energy(params, mirrored) == energy(params, x)
    assert np.array_equal(gradient(params, mirrored), -gradient(params, x)[::-1])
    assert np.array_equal(hessian(params, mirrored), hessian(params, x)[::-1, ::-1])


def test_translation_invariance_without_trap(rng) -> None:
    free = ChainParams(6, 0.0, 0.0)
    x = random_ordered_positions(rng, 6)
    assert energy(free, x + 3.21) == pytest.approx(energy(free, x), rel=1e-13)
    assert abs(gradient(free, x).sum()) < 1e-10

    lattice = ChainParams(6, 0.0, 0.4)
    total = gradient(lattice, x).sum() - np.sum(0.4 * np.sin(x))
    assert abs(total) < 1e-10


def test_coincident_ions_are_singular() -> None:
    with pytest.raises(SingularityError):
        energy(ChainParams(3, 0.1), [0.0, 1.0, 1.0])


@pytest.mark.parametrize(
    "positions",
    [[1.0, 0.0, 2.0], [0.0, 1.0], [0.0, math.nan, 2.0]],
)
def test_bad_positions_rejected(positions) -> None:
    with pytest.raises(DomainError):
        gradient(ChainParams(3, 0.1), positions)


@pytest.mark.parametrize(
    "kwargs",
    [{"n_ions": 0}, {"n_ions": 3, "omega_tr": -0.1}, {"n_ions": 3, "lattice_amplitude": -1}],
)
def test_invalid_params_rejected(kwargs) -> None:
    with pytest.raises(DomainError):
        ChainParams(**kwargs)


def test_disorder_params_validation() -> None:
    with pytest.raises(DomainError):
        DisorderParams(relative_halfwidth=1.0)
    with pytest.raises(DomainError):
        DisorderParams(trap_stiffness=0.0)


def test_trap_centers_are_seeded_and_bounded() -> None:
    disorder = DisorderParams(seed=7)
    a = trap_centers(disorder, 40)
    b = trap_centers(DisorderParams(seed=7), 40)
    assert np.array_equal(a, b)
    assert a[0] == 0.0
    spacings = np.diff(a)
    assert np.all(spacings >= 2 * math.pi * 0.75)
    assert np.all(spacings <= 2 * math.pi * 1.25)
    assert not np.array_equal(a, trap_centers(DisorderParams(seed=8), 40))


def test_disordered_energy_uses_microtraps() -> None:
    disorder = DisorderParams(relative_halfwidth=0.0, trap_stiffness=0.5)
    params = ChainParams(3, disorder=disorder)
    assert params.variant is Variant.DISORDERED
    centers = trap_centers(disorder, 3)
    x = centers + np.array([0.1, 0.0, -0.2])
    coulomb = 1 / (x[1] - x[0]) + 1 / (x[2] - x[0]) + 1 / (x[2] - x[1])
    expected = 0.25 * (0.1**2 + 0.2**2) + coulomb
    assert energy(params, x) == pytest.approx(expected, rel=1e-14)
