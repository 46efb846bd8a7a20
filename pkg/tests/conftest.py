import math

import numpy as np
import pytest

from src.chain.ground_state import RelaxSettings
from src.chain.model import ChainParams

OMEGA_N50 = 0.014


def two_ion_spacing(omega_tr: float) -> float:
    """Force balance ω² d/2 = 1/d² for two ions in a harmonic trap."""
    return (2.0 / omega_tr**2) ** (1.0 / 3.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def relax_settings() -> RelaxSettings:
    return RelaxSettings(n_starts=4, seed=0)


@pytest.fixture
def two_ion_params() -> ChainParams:
    return ChainParams(n_ions=2, omega_tr=OMEGA_N50, lattice_amplitude=0.0)


@pytest.fixture
def two_ion_positions() -> np.ndarray:
    d = two_ion_spacing(OMEGA_N50)
    return np.array([-d / 2.0, d / 2.0])


def random_ordered_positions(rng: np.random.Generator, n: int) -> np.ndarray:
    gaps = rng.uniform(0.5, 3.0, size=n - 1)
    start = rng.uniform(-math.pi, math.pi)
    return start + np.concatenate([[0.0], np.cumsum(gaps)])
