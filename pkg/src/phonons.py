"""Small-oscillation spectrum around an equilibrium.

With unit mass the squared mode frequencies are the Hessian eigenvalues. Modes
are indexed by k = i/N in ascending frequency order.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import linalg

from src.chain.ground_state import NEGATIVE_CURVATURE_TOLERANCE, RelaxSettings, ground_state
from src.chain.model import ChainParams, IonConfiguration, hessian
from src.errors import DomainError, SaddlePointError
from src.maps import GOLDEN_MEAN

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-8
MIN_ACOUSTIC_IONS = 10


@dataclass
class PhononSpectrum:
    """Frequencies ascending; modes[:, i] is the unit eigenvector of mode i."""

    frequencies: np.ndarray
    modes: np.ndarray
    k_scaled: np.ndarray
    participation_ratios: np.ndarray

    @property
    def gap(self) -> float:
        return float(self.frequencies[0])

    @property
    def n_modes(self) -> int:
        return int(self.frequencies.size)


@dataclass(frozen=True)
class AcousticFit:
    sound_velocity: float
    intercept: float
    residual: float


@dataclass(frozen=True)
class ModeLocalization:
    index: int
    omega: float
    participation_ratio: float
    centroid: float
    spread: float


def participation_ratio(mode: np.ndarray) -> float:
    """1/Σ e_i⁴ for a unit-norm mode: 1 when localized on one ion, N when uniform."""
    e = np.asarray(mode, dtype=float)
    norm = float(np.linalg.norm(e))
    if abs(norm - 1.0) > NORMALIZATION_TOLERANCE:
        raise DomainError(f"mode is not normalized (norm {norm:.12g})")
    return float(1.0 / np.sum(e**4))


def _fix_signs(modes: np.ndarray) -> np.ndarray:
    # largest component positive, so output bytes do not depend on LAPACK sign choices
    pivots = np.argmax(np.abs(modes), axis=0)
    signs = np.sign(modes[pivots, np.arange(modes.shape[1])])
    signs[signs == 0] = 1.0
    return modes * signs


def spectrum(params: ChainParams, config: IonConfiguration) -> PhononSpectrum:
    """Frequencies and modes of a converged minimum."""
    if not config.converged:
        raise DomainError("spectrum needs a converged configuration")
    eigenvalues, modes = linalg.eigh(hessian(params, config.positions))
    if eigenvalues[0] < -NEGATIVE_CURVATURE_TOLERANCE:
        raise SaddlePointError(f"lowest Hessian eigenvalue {eigenvalues[0]:.3g} is negative")
    # roundoff negatives inside the tolerance count as zero frequency
    frequencies = np.sqrt(np.clip(eigenvalues, 0.0, None))
    modes = _fix_signs(modes)
    n = frequencies.size
    return PhononSpectrum(
        frequencies=frequencies,
        modes=modes,
        k_scaled=np.arange(n) / n,
        participation_ratios=1.0 / np.sum(modes**4, axis=0),
    )


def gap(
    params: ChainParams, settings: RelaxSettings, density: float = GOLDEN_MEAN
) -> float:
    """Lowest phonon frequency ω_0 of the ground state."""
    best, _ = ground_state(params, settings, density)
    return spectrum(params, best).gap


def fit_acoustic(spec: PhononSpectrum) -> AcousticFit:
    """Linear fit ω ≈ C_v k + b over the lower half of the spectrum."""
    if spec.n_modes < MIN_ACOUSTIC_IONS:
        raise DomainError(f"acoustic fit needs at least {MIN_ACOUSTIC_IONS} modes")
    low = spec.k_scaled < 0.5
    k, omega = spec.k_scaled[low], spec.frequencies[low]
    slope, intercept = np.polyfit(k, omega, 1)
    residual = math.sqrt(float(np.mean((omega - (slope * k + intercept)) ** 2)))
    return AcousticFit(float(slope), float(intercept), residual)


def localization_report(spec: PhononSpectrum) -> list[ModeLocalization]:
    report = []
    index = np.arange(spec.n_modes)
    for i in range(spec.n_modes):
        weight = spec.modes[:, i] ** 2
        centroid = float(np.sum(index * weight))
        spread = math.sqrt(max(float(np.sum(index**2 * weight)) - centroid**2, 0.0))
        report.append(
            ModeLocalization(
                index=i,
                omega=float(spec.frequencies[i]),
                participation_ratio=float(spec.participation_ratios[i]),
                centroid=centroid,
                spread=spread,
            )
        )
    return report


def localization_frame(spec: PhononSpectrum) -> pd.DataFrame:
    rows = localization_report(spec)
    return pd.DataFrame(
        {
            "mode_index": [r.index for r in rows],
            "k_scaled": spec.k_scaled,
            "omega": [r.omega for r in rows],
            "participation_ratio": [r.participation_ratio for r in rows],
            "centroid": [r.centroid for r in rows],
            "spread": [r.spread for r in rows],
        }
    )
