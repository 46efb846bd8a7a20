"""Chain parameters, potential energy and its derivatives.

Energies are dimensionless. Each ion sits in an on-site potential, either the
harmonic trap plus periodic lattice

    V_i(x) = ω_tr² x² / 2 - K cos x

or a private harmonic microtrap V_i(x) = κ (x - c_i)² / 2 for disordered
chains. All pairs interact through 1/|x_i - x_j|.
"""

import math
from dataclasses import dataclass
from enum import StrEnum
from functools import lru_cache

import numpy as np

from src.errors import DomainError, SingularityError


class Variant(StrEnum):
    PERIODIC = "periodic"
    DISORDERED = "disordered"


@dataclass(frozen=True)
class DisorderParams:
    """Microtrap centres with spacings drawn uniformly from s̄(1 ± w)."""

    mean_spacing: float = 2.0 * math.pi
    relative_halfwidth: float = 0.25
    trap_stiffness: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.mean_spacing > 0:
            raise DomainError("mean_spacing must be positive")
        if not 0.0 <= self.relative_halfwidth < 1.0:
            raise DomainError("relative_halfwidth must lie in [0, 1)")
        if not self.trap_stiffness > 0:
            raise DomainError("trap_stiffness must be positive")


@dataclass(frozen=True)
class ChainParams:
    """A chain of n_ions ions. Setting disorder selects the microtrap variant."""

    n_ions: int
    omega_tr: float = 0.0
    lattice_amplitude: float = 0.0
    disorder: DisorderParams | None = None

    def __post_init__(self) -> None:
        if self.n_ions < 1:
            raise DomainError(f"n_ions must be at least 1, got {self.n_ions}")
        if not (math.isfinite(self.omega_tr) and self.omega_tr >= 0):
            raise DomainError("omega_tr must be finite and non-negative")
        if not (math.isfinite(self.lattice_amplitude) and self.lattice_amplitude >= 0):
            raise DomainError("lattice_amplitude must be finite and non-negative")

    @property
    def variant(self) -> Variant:
        return Variant.PERIODIC if self.disorder is None else Variant.DISORDERED

    @property
    def is_confined(self) -> bool:
        return self.disorder is not None or self.omega_tr > 0 or self.n_ions == 1

    def with_amplitude(self, lattice_amplitude: float) -> "ChainParams":
        return ChainParams(self.n_ions, self.omega_tr, lattice_amplitude, self.disorder)


@dataclass
class IonConfiguration:
    """A relaxed (or attempted) equilibrium."""

    positions: np.ndarray
    energy: float
    grad_inf_norm: float
    converged: bool
    n_iterations: int

    @property
    def n_ions(self) -> int:
        return int(self.positions.size)

    @property
    def spacings(self) -> np.ndarray:
        return np.diff(self.positions)


@lru_cache(maxsize=64)
def _trap_centers(disorder: DisorderParams, n_ions: int) -> np.ndarray:
    rng = np.random.default_rng(disorder.seed)
    s = disorder.mean_spacing
    w = disorder.relative_halfwidth
    spacings = rng.uniform(s * (1.0 - w), s * (1.0 + w), size=n_ions - 1)
    centers = np.concatenate([[0.0], np.cumsum(spacings)])
    centers.setflags(write=False)
    return centers


def trap_centers(disorder: DisorderParams, n_ions: int) -> np.ndarray:
    """Microtrap centres c_0 = 0, c_{i+1} = c_i + s_i. Read-only and seeded."""
    if n_ions < 1:
        raise DomainError("n_ions must be at least 1")
    return _trap_centers(disorder, n_ions)


@lru_cache(maxsize=16)
def _pair_indices(n_ions: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n_ions, k=1)


def check_positions(params: ChainParams, positions) -> np.ndarray:
    """Validate shape, finiteness and strict ordering."""
    x = np.asarray(positions, dtype=float)
    if x.shape != (params.n_ions,):
        raise DomainError(f"expected {params.n_ions} positions, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("positions must be finite")
    gaps = np.diff(x)
    if np.any(gaps == 0):
        raise SingularityError("two ions share a position")
    if np.any(gaps < 0):
        raise DomainError("positions must be strictly increasing")
    return x


def is_ordered(positions: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(positions)) and np.all(np.diff(positions) > 0))


def _onsite(params: ChainParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """On-site potential, first and second derivative per ion."""
    if params.disorder is None:
        w2 = params.omega_tr**2
        k = params.lattice_amplitude
        cos_x = np.cos(x)
        return 0.5 * w2 * x**2 - k * cos_x, w2 * x + k * np.sin(x), w2 + k * cos_x
    kappa = params.disorder.trap_stiffness
    offset = x - trap_centers(params.disorder, params.n_ions)
    return 0.5 * kappa * offset**2, kappa * offset, np.full_like(x, kappa)


def _row_sums(terms: np.ndarray) -> np.ndarray:
    """Correctly rounded row sums, independent of ion labelling."""
    return np.array([math.fsum(row) for row in terms])


def _separations(x: np.ndarray) -> np.ndarray:
    diff = np.subtract.outer(x, x)
    np.fill_diagonal(diff, np.inf)
    return diff


def energy(params: ChainParams, positions) -> float:
    """Total potential energy, summed with compensated addition."""
    x = check_positions(params, positions)
    onsite, _, _ = _onsite(params, x)
    i, j = _pair_indices(params.n_ions)
    return math.fsum(np.concatenate([onsite, 1.0 / (x[j] - x[i])]))


def gradient(params: ChainParams, positions) -> np.ndarray:
    x = check_positions(params, positions)
    _, force_free, _ = _onsite(params, x)
    diff = _separations(x)
    coulomb = _row_sums(np.sign(diff) / diff**2)
    return force_free - coulomb


def hessian(params: ChainParams, positions) -> np.ndarray:
    """Exactly symmetric Hessian; off-diagonal -2/|Δ|³."""
    x = check_positions(params, positions)
    _, _, curvature = _onsite(params, x)
    couplings = 2.0 / np.abs(_separations(x)) ** 3
    h = -couplings
    h[np.diag_indices_from(h)] = curvature + _row_sums(couplings)
    return h
