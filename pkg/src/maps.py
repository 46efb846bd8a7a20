"""Recursive ion map, its standard-map reduction and orbit diagnostics.

Equilibrium with nearest-neighbour Coulomb forces gives a two-dimensional
area-preserving map. With p_i = 1/(x_i - x_{i-1})²:

    p_{i+1} = p_i - ω_tr² x_i - K sin x_i
    x_{i+1} = x_i + 1/sqrt(p_{i+1})

Close to a resonance with density ν the map linearises into the Chirikov
standard map with an effective kick strength K_eff.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.errors import DomainError, OrbitEscapeError

logger = logging.getLogger(__name__)

GOLDEN_MEAN = (1.0 + math.sqrt(5.0)) / 2.0

# Breakup of the golden invariant curve of the standard map, expressed as the
# lattice amplitude at golden-mean density.
KC_GOLDEN = 0.034


@dataclass(frozen=True)
class IonMapState:
    x: float
    p: float

    def __post_init__(self) -> None:
        if not self.p > 0:
            raise DomainError(f"effective momentum must be positive, got {self.p!r}")


@dataclass(frozen=True)
class StandardMapState:
    x: float
    y: float


@dataclass(frozen=True)
class ResonanceConstants:
    """Linearisation constants of the ion map around density ν."""

    density: float
    p_r: float
    alpha: float

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.density


@dataclass
class MapOrbit:
    """Orbit coordinates. Column 0 is the start, and arrays may hold ensembles."""

    x: np.ndarray
    y: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.x.shape[0] - 1


@dataclass(frozen=True)
class DiffusionFit:
    exponent: float
    rate: float
    steps: np.ndarray
    variances: np.ndarray


def _require_density(density: float) -> None:
    if not (math.isfinite(density) and density > 0):
        raise DomainError(f"density must be positive, got {density!r}")


def resonance_constants(density: float) -> ResonanceConstants:
    _require_density(density)
    p_r = (density / (2.0 * math.pi)) ** 2
    return ResonanceConstants(
        density=density, p_r=p_r, alpha=(2.0 * math.pi / density) ** 3 / 2.0
    )


def k_eff(k: float, density: float) -> float:
    """Standard-map kick strength equivalent to lattice amplitude K at density ν."""
    if k < 0:
        raise DomainError(f"lattice amplitude must be non-negative, got {k!r}")
    return k * resonance_constants(density).alpha


def k_c_theory(density: float) -> float:
    """Pinning threshold predicted from the golden curve, scaled as ν³."""
    _require_density(density)
    return KC_GOLDEN * (density / GOLDEN_MEAN) ** 3


def density_for_kc(kc: float) -> float:
    """Inverse of k_c_theory."""
    if not kc > 0:
        raise DomainError(f"critical amplitude must be positive, got {kc!r}")
    return GOLDEN_MEAN * (kc / KC_GOLDEN) ** (1.0 / 3.0)


def ion_map_step(state: IonMapState, k: float, omega_tr: float) -> IonMapState:
    p_next = state.p - omega_tr**2 * state.x - k * math.sin(state.x)
    if p_next <= 0:
        raise OrbitEscapeError(f"effective momentum {p_next:.6g} at x={state.x:.6g}")
    return IonMapState(x=state.x + 1.0 / math.sqrt(p_next), p=p_next)


def ion_map_orbit(state: IonMapState, k: float, omega_tr: float, n_steps: int) -> MapOrbit:
    """Iterate the ion map; raises OrbitEscapeError naming the failing step."""
    if n_steps < 0:
        raise DomainError("n_steps must be non-negative")
    xs = np.empty(n_steps + 1)
    ps = np.empty(n_steps + 1)
    xs[0], ps[0] = state.x, state.p
    for step in range(1, n_steps + 1):
        try:
            state = ion_map_step(state, k, omega_tr)
        except OrbitEscapeError as exc:
            raise OrbitEscapeError(f"step {step}: {exc}") from exc
        xs[step], ps[step] = state.x, state.p
    return MapOrbit(x=xs, y=ps)


def ion_map_chain(k: float, omega_tr: float, density: float, n_ions: int) -> np.ndarray:
    """Build a chain by iterating the map outward from the centre.

    The right half is generated from a centre seeded at the resonance spacing
    and the left half is its mirror image.
    """
    if n_ions < 1:
        raise DomainError("n_ions must be at least 1")
    spacing = resonance_constants(density).spacing
    if n_ions % 2:
        state = IonMapState(x=0.0, p=1.0 / spacing**2)
        right = [0.0]
        n_more = n_ions // 2
    else:
        state = IonMapState(x=spacing / 2.0, p=1.0 / spacing**2)
        right = [state.x]
        n_more = n_ions // 2 - 1
    for _ in range(n_more):
        state = ion_map_step(state, k, omega_tr)
        right.append(state.x)
    half = np.asarray(right)
    left = -half[::-1]
    if n_ions % 2:
        left = left[:-1]
    return np.concatenate([left, half])


def central_window(n_ions: int) -> slice:
    """Indices of the central third of a chain, never fewer than two ions."""
    lo = n_ions // 3
    hi = min(n_ions, max(lo + 2, (2 * n_ions) // 3))
    return slice(lo, hi)


def map_prediction_errors(
    positions: np.ndarray, k: float, omega_tr: float
) -> tuple[np.ndarray, np.ndarray]:
    """One-step map predictions of each spacing from the two ions before it.

    Returns (predicted, actual) spacings x_{i+1} - x_i for i = 1 .. N-2.
    Escaping steps predict nan.
    """
    x = np.asarray(positions, dtype=float)
    if x.size < 3:
        raise DomainError("need at least three ions to test the map")
    predicted = np.full(x.size - 2, np.nan)
    for i in range(1, x.size - 1):
        state = IonMapState(x=float(x[i]), p=1.0 / (x[i] - x[i - 1]) ** 2)
        try:
            predicted[i - 1] = ion_map_step(state, k, omega_tr).x - x[i]
        except OrbitEscapeError:
            logger.debug("map prediction escapes at ion %d", i)
    return predicted, np.diff(x)[1:]


def central_spacing_deviation(positions: np.ndarray, k: float, omega_tr: float) -> float:
    """Relative difference between mean predicted and mean relaxed central spacings."""
    predicted, actual = map_prediction_errors(positions, k, omega_tr)
    window = central_window(len(positions))
    # prediction i-1 refers to the spacing to the right of ion i
    lo = max(window.start, 1) - 1
    hi = min(window.stop, len(positions) - 1) - 1
    pred = predicted[lo:hi]
    if np.isnan(pred).any():
        raise OrbitEscapeError("map prediction escapes inside the central window")
    return float(abs(pred.mean() / actual[lo:hi].mean() - 1.0))


def standard_map_step(state: StandardMapState, k_eff: float) -> StandardMapState:
    y_next = state.y - k_eff * math.sin(state.x)
    return StandardMapState(x=state.x - y_next, y=y_next)


def standard_map_inverse(state: StandardMapState, k_eff: float) -> StandardMapState:
    x_prev = state.x + state.y
    return StandardMapState(x=x_prev, y=state.y + k_eff * math.sin(x_prev))


def standard_map_jacobian(state: StandardMapState, k_eff: float) -> np.ndarray:
    c = k_eff * math.cos(state.x)
    return np.array([[1.0 + c, -1.0], [-c, 1.0]])


def standard_map_orbit(x0, y0, k_eff: float, n_steps: int) -> MapOrbit:
    """Iterate the standard map. x0 and y0 may be scalars or equal-shape arrays."""
    if n_steps < 0:
        raise DomainError("n_steps must be non-negative")
    x = np.array(x0, dtype=float)
    y = np.array(y0, dtype=float)
    if x.shape != y.shape:
        raise DomainError("x0 and y0 must have the same shape")
    xs = np.empty((n_steps + 1,) + x.shape)
    ys = np.empty_like(xs)
    xs[0], ys[0] = x, y
    for step in range(1, n_steps + 1):
        y = y - k_eff * np.sin(x)
        x = x - y
        xs[step], ys[step] = x, y
    return MapOrbit(x=xs, y=ys)


def to_standard_map(state: IonMapState, density: float) -> StandardMapState:
    """Linearised coordinates of an ion-map state near the resonance.

    y carries the resonant advance: the ion map moves x by 2π/ν - α(p - p_r)
    per step, the standard map by -y.
    """
    rc = resonance_constants(density)
    return StandardMapState(x=state.x, y=rc.alpha * (state.p - rc.p_r) - rc.spacing)


def is_bounded(y: np.ndarray, threshold: float = math.pi) -> bool:
    """True when |y| stays below the threshold over the whole orbit."""
    return bool(np.max(np.abs(np.asarray(y))) < threshold)


def diffusion_exponent(
    k_eff: float,
    n_orbits: int = 200,
    n_steps: int = 2000,
    seed: int = 0,
    start: tuple[float, float] = (0.1, 0.05),
    width: float = 1e-2,
) -> DiffusionFit:
    """Growth exponent of var(y) over an ensemble started in a small box."""
    if n_orbits < 2 or n_steps < 20:
        raise DomainError("need at least 2 orbits and 20 steps")
    rng = np.random.default_rng(seed)
    x0 = start[0] + width * rng.random(n_orbits)
    y0 = start[1] + width * rng.random(n_orbits)
    orbit = standard_map_orbit(x0, y0, k_eff, n_steps)
    steps = np.unique(np.geomspace(max(n_steps // 8, 1), n_steps, 8).astype(int))
    variances = orbit.y[steps].var(axis=1)
    exponent, _ = np.polyfit(np.log(steps), np.log(np.maximum(variances, 1e-300)), 1)
    return DiffusionFit(
        exponent=float(exponent),
        rate=float(variances[-1] / steps[-1]),
        steps=steps,
        variances=variances,
    )
