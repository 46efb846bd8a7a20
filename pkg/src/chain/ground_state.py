"""Equilibrium search: relaxation, multi-start ground states and trap calibration.

Relaxation runs in two stages. A trust-region Newton method with exact Hessians
(scipy) brings the gradient down to a moderate level. A damped Newton polish
then drives it to the requested tolerance, accepting steps on the gradient norm
because energy differences near 1e-10 are below double-precision resolution.
Steps that would reorder ions are rejected and retried shorter.
"""

import logging
import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from src.chain.model import (
    ChainParams,
    IonConfiguration,
    check_positions,
    energy,
    gradient,
    hessian,
    is_ordered,
)
from src.errors import ConvergenceError, DomainError
from src.maps import central_window

logger = logging.getLogger(__name__)

NEGATIVE_CURVATURE_TOLERANCE = 1e-10
DISTINCT_TOLERANCE = 1e-4
MIN_PERTURBED_SPACING = 0.1

_TRUST_REGION_GTOL = 1e-8
_MAX_SADDLE_ESCAPES = 3
_MIN_STEP_FRACTION = 2.0**-30

IterationCallback = Callable[[np.ndarray, float], None]


@dataclass(frozen=True)
class RelaxSettings:
    grad_tolerance: float = 1e-10
    max_iterations: int = 200_000
    n_starts: int = 8
    perturbation_scale: float = 0.3
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.grad_tolerance > 0:
            raise DomainError("grad_tolerance must be positive")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be at least 1")
        if self.n_starts < 1:
            raise DomainError("n_starts must be at least 1")
        if self.perturbation_scale < 0:
            raise DomainError("perturbation_scale must be non-negative")


@dataclass
class MinimaCatalog:
    """Distinct converged minima sorted by energy."""

    configurations: list[IonConfiguration] = field(default_factory=list)

    @property
    def n_distinct(self) -> int:
        return len(self.configurations)

    @property
    def ground(self) -> IonConfiguration:
        return self.configurations[0]

    @property
    def energy_gaps(self) -> list[float]:
        e0 = self.configurations[0].energy
        return [c.energy - e0 for c in self.configurations]


def energy_slack(value: float) -> float:
    """Roundoff allowance when comparing two energies of this size."""
    return 1e-12 * max(1.0, abs(value))


def initial_guess(params: ChainParams, density: float) -> np.ndarray:
    """Uniform chain with spacing 2π/ν centred on zero."""
    if not density > 0:
        raise DomainError(f"density must be positive, got {density!r}")
    n = params.n_ions
    return (np.arange(n) - (n - 1) / 2.0) * (2.0 * math.pi / density)


def perturbed_start(base: np.ndarray, rng: np.random.Generator, scale: float) -> np.ndarray:
    """Gaussian kick of every ion, keeping spacings at least MIN_PERTURBED_SPACING."""
    x = base + scale * rng.standard_normal(base.size)
    gaps = np.maximum(np.diff(x), MIN_PERTURBED_SPACING)
    return x[0] + np.concatenate([[0.0], np.cumsum(gaps)])


def _trust_region(
    params: ChainParams,
    x: np.ndarray,
    budget: int,
    callback: IterationCallback | None,
) -> tuple[np.ndarray, int]:
    def fun(z: np.ndarray) -> float:
        return energy(params, z) if is_ordered(z) else math.inf

    def report(z: np.ndarray) -> None:
        if callback is not None:
            callback(z.copy(), energy(params, z))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        result = optimize.minimize(
            fun,
            x,
            method="trust-exact",
            jac=lambda z: gradient(params, z),
            hess=lambda z: hessian(params, z),
            callback=report,
            options={"gtol": _TRUST_REGION_GTOL, "maxiter": max(budget, 1)},
        )
    return np.asarray(result.x, dtype=float), int(result.nit)


def _newton_polish(
    params: ChainParams,
    x: np.ndarray,
    tolerance: float,
    budget: int,
    callback: IterationCallback | None,
) -> tuple[np.ndarray, int]:
    e = energy(params, x)
    g = gradient(params, x)
    for iteration in range(budget):
        g_norm = float(np.max(np.abs(g)))
        if g_norm <= tolerance:
            return x, iteration
        try:
            factor = linalg.cho_factor(hessian(params, x))
        except linalg.LinAlgError:
            logger.debug("Newton polish stopped: Hessian not positive definite")
            return x, iteration
        step = -linalg.cho_solve(factor, g)
        t = 1.0
        while t >= _MIN_STEP_FRACTION:
            trial = x + t * step
            if is_ordered(trial):
                e_trial = energy(params, trial)
                g_trial = gradient(params, trial)
                if (
                    e_trial <= e + energy_slack(e)
                    and float(np.max(np.abs(g_trial))) < g_norm
                ):
                    break
            t *= 0.5
        else:
            logger.debug("Newton polish stalled at |g|=%.3g", g_norm)
            return x, iteration
        x, e, g = trial, e_trial, g_trial
        if callback is not None:
            callback(x.copy(), e)
    return x, budget


def _softest_mode(params: ChainParams, x: np.ndarray) -> tuple[float, np.ndarray]:
    values, vectors = linalg.eigh(hessian(params, x), subset_by_index=[0, 0])
    return float(values[0]), vectors[:, 0]


def _escape_saddle(params: ChainParams, x: np.ndarray, mode: np.ndarray) -> np.ndarray:
    delta = 0.25 * float(np.min(np.diff(x))) if x.size > 1 else 0.25
    candidates = [x + delta * mode, x - delta * mode]
    return min(candidates, key=lambda z: energy(params, z))


def relax(
    params: ChainParams,
    start,
    settings: RelaxSettings | None = None,
    callback: IterationCallback | None = None,
) -> IonConfiguration:
    """Relax a start to a local minimum, preserving ion order.

    callback, when given, receives (positions, energy) after every accepted
    step. A result that misses the tolerance or sits on a saddle is returned
    with converged=False.
    """
    settings = settings or RelaxSettings()
    if not params.is_confined:
        raise DomainError("periodic chains need omega_tr > 0 to have an equilibrium")
    x = check_positions(params, start).copy()

    used = 0
    lowest = math.inf
    for attempt in range(_MAX_SADDLE_ESCAPES + 1):
        x, n = _trust_region(params, x, settings.max_iterations - used, callback)
        used += n
        x, n = _newton_polish(
            params, x, settings.grad_tolerance, max(settings.max_iterations - used, 0), callback
        )
        used += n
        lowest, mode = _softest_mode(params, x)
        if lowest >= -NEGATIVE_CURVATURE_TOLERANCE or used >= settings.max_iterations:
            break
        logger.debug("escaping saddle (lowest eigenvalue %.3g, attempt %d)", lowest, attempt)
        x = _escape_saddle(params, x, mode)

    g_norm = float(np.max(np.abs(gradient(params, x))))
    converged = g_norm <= settings.grad_tolerance and lowest >= -NEGATIVE_CURVATURE_TOLERANCE
    config = IonConfiguration(
        positions=x,
        energy=energy(params, x),
        grad_inf_norm=g_norm,
        converged=converged,
        n_iterations=used,
    )
    if converged:
        logger.debug("relaxed N=%d in %d iterations, E=%.12g", params.n_ions, used, config.energy)
    else:
        logger.warning(
            "relaxation did not converge: N=%d K=%.6g |g|=%.3g lowest=%.3g after %d iterations",
            params.n_ions,
            params.lattice_amplitude,
            g_norm,
            lowest,
            used,
        )
    return config


def is_distinct(a: IonConfiguration, b: IonConfiguration) -> bool:
    """Whether two minima differ by more than DISTINCT_TOLERANCE at some ion."""
    xa, xb = np.sort(a.positions), np.sort(b.positions)
    if xa.shape != xb.shape:
        return True
    return bool(np.max(np.abs(xa - xb)) > DISTINCT_TOLERANCE)


def mirror(config: IonConfiguration) -> IonConfiguration:
    """Parity image x -> -x with the ion labels reversed."""
    return IonConfiguration(
        positions=-config.positions[::-1].copy(),
        energy=config.energy,
        grad_inf_norm=config.grad_inf_norm,
        converged=config.converged,
        n_iterations=config.n_iterations,
    )


def build_catalog(results: list[IonConfiguration]) -> MinimaCatalog:
    ordered = sorted(
        (r for r in results if r.converged),
        key=lambda r: (r.energy, tuple(r.positions)),
    )
    kept: list[IonConfiguration] = []
    for candidate in ordered:
        if all(is_distinct(candidate, other) for other in kept):
            kept.append(candidate)
    return MinimaCatalog(configurations=kept)


def multistart_positions(
    params: ChainParams, settings: RelaxSettings, density: float
) -> list[np.ndarray]:
    base = initial_guess(params, density)
    streams = np.random.SeedSequence(settings.seed).spawn(settings.n_starts - 1)
    return [base] + [
        perturbed_start(base, np.random.default_rng(s), settings.perturbation_scale)
        for s in streams
    ]


def ground_state(
    params: ChainParams, settings: RelaxSettings, density: float
) -> tuple[IonConfiguration, MinimaCatalog]:
    """Lowest converged minimum over n_starts seeded starts, plus all distinct minima."""
    starts = multistart_positions(params, settings, density)
    results = [relax(params, start, settings) for start in starts]
    catalog = build_catalog(results)
    if catalog.n_distinct == 0:
        raise ConvergenceError(
            f"no start converged (N={params.n_ions}, K={params.lattice_amplitude:.6g}, "
            f"omega_tr={params.omega_tr:.6g})"
        )
    return catalog.ground, catalog


def central_density(config: IonConfiguration) -> float:
    """Ions per lattice period over the central third of the chain."""
    if config.n_ions < 3:
        raise DomainError("central density needs at least three ions")
    subset = config.positions[central_window(config.n_ions)]
    return 2.0 * math.pi * (subset.size - 1) / float(subset[-1] - subset[0])


def rotation_number(config: IonConfiguration, whole_chain: bool = False) -> float:
    """2π over the least-squares slope of x_i against i.

    Uses the central third unless whole_chain is set or the chain is too short.
    """
    if config.n_ions < 2:
        raise DomainError("rotation number needs at least two ions")
    index = np.arange(config.n_ions)
    if not whole_chain and config.n_ions >= 3:
        window = central_window(config.n_ions)
        index = index[window]
    slope, _ = np.polyfit(index, config.positions[index], 1)
    if not (math.isfinite(slope) and slope > 0):
        raise DomainError(f"degenerate position fit (slope {slope!r})")
    return 2.0 * math.pi / float(slope)


@dataclass(frozen=True)
class TrapCalibration:
    omega_tr: float
    central_density: float
    configuration: IonConfiguration
    n_relaxations: int

    def to_dict(self) -> dict[str, float | int]:
        return {
            "N": self.configuration.n_ions,
            "omega_tr": self.omega_tr,
            "central_density": self.central_density,
            "n_relaxations": self.n_relaxations,
        }


def estimate_trap_frequency(n_ions: int, density: float) -> float:
    """Trapped Coulomb chain estimate ω² ≈ 3N ln N / L³ with L = 3πN/(2ν)."""
    half_length = 3.0 * math.pi * n_ions / (2.0 * density)
    return math.sqrt(3.0 * n_ions * max(math.log(n_ions), 1.0) / half_length**3)


def calibrate_trap(
    n_ions: int,
    density: float,
    lattice_amplitude: float,
    density_tolerance: float = 0.005,
    settings: RelaxSettings | None = None,
    bracket: tuple[float, float] = (1e-6, 1.0),
    max_relaxations: int = 80,
) -> TrapCalibration:
    """Bisect ω_tr (in log space) until the central density matches ν.

    Each trial warm-starts from the previous relaxed chain rescaled by the
    ω_tr^(-2/3) length law.
    """
    if not density > 0:
        raise DomainError("density must be positive")
    if not density_tolerance > 0:
        raise DomainError("density_tolerance must be positive")
    if n_ions < 3:
        raise DomainError("calibration needs at least three ions")
    settings = settings or RelaxSettings()
    lo_bound, hi_bound = bracket

    relaxations = 0
    last: tuple[float, IonConfiguration] | None = None

    def measure(omega: float) -> tuple[float, IonConfiguration]:
        nonlocal relaxations, last
        params = ChainParams(n_ions, omega, lattice_amplitude)
        if last is None:
            start = initial_guess(params, density)
        else:
            start = last[1].positions * (last[0] / omega) ** (2.0 / 3.0)
        config = relax(params, start, settings)
        relaxations += 1
        last = (omega, config)
        nu = central_density(config)
        logger.debug("calibration trial omega_tr=%.6g -> nu=%.6g", omega, nu)
        return nu, config

    def matches(nu: float) -> bool:
        return abs(nu - density) <= density_tolerance * density

    omega = min(max(estimate_trap_frequency(n_ions, density), lo_bound), hi_bound)
    nu, config = measure(omega)
    if matches(nu):
        return TrapCalibration(omega, nu, config, relaxations)

    # density grows with ω_tr: walk outward until the target is bracketed
    lo = hi = omega
    growing = nu < density
    while True:
        edge = hi if growing else lo
        candidate = min(max(edge * 1.5 if growing else edge / 1.5, lo_bound), hi_bound)
        if candidate == edge or relaxations >= max_relaxations:
            raise ConvergenceError(
                f"no omega_tr in [{lo_bound:g}, {hi_bound:g}] gives density {density:g}"
            )
        nu, config = measure(candidate)
        if matches(nu):
            return TrapCalibration(candidate, nu, config, relaxations)
        if growing:
            lo, hi = hi, candidate
            if nu > density:
                break
        else:
            hi, lo = lo, candidate
            if nu < density:
                break

    while relaxations < max_relaxations:
        omega = math.sqrt(lo * hi)
        nu, config = measure(omega)
        if matches(nu):
            return TrapCalibration(omega, nu, config, relaxations)
        if nu < density:
            lo = omega
        else:
            hi = omega
    raise ConvergenceError(
        f"calibration did not reach density {density:g} in {relaxations} relaxations"
    )
