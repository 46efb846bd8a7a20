"""Command-line surface: one subcommand per study, each writing files and a manifest."""

import argparse
import json
import logging
import sys
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import ValidationError

from src import __version__
from src.chain.ground_state import RelaxSettings, calibrate_trap, ground_state
from src.chain.model import ChainParams
from src.errors import IonChainError
from src.experiments.disorder import DEFAULT_N_LIST as DISORDER_N_LIST
from src.experiments.disorder import disorder_localization
from src.experiments.minima import minima_frame, minima_statistics
from src.experiments.sweeps import (
    DEFAULT_N_LIST,
    EXTENDED_N_LIST,
    SweepRecord,
    default_k_grid,
    records_frame,
    sweep_gap_vs_k,
)
from src.experiments.transition import (
    KcMethod,
    estimate_kc,
    kc_scaling_scan,
    transition_frame,
    trap_softening,
)
from src.maps import (
    KC_GOLDEN,
    IonMapState,
    ion_map_orbit,
    k_eff,
    standard_map_orbit,
)
from src.output import render_table, write_configuration, write_table
from src.phonons import localization_frame, spectrum
from src.plotting import Series, write_svg_plot
from src.run_config import RunConfig, RunManifest, resolve_run_config
from src.units import (
    PhysicalInputs,
    critical_density_for_depth,
    derive_scales,
    gap_to_physical,
    pinning_depth_kelvin,
)

logger = logging.getLogger(__name__)

MINIMA_N_LIST = (25, 50)
MINIMA_DEFAULT_STARTS = 100
SOFTENING_N_LIST = (50, 150, 300)


@dataclass
class RunContext:
    """Output directory, resolved config and manifest bookkeeping for one run."""

    command: str
    config: RunConfig
    stages: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    seeds: list[int] = field(default_factory=list)

    @property
    def out_dir(self) -> Path:
        return self.config.output_path(self.command)

    def resolve(self, **updates: Any) -> None:
        """Record values a command filled in so a replay does not recompute them."""
        self.config = self.config.model_copy(update=updates)

    def relax_settings(self) -> RelaxSettings:
        return self.config.relax_settings()

    def table(self, frame: pd.DataFrame, name: str, echo: bool = False) -> Path:
        path = write_table(frame, self.out_dir / name, self.config.output_format)
        self.outputs.append(path.name)
        if echo:
            sys.stdout.write(render_table(frame, self.config.output_format))
        return path

    def json_file(self, data: dict[str, Any], name: str, echo: bool = False) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        text = json.dumps(data, indent=2, sort_keys=True) + "\n"
        path.write_text(text, encoding="utf-8")
        self.outputs.append(path.name)
        if echo:
            sys.stdout.write(text)
        return path

    def plot(self, series: list[Series], name: str, x_label: str, y_label: str, **kw) -> None:
        if not self.config.plot:
            return
        path = write_svg_plot(series, x_label, y_label, self.out_dir / name, **kw)
        self.outputs.append(path.name)

    def manifest(self, wall_time: float) -> RunManifest:
        return RunManifest(
            command=self.command,
            config=self.config.model_dump(mode="json"),
            tool_version=__version__,
            seeds=self.seeds or [self.config.seed],
            wall_time_s=round(wall_time, 3),
            stages=self.stages,
            outputs=self.outputs,
        )


def _trap_frequency(ctx: RunContext, n_ions: int) -> float:
    cfg = ctx.config
    if cfg.omega_tr is not None:
        return cfg.omega_tr
    calibration = calibrate_trap(
        n_ions, cfg.density, cfg.lattice_amplitude, cfg.density_tolerance, ctx.relax_settings()
    )
    ctx.stages["calibrate"] = f"omega_tr={calibration.omega_tr:.12g}"
    ctx.resolve(omega_tr=calibration.omega_tr)
    return calibration.omega_tr


def cmd_units(ctx: RunContext) -> None:
    cfg = ctx.config
    scales = derive_scales(PhysicalInputs.from_amu(cfg.period, cfg.mass_amu, cfg.charge_e))
    data = scales.to_dict()
    data["pinning_depth_K"] = pinning_depth_kelvin(scales, KC_GOLDEN)
    if cfg.depth_kelvin is not None:
        data["nu_max_pinned"] = critical_density_for_depth(scales, cfg.depth_kelvin)
    if cfg.omega0 is not None:
        phonon = gap_to_physical(scales, cfg.omega0)
        data["omega0_rad_s"] = phonon.angular_frequency
        data["omega0_Hz"] = phonon.frequency_hz
        data["omega0_K"] = phonon.temperature_kelvin
    ctx.json_file(data, "units.json", echo=True)


def cmd_ground_state(ctx: RunContext) -> None:
    cfg = ctx.config
    params = ChainParams(cfg.n_ions, _trap_frequency(ctx, cfg.n_ions), cfg.lattice_amplitude)
    best, catalog = ground_state(params, ctx.relax_settings(), cfg.density)
    ctx.stages["ground_state"] = f"{catalog.n_distinct} distinct minima"
    path = write_configuration(best, ctx.out_dir / "configuration.csv")
    ctx.outputs.append(path.name)
    sys.stdout.write(path.read_text(encoding="utf-8"))
    minima = pd.DataFrame(
        {
            "rank": range(catalog.n_distinct),
            "energy": [c.energy for c in catalog.configurations],
            "dE": catalog.energy_gaps,
            "grad_inf_norm": [c.grad_inf_norm for c in catalog.configurations],
        }
    )
    ctx.table(minima, "minima")


def cmd_calibrate_trap(ctx: RunContext) -> None:
    cfg = ctx.config
    calibration = calibrate_trap(
        cfg.n_ions,
        cfg.density,
        cfg.lattice_amplitude,
        cfg.density_tolerance,
        ctx.relax_settings(),
    )
    row = {"nu": cfg.density, "K": cfg.lattice_amplitude, **calibration.to_dict()}
    ctx.table(pd.DataFrame([row]), "calibration", echo=True)


def cmd_phonons(ctx: RunContext) -> None:
    cfg = ctx.config
    params = ChainParams(cfg.n_ions, _trap_frequency(ctx, cfg.n_ions), cfg.lattice_amplitude)
    best, _ = ground_state(params, ctx.relax_settings(), cfg.density)
    spec = spectrum(params, best)
    ctx.table(localization_frame(spec), "phonons", echo=True)
    ctx.plot(
        [Series(f"N={cfg.n_ions}, K={cfg.lattice_amplitude:g}", spec.k_scaled, spec.frequencies)],
        "spectrum.svg",
        "k = i/N",
        "omega",
    )


def cmd_map_orbit(ctx: RunContext) -> None:
    cfg = ctx.config
    if cfg.map == "standard":
        strength = cfg.k_eff
        if strength is None:
            strength = k_eff(cfg.lattice_amplitude, cfg.density)
        ctx.resolve(k_eff=strength)
        orbit = standard_map_orbit(cfg.x0, cfg.y0, strength, cfg.steps)
        second = "y"
    else:
        omega_tr = cfg.omega_tr if cfg.omega_tr is not None else 0.0
        start = IonMapState(cfg.x0, cfg.y0)
        orbit = ion_map_orbit(start, cfg.lattice_amplitude, omega_tr, cfg.steps)
        second = "p"
    frame = pd.DataFrame({"step": range(orbit.n_steps + 1), "x": orbit.x, second: orbit.y})
    ctx.table(frame, "orbit", echo=True)
    ctx.plot([Series(f"{cfg.map} map", orbit.x, orbit.y)], "orbit.svg", "x", second)


def _sweep(ctx: RunContext) -> list[SweepRecord]:
    cfg = ctx.config
    n_list = list(cfg.n_list or (EXTENDED_N_LIST if cfg.extended else DEFAULT_N_LIST))
    k_grid = list(cfg.k_grid) if cfg.k_grid is not None else default_k_grid().tolist()
    ctx.resolve(n_list=n_list, k_grid=k_grid)
    omega_by_n = {n_list[0]: cfg.omega_tr} if cfg.omega_tr is not None and len(n_list) == 1 else {}
    records = sweep_gap_vs_k(
        k_grid,
        n_list,
        cfg.density,
        ctx.relax_settings(),
        omega_by_n=omega_by_n,
        density_tolerance=cfg.density_tolerance,
        threads=cfg.threads,
    )
    for n in n_list:
        failed = sum(1 for r in records if r.n_ions == n and not r.converged)
        ctx.stages[f"sweep N={n}"] = "ok" if not failed else f"{failed} failed points"
    ctx.table(records_frame(records), "sweep")
    ctx.plot(
        [
            Series(
                f"N={n}",
                [r.k for r in records if r.n_ions == n and r.converged],
                [r.omega0 for r in records if r.n_ions == n and r.converged],
            )
            for n in n_list
            if any(r.n_ions == n and r.converged for r in records)
        ],
        "gap_vs_k.svg",
        "K",
        "omega_0",
        log_x=True,
        log_y=True,
    )
    return records


def cmd_sweep_k(ctx: RunContext) -> None:
    _sweep(ctx)


def cmd_find_kc(ctx: RunContext) -> None:
    records = _sweep(ctx)
    estimates = []
    if len({r.n_ions for r in records}) >= 2:
        estimates.append(estimate_kc(records, KcMethod.N_COLLAPSE))
    estimates.append(estimate_kc(records, KcMethod.GAP_THRESHOLD))
    for e in estimates:
        ctx.stages[f"estimate {e.method.value}"] = e.status.value
    ctx.table(transition_frame(estimates), "transition", echo=True)


def cmd_kc_scaling(ctx: RunContext) -> None:
    cfg = ctx.config
    result = kc_scaling_scan(
        cfg.nu_list,
        cfg.n_ions,
        ctx.relax_settings(),
        k_grid=cfg.k_grid,
        density_tolerance=cfg.density_tolerance,
        threads=cfg.threads,
    )
    ctx.table(result.to_frame(), "kc_scaling")
    ctx.json_file(
        {"exponent": result.fit.exponent, "prefactor": result.fit.prefactor},
        "kc_fit.json",
        echo=True,
    )
    ctx.plot(
        [Series(f"N={cfg.n_ions}", result.densities, result.k_c)],
        "kc_scaling.svg",
        "nu",
        "K_c",
        log_x=True,
        log_y=True,
    )


def cmd_minima(ctx: RunContext) -> None:
    cfg = ctx.config
    if "n_starts" not in cfg.model_fields_set:
        ctx.resolve(n_starts=MINIMA_DEFAULT_STARTS)
    n_list = list(cfg.n_list or MINIMA_N_LIST)
    ctx.resolve(n_list=n_list)
    cfg = ctx.config
    omega_by_n = {n: cfg.omega_tr for n in n_list} if cfg.omega_tr is not None else None
    rows = minima_statistics(
        cfg.k_list,
        n_list,
        ctx.relax_settings(),
        cfg.density,
        omega_by_n=omega_by_n,
        density_tolerance=cfg.density_tolerance,
        threads=cfg.threads,
    )
    ctx.table(minima_frame(rows), "minima")


def cmd_disorder(ctx: RunContext) -> None:
    cfg = ctx.config
    n_list = list(cfg.n_list or DISORDER_N_LIST)
    ctx.resolve(n_list=n_list)
    disorder = cfg.disorder_params()
    ctx.seeds = [disorder.seed + s for s in range(cfg.n_seeds)]
    study = disorder_localization(
        n_list, disorder, cfg.n_seeds, ctx.relax_settings(), threads=cfg.threads
    )
    ctx.table(study.to_frame(), "disorder")
    ctx.plot(
        [
            Series("median participation ratio", n_list, [s.pr_median for s in study.summaries]),
            Series("mean lowest frequency", n_list, [s.min_omega_mean for s in study.summaries]),
        ],
        "disorder.svg",
        "N",
        "value",
        log_y=True,
    )


def cmd_trap_softening(ctx: RunContext) -> None:
    cfg = ctx.config
    n_list = list(cfg.n_list or SOFTENING_N_LIST)
    ctx.resolve(n_list=n_list)
    result = trap_softening(
        n_list,
        cfg.density,
        cfg.lattice_amplitude,
        ctx.relax_settings(),
        density_tolerance=cfg.density_tolerance,
        threads=cfg.threads,
    )
    ctx.table(result.to_frame(), "trap_softening")
    ctx.json_file(
        {"exponent": result.fit.exponent, "prefactor": result.fit.prefactor},
        "softening_fit.json",
        echo=True,
    )


COMMANDS: dict[str, tuple[Callable[[RunContext], None], str]] = {
    "units": (cmd_units, "convert the dimensionless units to SI for an ion species"),
    "ground-state": (cmd_ground_state, "multi-start ground state and minima catalog"),
    "calibrate-trap": (cmd_calibrate_trap, "trap frequency giving the target central density"),
    "phonons": (cmd_phonons, "phonon spectrum and mode localization of the ground state"),
    "map-orbit": (cmd_map_orbit, "iterate the standard map or the ion map"),
    "sweep-k": (cmd_sweep_k, "lowest phonon frequency against lattice amplitude"),
    "find-kc": (cmd_find_kc, "sweep and locate the pinning transition"),
    "kc-scaling": (cmd_kc_scaling, "critical amplitude against density"),
    "minima": (cmd_minima, "count quasi-degenerate metastable configurations"),
    "disorder": (cmd_disorder, "mode localization in random microtrap chains"),
    "trap-softening": (cmd_trap_softening, "calibrated trap frequency against chain size"),
}


def _shared_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("run")
    g.add_argument("--config", dest="config_file", type=Path, help="flat JSON config file")
    g.add_argument("--output-dir", dest="output_dir", type=Path)
    g.add_argument("--format", dest="output_format", choices=["csv", "json"])
    g.add_argument("--plot", action="store_true", help="also write SVG plots")
    g.add_argument("--threads", type=int, help="worker processes (env IONCHAIN_THREADS)")
    g.add_argument("--seed", type=int)
    g.add_argument("-v", "--verbose", action="store_true")

    g = p.add_argument_group("chain")
    g.add_argument("--n", dest="n_ions", type=int)
    g.add_argument("--omega-tr", dest="omega_tr", type=float)
    g.add_argument("--k", dest="lattice_amplitude", type=float)
    g.add_argument("--nu", dest="density", type=float)
    g.add_argument("--density-tolerance", dest="density_tolerance", type=float)
    g.add_argument("--mean-spacing", dest="mean_spacing", type=float)
    g.add_argument("--halfwidth", dest="relative_halfwidth", type=float)
    g.add_argument("--stiffness", dest="trap_stiffness", type=float)

    g = p.add_argument_group("relaxation")
    g.add_argument("--tolerance", dest="grad_tolerance", type=float)
    g.add_argument("--max-iterations", dest="max_iterations", type=int)
    g.add_argument("--n-starts", dest="n_starts", type=int)
    g.add_argument("--perturbation", dest="perturbation_scale", type=float)

    g = p.add_argument_group("grids")
    g.add_argument("--k-grid", dest="k_grid", type=float, nargs="+")
    g.add_argument("--n-list", dest="n_list", type=int, nargs="+")
    g.add_argument("--nu-list", dest="nu_list", type=float, nargs="+")
    g.add_argument("--k-list", dest="k_list", type=float, nargs="+")
    g.add_argument("--n-seeds", dest="n_seeds", type=int)
    g.add_argument("--extended", action="store_true", help="add N=300 to sweeps")

    g = p.add_argument_group("units")
    g.add_argument("--period", type=float, help="lattice period in metres")
    g.add_argument("--mass-amu", dest="mass_amu", type=float)
    g.add_argument("--charge-e", dest="charge_e", type=float)
    g.add_argument("--depth-kelvin", dest="depth_kelvin", type=float)
    g.add_argument("--omega0", type=float)

    g = p.add_argument_group("maps")
    g.add_argument("--map", choices=["standard", "ion"])
    g.add_argument("--x0", type=float)
    g.add_argument("--y0", type=float, help="y for the standard map, p for the ion map")
    g.add_argument("--k-eff", dest="k_eff", type=float)
    g.add_argument("--steps", type=int)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionchain", description="Ion chains in periodic potentials"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    shared = _shared_flags()
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[shared], help=help_text)
    replay = sub.add_parser("replay", help="re-run a recorded manifest")
    replay.add_argument("manifest", type=Path)
    replay.add_argument("--output-dir", dest="output_dir", type=Path)
    replay.add_argument("-v", "--verbose", action="store_true")
    return parser


def execute(command: str, config: RunConfig) -> RunManifest:
    """Run one command and write its manifest, also when the command fails."""
    handler, _ = COMMANDS[command]
    ctx = RunContext(command, config)
    started = time.perf_counter()
    try:
        handler(ctx)
        ctx.stages.setdefault(command, "ok")
    except (IonChainError, OSError) as exc:
        ctx.stages[command] = f"failed: {exc}"
        raise
    finally:
        manifest = ctx.manifest(time.perf_counter() - started)
        try:
            manifest.save(ctx.out_dir)
        except OSError:
            logger.exception("could not write manifest to %s", ctx.out_dir)
    logger.info("%s finished in %.1f s, outputs in %s", command, manifest.wall_time_s, ctx.out_dir)
    return manifest


_NOT_CONFIG = {"command", "config_file", "verbose", "manifest"}


def _resolve(args: argparse.Namespace) -> tuple[str, RunConfig]:
    if args.command == "replay":
        manifest = RunManifest.load(args.manifest)
        if manifest.command not in COMMANDS:
            raise ValueError(f"manifest names unknown command {manifest.command!r}")
        config = manifest.run_config()
        if getattr(args, "output_dir", None) is not None:
            config = config.model_copy(update={"output_dir": args.output_dir})
        return manifest.command, config
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    return args.command, resolve_run_config(getattr(args, "config_file", None), overrides)


def parse_and_dispatch(argv: list[str] | None = None) -> int:
    """Run the CLI; 0 on success, 1 on domain or I/O failure, 2 on usage errors."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else (0 if exc.code is None else 2)

    if getattr(args, "verbose", False):
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        command, config = _resolve(args)
    except ValidationError as exc:
        logger.error("invalid configuration:\n%s", exc)
        return 2
    except (OSError, ValueError) as exc:
        logger.error("could not read configuration: %s", exc)
        return 2

    try:
        execute(command, config)
    except (IonChainError, OSError) as exc:
        logger.error("%s failed: %s", command, exc)
        return 1
    return 0
