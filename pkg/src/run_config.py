"""Per-run configuration and the manifest recorded next to every output set."""

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from src import __version__
from src.chain.ground_state import RelaxSettings
from src.chain.model import DisorderParams
from src.config import settings
from src.maps import GOLDEN_MEAN

MANIFEST_NAME = "manifest.json"


class RunConfig(BaseModel):
    """Every tunable of a run. Defaults < JSON config file < command-line flags."""

    model_config = ConfigDict(extra="forbid")

    # Chain
    n_ions: int = Field(50, ge=1)
    omega_tr: float | None = Field(None, gt=0)  # None: calibrate for `density`
    lattice_amplitude: float = Field(0.03, ge=0)
    density: float = Field(GOLDEN_MEAN, gt=0)
    density_tolerance: float = Field(0.005, gt=0)

    # Microtraps
    mean_spacing: float = Field(2.0 * math.pi, gt=0)
    relative_halfwidth: float = Field(0.25, ge=0, lt=1)
    trap_stiffness: float = Field(0.2, gt=0)

    # Relaxation
    grad_tolerance: float = Field(1e-10, gt=0)
    max_iterations: int = Field(200_000, ge=1)
    n_starts: int = Field(8, ge=1)
    perturbation_scale: float = Field(0.3, ge=0)
    seed: int = 0

    # Grids (None: command default)
    k_grid: list[float] | None = None
    n_list: list[int] | None = None
    nu_list: list[float] = Field(default_factory=lambda: [1.0, 1.3, GOLDEN_MEAN, 2.0, 2.6])
    k_list: list[float] = Field(default_factory=lambda: [0.0, 0.2])
    n_seeds: int = Field(10, ge=1)
    extended: bool = False

    # Physical units
    period: float = Field(1e-6, gt=0)
    mass_amu: float = Field(40.0, gt=0)
    charge_e: float = Field(1.0, gt=0)
    depth_kelvin: float | None = Field(None, gt=0)
    omega0: float | None = Field(None, ge=0)

    # Maps
    map: Literal["standard", "ion"] = "standard"
    x0: float = 0.1
    y0: float = 0.05
    k_eff: float | None = Field(None, ge=0)
    steps: int = Field(1000, ge=0)

    # Output
    output_dir: Path | None = None
    output_format: Literal["csv", "json"] = "csv"
    plot: bool = False
    threads: int | None = Field(None, ge=1)

    def relax_settings(self) -> RelaxSettings:
        return RelaxSettings(
            grad_tolerance=self.grad_tolerance,
            max_iterations=self.max_iterations,
            n_starts=self.n_starts,
            perturbation_scale=self.perturbation_scale,
            seed=self.seed,
        )

    def disorder_params(self) -> DisorderParams:
        return DisorderParams(
            mean_spacing=self.mean_spacing,
            relative_halfwidth=self.relative_halfwidth,
            trap_stiffness=self.trap_stiffness,
            seed=self.seed,
        )

    def output_path(self, command: str) -> Path:
        return self.output_dir if self.output_dir is not None else settings.run_dir(command)


def resolve_run_config(config_file: Path | None, overrides: dict[str, Any]) -> RunConfig:
    """Merge model defaults, an optional flat JSON file and explicit flag values."""
    values: dict[str, Any] = {}
    if config_file is not None:
        loaded = json.loads(config_file.read_text(encoding="utf-8"))
        if not isinstance(loaded, dict):
            raise ValueError(f"{config_file}: expected a JSON object")
        values.update(loaded)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.model_validate(values)


@dataclass
class RunManifest:
    """What ran, with which resolved configuration, and how each stage ended."""

    command: str
    config: dict[str, Any]
    tool_version: str = __version__
    seeds: list[int] = field(default_factory=list)
    wall_time_s: float = 0.0
    stages: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunManifest":
        return cls(
            command=data["command"],
            config=dict(data["config"]),
            tool_version=data.get("tool_version", __version__),
            seeds=list(data.get("seeds", [])),
            wall_time_s=float(data.get("wall_time_s", 0.0)),
            stages=dict(data.get("stages", {})),
            outputs=list(data.get("outputs", [])),
        )

    def run_config(self) -> RunConfig:
        return RunConfig.model_validate(self.config)

    def save(self, directory: Path) -> Path:
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / MANIFEST_NAME
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", "utf-8")
        return path

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))
