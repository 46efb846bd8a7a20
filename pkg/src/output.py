"""Table and configuration files with byte-stable formatting."""

import logging
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd

from src.chain.model import IonConfiguration

logger = logging.getLogger(__name__)

OutputFormat = Literal["csv", "json"]

FLOAT_FORMAT = "%.12g"
CONFIGURATION_COLUMNS = ["index", "position", "spacing_to_next"]


def table_text(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n", na_rep="nan")


def write_table(frame: pd.DataFrame, stem: Path, fmt: OutputFormat = "csv") -> Path:
    """Write a table as <stem>.csv or <stem>.json and return the path."""
    stem.parent.mkdir(parents=True, exist_ok=True)
    path = stem.with_suffix(f".{fmt}")
    path.write_text(render_table(frame, fmt), encoding="utf-8")
    logger.debug("wrote %s (%d rows)", path, len(frame))
    return path


def configuration_frame(config: IonConfiguration) -> pd.DataFrame:
    spacing = np.append(config.spacings, np.nan)
    return pd.DataFrame(
        {
            "index": np.arange(config.n_ions),
            "position": config.positions,
            "spacing_to_next": spacing,
        }
    )


def write_configuration(config: IonConfiguration, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table_text(configuration_frame(config)), encoding="utf-8")
    return path


def read_configuration(path: Path) -> np.ndarray:
    """Positions from a configuration CSV, ordered by the index column."""
    frame = pd.read_csv(path)
    missing = set(CONFIGURATION_COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    return frame.sort_values("index")["position"].to_numpy(dtype=float)


def render_table(frame: pd.DataFrame, fmt: OutputFormat = "csv") -> str:
    if fmt == "csv":
        return table_text(frame)
    return (frame.to_json(orient="records", double_precision=12, indent=2) or "") + "\n"
