"""Deterministic SVG line plots for spectra and gap curves."""

from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from src.errors import DomainError  # noqa: E402

_RC = {
    "svg.hashsalt": "ionchain",
    "svg.fonttype": "none",
    "path.simplify": False,
}


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]


def write_svg_plot(
    series: Sequence[Series],
    x_label: str,
    y_label: str,
    path: Path,
    log_x: bool = False,
    log_y: bool = False,
    title: str | None = None,
) -> Path:
    """One line per series, each in an SVG group with id series-<index>."""
    if not series:
        raise DomainError("nothing to plot")
    for s in series:
        if len(s.x) == 0 or len(s.x) != len(s.y):
            raise DomainError(f"series {s.label!r} is empty or has mismatched lengths")

    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        try:
            for i, s in enumerate(series):
                (line,) = ax.plot(np.asarray(s.x), np.asarray(s.y), marker=".", label=s.label)
                line.set_gid(f"series-{i}")
            if log_x:
                ax.set_xscale("log")
            if log_y:
                ax.set_yscale("log")
            ax.set_xlabel(x_label)
            ax.set_ylabel(y_label)
            if title:
                ax.set_title(title)
            ax.legend()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return path
