"""CSV, summary and SVG writers shared by the CLI commands."""

from __future__ import annotations

import csv
import io
import math
from numbers import Integral, Real
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def fmt(value) -> str:
    """Round-trip exact text for one cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, Integral):
        return str(int(value))
    if isinstance(value, Real):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if isinstance(value, (tuple, list, np.ndarray)):
        return " ".join(fmt(v) for v in value)
    return str(value)


def render_csv(command: str, manifest_json: str, columns: Sequence[str],
               rows: Iterable[Sequence]) -> str:
    buf = io.StringIO(newline="")
    buf.write(f"# harper-z2 {command}\r\n")
    buf.write(f"# config: {manifest_json}\r\n")
    writer = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(columns)
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, schema has {len(columns)}")
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path: Path, command: str, manifest_json: str, columns, rows) -> Path:
    text = render_csv(command, manifest_json, columns, rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def write_summary(path: Path, lines: Sequence[str]) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def figure():
    """A fresh Agg figure with reproducible SVG output."""
    import matplotlib
    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "harper-z2"
    plt.rcParams["svg.fonttype"] = "path"
    return plt.subplots(figsize=(6.0, 4.0))


def save_svg(fig, path: Path) -> Path:
    import matplotlib.pyplot as plt

    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": "harper-z2"})
    plt.close(fig)
    return path
