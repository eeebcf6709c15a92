"""Delimited-text export and import of probability grids.

Grid CSV layout: header row ``l\\m,0,1,...,n-1``, then one row per l with
probabilities printed at 17 significant digits, which round-trips float64
exactly. Each grid file is accompanied by a JSON metadata sidecar
(same path with .meta.json) recording how the grid was produced.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

import numpy as np

# entries in (-CLAMP, 0) are inversion roundoff; written as exact zero
_NEGATIVE_CLAMP = 1e-6
_FMT = "%.17g"


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".meta.json")


def write_grid(csv_path, values: np.ndarray, meta: Optional[dict] = None) -> Path:
    """Write a 2-d probability grid and its metadata sidecar.

    Tiny negative entries (inversion roundoff above -1e-6) are clamped to
    zero in the file; anything more negative is written as-is.
    """
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError(f"expected a 2-d grid, got shape {values.shape}")
    path = Path(csv_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = np.where((values > -_NEGATIVE_CLAMP) & (values < 0.0), 0.0, values)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["l\\m"] + [str(m) for m in range(values.shape[1])])
        for l in range(values.shape[0]):
            writer.writerow([str(l)] + [_FMT % v for v in out[l]])
    if meta is not None:
        with open(sidecar_path(path), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return path


def read_grid(csv_path) -> tuple[np.ndarray, Optional[dict]]:
    """Read a grid CSV (and its sidecar, when present) back."""
    path = Path(csv_path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "l\\m":
            raise ValueError(f"{path}: not a grid CSV (header {header[:1]!r})")
        width = len(header) - 1
        rows = []
        for row in reader:
            if len(row) != width + 1:
                raise ValueError(f"{path}: ragged row {row[0]!r}")
            rows.append([float(x) for x in row[1:]])
    values = np.asarray(rows)
    meta = None
    side = sidecar_path(path)
    if side.exists():
        with open(side) as fh:
            meta = json.load(fh)
    return values, meta
