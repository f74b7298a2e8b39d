"""CSV ingestion and emission for samples of grid functions.

Data file: one row per observation, columns are the function values at the
grid points, no header.  Sidecar file: header ``grid,w`` followed by one row
per grid point giving the abscissa and the *pointwise* weight; combined
quadrature weights are rebuilt with :func:`blockboot.hilbert.trapezoid_weights`
on read.  Scalar series need no sidecar.

All floats are written with ``repr``, which round-trips every finite double
bit-exactly.
"""

from __future__ import annotations

import os

import numpy as np

from .exceptions import EmptyInputError
from .hilbert import HilbertSample, trapezoid_weights


def _fmt_row(row) -> str:
    return ",".join(repr(float(v)) for v in row)


def _parse_rows(text: str, path: str) -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: not a numeric CSV row") from exc
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: rows have inconsistent column counts {sorted(widths)}")
    return np.array(rows, dtype=np.float64)


def write_sample(sample: HilbertSample, data_path: str, sidecar_path: str | None = None,
                 pointwise_w=None) -> None:
    """Write a sample to ``data_path`` and, unless scalar, a sidecar file.

    Parameters
    ----------
    sample : HilbertSample
        The observations to write.
    data_path : str
        Destination of the value rows.
    sidecar_path : str, optional
        Destination of the grid/pointwise-weight file.  Defaults to
        ``data_path + ".grid.csv"`` for non-scalar samples; scalar samples
        (d=1, unit weight) are written without a sidecar unless one is named.
    pointwise_w : array_like, optional
        Pointwise weight values to record in the sidecar; defaults to 1.
    """
    if not np.all(np.isfinite(sample.values)):
        raise ValueError("only finite values can be round-tripped")
    with open(data_path, "w", encoding="ascii") as fh:
        for row in sample.values:
            fh.write(_fmt_row(row) + "\n")
    scalar = sample.d == 1 and sample.weights[0] == 1.0
    if sidecar_path is None:
        if scalar and pointwise_w is None:
            return
        sidecar_path = data_path + ".grid.csv"
    if pointwise_w is None:
        w = np.ones(sample.d)
    else:
        w = np.asarray(pointwise_w, dtype=np.float64)
        if w.shape != (sample.d,):
            raise ValueError("pointwise_w must match the grid length")
    with open(sidecar_path, "w", encoding="ascii") as fh:
        fh.write("grid,w\n")
        for t, wj in zip(sample.grid, w):
            fh.write(f"{repr(float(t))},{repr(float(wj))}\n")


def read_sample(data_path: str, sidecar_path: str | None = None) -> HilbertSample:
    """Read a sample written by :func:`write_sample`.

    Without a sidecar, single-column data is read as a scalar series (grid 0,
    unit weight) and multi-column data gets the integer grid ``0..d-1`` with
    unit pointwise weight.  With a sidecar, combined weights are rebuilt by
    the trapezoid rule from the recorded grid and pointwise weights.
    """
    with open(data_path, "r", encoding="ascii") as fh:
        values = _parse_rows(fh.read(), data_path)
    if sidecar_path is None:
        default = data_path + ".grid.csv"
        sidecar_path = default if os.path.exists(default) else None
    if sidecar_path is None:
        d = values.shape[1]
        if d == 1:
            return HilbertSample.from_scalars(values[:, 0])
        grid = np.arange(d, dtype=np.float64)
        return HilbertSample(grid, trapezoid_weights(grid), values)
    with open(sidecar_path, "r", encoding="ascii") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0].strip().lower() != "grid,w":
        raise ValueError(f"{sidecar_path}: expected header 'grid,w'")
    table = _parse_rows("\n".join(lines[1:]), sidecar_path)
    if table.shape[1] != 2:
        raise ValueError(f"{sidecar_path}: expected two columns (grid, w)")
    grid, w = table[:, 0], table[:, 1]
    if grid.size != values.shape[1]:
        raise ValueError(
            f"{sidecar_path}: grid length {grid.size} does not match "
            f"{values.shape[1]} data columns"
        )
    return HilbertSample(grid, trapezoid_weights(grid, w), values)
