"""Dataset ingestion, time discretisation and configuration files.

Dataset files are delimited text with a header row. The time and status
columns are required; every other column (or the configured subset) is a
numeric covariate. Status ``0`` is a censoring and ``1..k`` an event type.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import CensoredSample
from .process import TimeGrid

__all__ = [
    "DataFormatError",
    "IngestConfig",
    "make_grid",
    "discretize",
    "read_table",
    "ingest",
    "export_sample",
    "load_config",
    "load_melanoma",
    "write_melanoma_csv",
]


class DataFormatError(ValueError):
    """A dataset file does not follow the expected schema."""


@dataclass
class IngestConfig:
    """How to read and bin a dataset file.

    Parameters
    ----------
    time_column, status_column : str
    covariates : list of str or None
        Covariate columns, in order. None uses every remaining column.
    k : int or None
        Number of event types; inferred from the largest status when None.
    bin_width : float
        Width of uniform bins starting at zero. Ignored when ``bin_edges``
        is given.
    bin_edges : list of float or None
        Explicit edges ``tau_0 = 0 < tau_1 < ... < tau_T``.
    horizon : int or None
        Number of uniform bins. By default just enough to hold every time.
        Times beyond the last edge are censored there.
    delimiter : str
    """

    time_column: str = "time"
    status_column: str = "status"
    covariates: list | None = None
    k: int | None = None
    bin_width: float = 1.0
    bin_edges: list | None = None
    horizon: int | None = None
    delimiter: str = ","

    @classmethod
    def from_dict(cls, d: dict | None) -> IngestConfig:
        d = dict(d or {})
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown data settings: {sorted(unknown)}")
        return cls(**d)


def make_grid(times, bin_width: float = 1.0, bin_edges=None, horizon: int | None = None) -> TimeGrid:
    """Time grid covering ``times`` with uniform bins, or explicit edges."""
    if bin_edges is not None:
        edges = np.asarray(bin_edges, dtype=float)
        return TimeGrid(len(edges) - 1, edges)
    if not bin_width > 0:
        raise ValueError(f"bin width must be positive, got {bin_width}")
    if horizon is None:
        tmax = float(np.max(times)) if len(times) else bin_width
        horizon = max(1, math.ceil(tmax / bin_width - 1e-12))
    return TimeGrid.uniform(int(horizon), bin_width)


def discretize(times, status, grid: TimeGrid):
    """Map raw times to bins ``(tau_{t-1}, tau_t]``.

    Observations past the last edge are censored in the last bin.
    """
    times = np.asarray(times, dtype=float)
    status = np.asarray(status, dtype=np.int64).copy()
    if np.any(times <= 0):
        raise DataFormatError("times must be positive")
    beyond = times > grid.edges[-1]
    bins = np.where(beyond, grid.horizon, grid.bin_of(np.minimum(times, grid.edges[-1])))
    status[beyond] = 0
    return bins.astype(np.int64), status


def read_table(path, delimiter: str = ","):
    """Header and rows of a delimited file; rows are lists of strings."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        rows = [r for r in reader if any(cell.strip() for cell in r)]
    return header, rows


def _parse_rows(header, rows, cfg: IngestConfig):
    for col in (cfg.time_column, cfg.status_column):
        if col not in header:
            raise DataFormatError(f"missing required column {col!r}")
    covs = cfg.covariates
    if covs is None:
        covs = [h for h in header if h not in (cfg.time_column, cfg.status_column)]
    missing = [c for c in covs if c not in header]
    if missing:
        raise DataFormatError(f"covariate columns not in file: {missing}")
    it, istat = header.index(cfg.time_column), header.index(cfg.status_column)
    icov = [header.index(c) for c in covs]
    n = len(rows)
    times, status, X = np.empty(n), np.empty(n, dtype=np.int64), np.empty((n, len(covs)))
    for i, row in enumerate(rows):
        line = i + 2  # 1-based, after the header
        if len(row) != len(header):
            raise DataFormatError(f"row {line}: expected {len(header)} fields, found {len(row)}")
        if any(cell.strip() == "" for cell in row):
            raise DataFormatError(f"row {line}: missing value")
        try:
            times[i] = float(row[it])
        except ValueError:
            raise DataFormatError(f"row {line}: time {row[it]!r} is not a number") from None
        if not (np.isfinite(times[i]) and times[i] > 0):
            raise DataFormatError(f"row {line}: time must be positive, got {row[it]!r}")
        try:
            s = float(row[istat])
        except ValueError:
            s = math.nan
        if not (s.is_integer() and s >= 0 and (cfg.k is None or s <= cfg.k)):
            upper = "k" if cfg.k is None else str(cfg.k)
            raise DataFormatError(f"row {line}: status {row[istat]!r} outside 0..{upper}")
        status[i] = int(s)
        for j, col in enumerate(icov):
            try:
                X[i, j] = float(row[col])
            except ValueError:
                raise DataFormatError(
                    f"row {line}: covariate {header[col]!r} value {row[col]!r} is not numeric"
                ) from None
    return times, status, X, covs


def ingest(path, config: IngestConfig | dict | None = None) -> tuple[CensoredSample, TimeGrid]:
    """Read a dataset file and bin it.

    Returns the binned sample (with an intercept column prepended to the
    covariates) and its grid.
    """
    cfg = config if isinstance(config, IngestConfig) else IngestConfig.from_dict(config)
    header, rows = read_table(path, cfg.delimiter)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    times, status, covs_X, covs = _parse_rows(header, rows, cfg)
    k = cfg.k if cfg.k is not None else max(1, int(status.max()))
    grid = make_grid(times, cfg.bin_width, cfg.bin_edges, cfg.horizon)
    bins, status = discretize(times, status, grid)
    X = np.column_stack([np.ones(len(bins)), covs_X])
    sample = CensoredSample(bins, status, grid, k, X, ("intercept", *covs))
    return sample, grid


def export_sample(sample: CensoredSample, path, delimiter: str = ",") -> None:
    """Write a binned sample so that :func:`ingest` on the same grid restores it.

    Each time is written as the right edge of its bin.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(["time", "status", *sample.covariate_names[1:]])
        edges = sample.grid.edges
        for t, d, x in zip(sample.times, sample.causes, sample.X):
            writer.writerow([repr(float(edges[t])), int(d), *(repr(float(v)) for v in x[1:])])


def load_config(path) -> dict:
    """Parse a JSON or YAML configuration file into a dict."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml

        out = yaml.safe_load(text)
    else:
        out = json.loads(text)
    if out is None:
        return {}
    if not isinstance(out, dict):
        raise ValueError(f"{path}: configuration must be a mapping")
    return out


def load_melanoma():
    """The 205-patient malignant melanoma data (MASS coding), recoded.

    Returns
    -------
    time : ndarray of float
        Days from surgery.
    status : ndarray of int
        ``1`` melanoma death, ``2`` death from other causes, ``0`` censored.
    sex : ndarray of int
        ``1`` male, ``0`` female.

    Notes
    -----
    Needs the optional ``pydataset`` package. The source codes status as
    ``1`` melanoma death, ``2`` alive and ``3`` other death.
    """
    try:
        from pydataset import data
    except ImportError as exc:  # pragma: no cover - optional dependency
        raise ImportError("load_melanoma needs the optional 'pydataset' package") from exc
    df = data("Melanoma")
    raw = df["status"].to_numpy().astype(np.int64)
    status = np.select([raw == 1, raw == 3, raw == 2], [1, 2, 0], default=-1)
    if np.any(status < 0):
        raise DataFormatError("unexpected status code in the melanoma source")
    return df["time"].to_numpy().astype(float), status, df["sex"].to_numpy().astype(np.int64)


def write_melanoma_csv(path) -> None:
    """Write the recoded melanoma data as ``time,status,sex``."""
    time, status, sex = load_melanoma()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time", "status", "sex"])
        for row in zip(time, status, sex):
            writer.writerow([repr(float(row[0])), int(row[1]), int(row[2])])
