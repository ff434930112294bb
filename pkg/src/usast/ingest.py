"""Long-format light-curve ingestion: parse, regrid, impute.

Observations arrive as one row per (object, time, band) measurement. Each
(object, band) track is binned onto a shared uniform grid (bin mean of values,
root-mean-square of uncertainties) and empty bins are filled by a centered
rolling window (mean and population standard deviation of the known values).
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
import pandas as pd

from .core import LabeledDataset, MultivariateInstance, UncertainSeries, natural_key

log = logging.getLogger(__name__)

DEFAULT_COLUMNS = {
    "object_id": "object_id",
    "time": "mjd",
    "dimension": "passband",
    "value": "flux",
    "uncertainty": "flux_err",
    "target": "target",
}
CANONICAL = ["object_id", "time", "dimension", "value", "uncertainty"]


@dataclass(frozen=True)
class GridSpec:
    start: float
    step: float
    n_points: int
    relative: bool = False

    def __post_init__(self):
        if not (self.step > 0 and math.isfinite(self.step)):
            raise ValueError(f"grid step must be > 0, got {self.step!r}")
        if self.n_points < 1:
            raise ValueError(f"grid needs at least one point, got {self.n_points}")

    def to_dict(self) -> dict:
        return {"start": repr(float(self.start)), "step": repr(float(self.step)),
                "n_points": self.n_points, "relative": self.relative}

    @classmethod
    def from_dict(cls, d) -> "GridSpec":
        return cls(float(d["start"]), float(d["step"]), int(d["n_points"]), bool(d.get("relative", False)))


@dataclass(frozen=True, eq=False)
class RawObservationTable:
    """Canonical columns ``object_id, time, dimension, value, uncertainty``."""

    frame: pd.DataFrame
    n_dropped: int = 0

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def object_ids(self) -> list[str]:
        return sorted(self.frame["object_id"].unique(), key=natural_key)

    @property
    def dimensions(self) -> list[str]:
        return sorted(self.frame["dimension"].unique(), key=natural_key)


def make_table(frame: pd.DataFrame) -> RawObservationTable:
    """Type, clean and sort a frame that already uses the canonical column names.

    Rows with a non-finite value or uncertainty, or a negative uncertainty,
    are dropped and counted. Repeated timestamps within one (object, dimension)
    are merged like a resampling bin.
    """
    df = frame[CANONICAL].copy()
    df["object_id"] = df["object_id"].astype(str)
    df["dimension"] = df["dimension"].astype(str)
    for col in ("time", "value", "uncertainty"):
        df[col] = pd.to_numeric(df[col], errors="coerce").astype(np.float64)
    ok = np.isfinite(df["time"]) & np.isfinite(df["value"]) & np.isfinite(df["uncertainty"])
    ok &= df["uncertainty"] >= 0
    n_dropped = int((~ok).sum())
    if n_dropped:
        log.warning("dropped %d observation(s) with non-finite or negative values", n_dropped)
    df = df[ok]
    if df.duplicated(["object_id", "dimension", "time"]).any():
        df = df.assign(var=df["uncertainty"] ** 2)
        df = (
            df.groupby(["object_id", "dimension", "time"], sort=False)
            .agg(value=("value", "mean"), var=("var", "mean"))
            .reset_index()
        )
        df["uncertainty"] = np.sqrt(df.pop("var"))
        df = df[CANONICAL]
    df = df.sort_values(["object_id", "dimension", "time"], kind="mergesort").reset_index(drop=True)
    return RawObservationTable(df, n_dropped)


def parse_long_csv(
    observations_path: str | os.PathLike,
    metadata_path: str | os.PathLike,
    columns: Mapping[str, str] | None = None,
) -> tuple[RawObservationTable, dict[str, str], dict[str, dict]]:
    """Read observation and metadata CSVs.

    Returns the cleaned table, ``object_id -> label`` and
    ``object_id -> {metadata column: value}`` (every metadata column other
    than the id and target columns).
    """
    cols = dict(DEFAULT_COLUMNS)
    cols.update(columns or {})
    try:
        obs = pd.read_csv(observations_path, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        raise ValueError(f"{observations_path}: no records") from None
    for key in CANONICAL:
        if cols[key] not in obs.columns:
            raise ValueError(f"{observations_path}: missing required column {cols[key]!r}")
    if len(obs) == 0:
        raise ValueError(f"{observations_path}: no records")
    obs = obs.rename(columns={cols[k]: k for k in CANONICAL})
    table = make_table(obs)
    if len(table) == 0:
        raise ValueError(f"{observations_path}: no records left after dropping invalid rows")

    meta = pd.read_csv(metadata_path, dtype={cols["object_id"]: str})
    for key in ("object_id", "target"):
        if cols[key] not in meta.columns:
            raise ValueError(f"{metadata_path}: missing required column {cols[key]!r}")
    meta[cols["object_id"]] = meta[cols["object_id"]].astype(str)
    labels: dict[str, str] = {}
    metadata: dict[str, dict] = {}
    extra = [c for c in meta.columns if c not in (cols["object_id"], cols["target"])]
    for rec in meta.to_dict("records"):
        oid = rec[cols["object_id"]]
        target = rec[cols["target"]]
        if target is None or (isinstance(target, float) and math.isnan(target)):
            continue
        labels[oid] = str(int(target)) if isinstance(target, float) and target.is_integer() else str(target)
        metadata[oid] = {c: rec[c] for c in extra}
    for oid in table.object_ids:
        if oid not in labels:
            raise ValueError(f"object {oid!r} has no label in {metadata_path}")
    return table, labels, metadata


def auto_grid(table: RawObservationTable, relative: bool = False) -> GridSpec:
    """Step = median gap between consecutive observations of a track; covers the full span."""
    df = table.frame
    t = _times(df, relative)
    gaps = t.groupby([df["object_id"], df["dimension"]], sort=False).diff().to_numpy()
    gaps = gaps[np.isfinite(gaps) & (gaps > 0)]
    step = float(np.median(gaps)) if gaps.size else 1.0
    start = float(t.min())
    span = float(t.max()) - start
    return GridSpec(start, step, int(math.ceil(span / step)) + 1, relative)


def _times(df: pd.DataFrame, relative: bool) -> pd.Series:
    if not relative:
        return df["time"]
    return df["time"] - df.groupby("object_id")["time"].transform("min")


def resample_to_grid(
    table: RawObservationTable, grid: GridSpec | None = None, relative: bool = False
) -> tuple[dict[str, dict[str, tuple[np.ndarray, np.ndarray]]], GridSpec]:
    """Bin every (object, dimension) track onto ``grid``.

    Bin ``i`` covers ``[start + i*step, start + (i+1)*step)``. Empty bins are
    NaN. Observations outside the grid are ignored.
    """
    if grid is None:
        grid = auto_grid(table, relative)
    df = table.frame
    t = _times(df, grid.relative).to_numpy()
    b = np.floor((t - grid.start) / grid.step).astype(np.int64)
    inside = (b >= 0) & (b < grid.n_points)
    if not inside.all():
        log.info("%d observation(s) fall outside the grid and are ignored", int((~inside).sum()))
    work = pd.DataFrame({
        "object_id": df["object_id"].to_numpy()[inside],
        "dimension": df["dimension"].to_numpy()[inside],
        "bin": b[inside],
        "value": df["value"].to_numpy()[inside],
        "var": df["uncertainty"].to_numpy()[inside] ** 2,
    })
    agg = work.groupby(["object_id", "dimension", "bin"], sort=True).agg(value=("value", "mean"), var=("var", "mean"))
    dims = table.dimensions
    out: dict[str, dict[str, tuple[np.ndarray, np.ndarray]]] = {}
    for oid in table.object_ids:
        out[oid] = {d: (np.full(grid.n_points, np.nan), np.full(grid.n_points, np.nan)) for d in dims}
    for (oid, dim, bin_), row in zip(agg.index, agg.itertuples(index=False)):
        vals, uncs = out[oid][dim]
        vals[bin_] = row.value
        uncs[bin_] = math.sqrt(row.var)
    return out, grid


def impute_rolling(values, uncertainties, window: int = 5, name: str = "series") -> UncertainSeries:
    """Fill NaN points with the mean and population std of the known values
    inside a centered window (truncated at the edges).

    Each pass only uses values known at the start of the pass; passes repeat
    until nothing is missing, so wide gaps fill from their edges inward.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window}")
    vals = np.array(values, dtype=np.float64)
    uncs = np.array(uncertainties, dtype=np.float64)
    missing = np.isnan(vals)
    uncs[missing] = np.nan
    if missing.all():
        raise ValueError(f"{name}: every point is missing, nothing to impute from")
    half = window // 2
    m = vals.size
    while missing.any():
        known = ~missing
        filled_vals = vals.copy()
        filled_uncs = uncs.copy()
        progress = False
        for i in np.flatnonzero(missing):
            lo, hi = max(0, i - half), min(m, i + half + 1)
            sel = vals[lo:hi][known[lo:hi]]
            if sel.size:
                filled_vals[i] = sel.mean()
                filled_uncs[i] = sel.std()
                progress = True
        if not progress:  # unreachable while at least one point is known
            raise RuntimeError(f"{name}: imputation made no progress")
        vals, uncs = filled_vals, filled_uncs
        missing = np.isnan(vals)
    return UncertainSeries.checked(vals, uncs)


def build_dataset(
    table: RawObservationTable,
    labels: Mapping[str, str],
    metadata: Mapping[str, Mapping] | None = None,
    grid: GridSpec | None = None,
    window: int = 5,
    relative: bool = False,
) -> tuple[LabeledDataset, GridSpec]:
    """Resample and impute every object into a labeled dataset."""
    binned, grid = resample_to_grid(table, grid, relative)
    instances, ys, metas = [], [], []
    for oid, dims in binned.items():
        series = tuple(
            (dim, impute_rolling(v, u, window, name=f"object {oid}, dimension {dim}"))
            for dim, (v, u) in dims.items()
        )
        instances.append(MultivariateInstance(oid, series))
        if oid not in labels:
            raise ValueError(f"object {oid!r} has no label")
        ys.append(labels[oid])
        metas.append(dict((metadata or {}).get(oid, {})))
    return LabeledDataset(tuple(instances), tuple(ys), metadata=tuple(metas)), grid


def load_dataset(observations_path, metadata_path, columns=None, grid=None, window=5, relative=False):
    table, labels, metadata = parse_long_csv(observations_path, metadata_path, columns)
    return build_dataset(table, labels, metadata, grid, window, relative)


def instances_from_observations(observations_path, grid: GridSpec, columns=None, window=5):
    """Unlabeled instances from an observations CSV, regridded onto ``grid``."""
    cols = dict(DEFAULT_COLUMNS)
    cols.update(columns or {})
    obs = pd.read_csv(observations_path, float_precision="round_trip")
    for key in CANONICAL:
        if cols[key] not in obs.columns:
            raise ValueError(f"{observations_path}: missing required column {cols[key]!r}")
    table = make_table(obs.rename(columns={cols[k]: k for k in CANONICAL}))
    if len(table) == 0:
        raise ValueError(f"{observations_path}: no records")
    binned, _ = resample_to_grid(table, grid)
    return [
        MultivariateInstance(oid, tuple(
            (dim, impute_rolling(v, u, window, name=f"object {oid}, dimension {dim}")) for dim, (v, u) in dims.items()
        ))
        for oid, dims in binned.items()
    ]


def _meta_cell(v):
    if isinstance(v, (list, dict, tuple)):
        return json.dumps(v)
    return v


def write_long_csv(
    dataset: LabeledDataset,
    observations_path: str | os.PathLike,
    metadata_path: str | os.PathLike,
    grid: GridSpec | None = None,
) -> None:
    """Inverse of :func:`load_dataset` for already-regular data: one row per grid point."""
    grid = grid or GridSpec(0.0, 1.0, dataset.instances[0].length)
    rows = []
    for inst in dataset.instances:
        times = grid.start + grid.step * np.arange(inst.length)
        for dim, series in inst.dims:
            for t, v, u in zip(times, series.values, series.uncertainties):
                rows.append((inst.id, repr(float(t)), dim, repr(float(v)), repr(float(u))))
    pd.DataFrame(rows, columns=["object_id", "mjd", "passband", "flux", "flux_err"]).to_csv(
        observations_path, index=False
    )
    meta_rows = []
    for inst, label, meta in zip(dataset.instances, dataset.labels, dataset.metadata):
        meta_rows.append({"object_id": inst.id, "target": label, **{k: _meta_cell(v) for k, v in meta.items()}})
    pd.DataFrame(meta_rows).to_csv(metadata_path, index=False)


def save_preprocessed(dataset: LabeledDataset, grid: GridSpec | None, directory: str | os.PathLike,
                      provenance: Mapping | None = None) -> None:
    """Columnar dump (``dataset.csv``) plus a JSON sidecar (``dataset.json``)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "dataset.csv", "w") as fh:
        fh.write("object_id,dimension,grid_index,value,uncertainty\n")
        for inst in dataset.instances:
            for dim, series in inst.dims:
                for i, (v, u) in enumerate(zip(series.values, series.uncertainties)):
                    fh.write(f"{inst.id},{dim},{i},{float(v)!r},{float(u)!r}\n")
    sidecar = {
        "format": "usast-preprocessed",
        "version": 1,
        "grid": grid.to_dict() if grid else None,
        "class_set": list(dataset.class_set),
        "objects": [
            {"id": inst.id, "label": label, "metadata": meta}
            for inst, label, meta in zip(dataset.instances, dataset.labels, dataset.metadata)
        ],
        "provenance": dict(provenance or {}),
    }
    (directory / "dataset.json").write_text(json.dumps(sidecar, indent=1, default=str))


def load_preprocessed(directory: str | os.PathLike) -> tuple[LabeledDataset, GridSpec | None]:
    directory = Path(directory)
    sidecar = json.loads((directory / "dataset.json").read_text())
    if sidecar.get("format") != "usast-preprocessed":
        raise ValueError(f"{directory}: not a preprocessed dataset")
    df = pd.read_csv(directory / "dataset.csv", dtype={"object_id": str, "dimension": str},
                     float_precision="round_trip")
    tracks: dict[str, dict[str, pd.DataFrame]] = {}
    for (oid, dim), g in df.groupby(["object_id", "dimension"], sort=False):
        g = g.sort_values("grid_index")
        tracks.setdefault(oid, {})[dim] = UncertainSeries.checked(g["value"].to_numpy(), g["uncertainty"].to_numpy())
    instances, labels, metas = [], [], []
    for obj in sidecar["objects"]:
        dims = tracks[obj["id"]]
        instances.append(MultivariateInstance(obj["id"], tuple(sorted(dims.items(), key=lambda kv: natural_key(kv[0])))))
        labels.append(obj["label"])
        metas.append(obj["metadata"])
    grid = GridSpec.from_dict(sidecar["grid"]) if sidecar.get("grid") else None
    return LabeledDataset(tuple(instances), tuple(labels), tuple(sidecar["class_set"]), tuple(metas)), grid


__all__ = [
    "GridSpec",
    "RawObservationTable",
    "auto_grid",
    "build_dataset",
    "impute_rolling",
    "instances_from_observations",
    "load_dataset",
    "load_preprocessed",
    "make_table",
    "parse_long_csv",
    "resample_to_grid",
    "save_preprocessed",
    "write_long_csv",
]
