"""Subsequence transform: instances -> distance / uncertainty / count features."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import MultivariateInstance, VariantConfig
from .distance import batch_match
from .pool import SubsequencePool

BLOCKS = ("value", "uncertainty", "count")
_PREFIX = {"value": "d", "uncertainty": "u", "count": "c"}


@dataclass(frozen=True)
class FeatureLayout:
    """Column layout: [values (P)] [uncertainties (P)]? [counts (P)]?"""

    n_entries: int
    use_uncertainty: bool
    count_frequency: bool

    @property
    def blocks(self) -> tuple[str, ...]:
        out = ["value"]
        if self.use_uncertainty:
            out.append("uncertainty")
        if self.count_frequency:
            out.append("count")
        return tuple(out)

    @property
    def n_features(self) -> int:
        return self.n_entries * len(self.blocks)

    def column(self, block: str, entry: int) -> int:
        if not 0 <= entry < self.n_entries:
            raise IndexError(f"pool entry {entry} out of range")
        return self.blocks.index(block) * self.n_entries + entry

    def resolve(self, column: int) -> tuple[str, int]:
        """Map a column back to its (block, pool entry)."""
        if not 0 <= column < self.n_features:
            raise IndexError(f"column {column} out of range for {self.n_features} features")
        b, j = divmod(int(column), self.n_entries)
        return self.blocks[b], j

    def names(self) -> list[str]:
        return [f"{_PREFIX[b]}_{j}" for b in self.blocks for j in range(self.n_entries)]

    def to_dict(self) -> dict:
        return {
            "n_entries": self.n_entries,
            "use_uncertainty": self.use_uncertainty,
            "count_frequency": self.count_frequency,
        }

    @classmethod
    def from_dict(cls, d) -> "FeatureLayout":
        return cls(int(d["n_entries"]), bool(d["use_uncertainty"]), bool(d["count_frequency"]))


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray
    layout: FeatureLayout
    instance_ids: tuple[str, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def block(self, name: str) -> np.ndarray:
        b = self.layout.blocks.index(name)
        P = self.layout.n_entries
        return self.values[:, b * P:(b + 1) * P]

    def to_csv(self, path: str | os.PathLike) -> None:
        """Write with header ``instance_id, d_0.., u_0.., c_0..``; floats in repr form."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["instance_id", *self.layout.names()])
            for iid, row in zip(self.instance_ids, self.values):
                w.writerow([iid, *(repr(float(v)) for v in row)])


def read_feature_csv(path: str | os.PathLike) -> FeatureMatrix:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    names = header[1:]
    prefixes = [n.split("_")[0] for n in names]
    n_entries = prefixes.count("d")
    layout = FeatureLayout(n_entries, "u" in prefixes, "c" in prefixes)
    if layout.names() != names:
        raise ValueError(f"{path}: header does not describe a valid feature layout")
    values = np.array([[float(v) for v in r[1:]] for r in body], dtype=np.float64).reshape(len(body), len(names))
    return FeatureMatrix(values, layout, tuple(r[0] for r in body))


def layout_for(pool: SubsequencePool, config: VariantConfig) -> FeatureLayout:
    return FeatureLayout(len(pool), config.use_uncertainty, config.count_frequency)


def transform_instance(
    instance: MultivariateInstance, pool: SubsequencePool, config: VariantConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Feature row plus the best-match window start of every pool entry."""
    layout = layout_for(pool, config)
    P = layout.n_entries
    row = np.zeros(layout.n_features)
    positions = np.zeros(P, dtype=np.int64)
    count_eps = config.effective_count_epsilon if config.count_frequency else None
    for (dim, length), (idx, q_vals, q_uncs) in pool.stacked.items():
        try:
            series = instance.dim(dim)
        except KeyError:
            raise ValueError(f"instance {instance.id!r} is missing dimension {dim!r}") from None
        if len(series) < length:
            raise ValueError(
                f"instance {instance.id!r} dimension {dim!r} has length {len(series)} "
                f"< pool subsequence length {length}"
            )
        dist, unc, pos, count = batch_match(
            q_vals, q_uncs, series.values, series.uncertainties,
            normalize=pool.normalize,
            znormalize_windows=pool.znormalize_windows,
            with_uncertainty=config.use_uncertainty,
            count_epsilon=count_eps,
        )
        row[idx] = dist
        positions[idx] = pos
        if config.use_uncertainty:
            row[layout.column("uncertainty", 0) + idx] = unc
        if config.count_frequency:
            row[layout.column("count", 0) + idx] = count
    return row, positions


def transform(
    instances: Sequence[MultivariateInstance],
    pool: SubsequencePool,
    config: VariantConfig,
    n_jobs: int = 1,
) -> FeatureMatrix:
    """Distance features of every instance against every pool entry.

    Rows are computed independently, so the result does not depend on
    ``n_jobs`` (``-1`` uses every core).
    """
    instances = list(getattr(instances, "instances", instances))
    layout = layout_for(pool, config)
    out = np.zeros((len(instances), layout.n_features))

    def work(i):
        out[i], _ = transform_instance(instances[i], pool, config)

    if n_jobs == -1:
        n_jobs = os.cpu_count() or 1
    if n_jobs <= 1 or len(instances) <= 1:
        for i in range(len(instances)):
            work(i)
    else:
        _ = pool.stacked  # build the cache once before threads share it
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            list(ex.map(work, range(len(instances))))
    return FeatureMatrix(out, layout, tuple(inst.id for inst in instances))
