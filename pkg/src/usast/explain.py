"""Global and local explanations in terms of pool subsequences."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import MultivariateInstance, VariantConfig
from .distance import sliding_min_distance
from .pool import SubsequencePool
from .transform import FeatureLayout, transform_instance

EXPLANATION_VERSION = 1
FEATURE_TYPES = {"value": "Value", "uncertainty": "Uncertainty", "count": "Count"}


@dataclass(frozen=True)
class GlobalEntry:
    rank: int
    column: int
    entry: int
    class_id: str
    dimension: str
    ref_instance_id: str
    start: int
    length: int
    feature_type: str
    importance: float
    points: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class GlobalExplanation:
    entries: tuple[GlobalEntry, ...]

    def to_json(self) -> str:
        return json.dumps({
            "schema": "usast-explanation-global",
            "version": EXPLANATION_VERSION,
            "entries": [
                {
                    "rank": e.rank,
                    "class": e.class_id,
                    "dimension": e.dimension,
                    "type": e.feature_type,
                    "importance": e.importance,
                    "column": e.column,
                    "reference": e.ref_instance_id,
                    "start": e.start,
                    "length": e.length,
                    "points": [list(p) for p in e.points],
                }
                for e in self.entries
            ],
        }, indent=1)


@dataclass(frozen=True)
class LocalEntry:
    rank: int
    column: int
    entry: int
    class_id: str
    dimension: str
    feature_type: str
    contribution: float
    feature_value: float
    window_start: int
    window_length: int
    window_points: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class LocalExplanation:
    instance_id: str
    predicted_class: str
    probability: float
    base_rate: float
    entries: tuple[LocalEntry, ...]
    series: dict

    def to_json(self) -> str:
        return json.dumps({
            "schema": "usast-explanation-local",
            "version": EXPLANATION_VERSION,
            "instance_id": self.instance_id,
            "predicted_class": self.predicted_class,
            "probability": self.probability,
            "base_rate": self.base_rate,
            "series": self.series,
            "entries": [
                {
                    "rank": e.rank,
                    "class": e.class_id,
                    "dimension": e.dimension,
                    "type": e.feature_type,
                    "contribution": e.contribution,
                    "feature_value": e.feature_value,
                    "window_start": e.window_start,
                    "window_length": e.window_length,
                    "points": [list(p) for p in e.window_points],
                }
                for e in self.entries
            ],
            "highlights": [
                {"dimension": e.dimension, "start": e.window_start, "stop": e.window_start + e.window_length}
                for e in self.entries
            ],
        }, indent=1)


def _check(classifier, pool: SubsequencePool, layout: FeatureLayout):
    if layout.n_entries != len(pool):
        raise ValueError(f"layout describes {layout.n_entries} pool entries, pool has {len(pool)}")
    n_features = getattr(classifier, "n_features", None)
    if n_features is not None and n_features != layout.n_features:
        raise ValueError(f"classifier expects {n_features} features, layout has {layout.n_features}")


def _points(values, uncertainties):
    return tuple((float(v), float(u)) for v, u in zip(values, uncertainties))


def explain_global(classifier, pool: SubsequencePool, layout: FeatureLayout, top_k: int = 20) -> GlobalExplanation:
    """Top-``top_k`` columns by importance; ties go to the lower column index."""
    _check(classifier, pool, layout)
    imp = np.asarray(classifier.feature_importances_, dtype=np.float64)
    cols = np.arange(imp.size)
    order = np.lexsort((cols, -imp))[: max(0, int(top_k))]
    entries = []
    for rank, col in enumerate(order, start=1):
        block, j = layout.resolve(int(col))
        sub = pool.entries[j]
        prov = sub.provenance
        entries.append(GlobalEntry(
            rank=rank,
            column=int(col),
            entry=j,
            class_id=prov.class_id,
            dimension=prov.dimension,
            ref_instance_id=prov.ref_instance_id,
            start=prov.start,
            length=len(sub),
            feature_type=FEATURE_TYPES[block],
            importance=float(imp[col]),
            points=_points(sub.values, sub.uncertainties),
        ))
    return GlobalExplanation(tuple(entries))


def explain_local(
    classifier,
    pool: SubsequencePool,
    layout: FeatureLayout,
    instance: MultivariateInstance,
    config: VariantConfig,
    top: int = 3,
    classes: tuple[str, ...] | None = None,
) -> LocalExplanation:
    """Columns that moved the predicted-class probability most for ``instance``.

    Contributions come from decision-path attribution, so
    ``base_rate + sum(all contributions) == probability``. Each listed entry
    carries the best-matching window of its subsequence in the instance.
    """
    _check(classifier, pool, layout)
    if not hasattr(classifier, "contributions"):
        raise TypeError("local explanations need a tree-ensemble classifier")
    row, _ = transform_instance(instance, pool, config)
    target, base, contrib = classifier.contributions(row)
    proba = float(classifier.predict_proba(row[None])[0, target])
    cols = np.arange(contrib.size)
    order = np.lexsort((cols, -np.abs(contrib)))[: max(0, int(top))]
    entries = []
    for rank, col in enumerate(order, start=1):
        block, j = layout.resolve(int(col))
        sub = pool.entries[j]
        dim = sub.provenance.dimension
        series = instance.dim(dim)
        match = sliding_min_distance(sub, series, normalize=pool.normalize, znormalize_windows=pool.znormalize_windows)
        start, length = match.position, len(sub)
        entries.append(LocalEntry(
            rank=rank,
            column=int(col),
            entry=j,
            class_id=sub.provenance.class_id,
            dimension=dim,
            feature_type=FEATURE_TYPES[block],
            contribution=float(contrib[col]),
            feature_value=float(row[col]),
            window_start=start,
            window_length=length,
            window_points=_points(series.values[start:start + length], series.uncertainties[start:start + length]),
        ))
    label = classes[target] if classes is not None else str(target)
    series = {name: [[float(v), float(u)] for v, u in zip(s.values, s.uncertainties)] for name, s in instance.dims}
    return LocalExplanation(instance.id, label, proba, float(base), tuple(entries), series)


def local_contribution_total(classifier, row) -> tuple[float, float]:
    """(base + sum of contributions, predicted probability) for one feature row."""
    target, base, contrib = classifier.contributions(row)
    return base + float(contrib.sum()), float(classifier.predict_proba(np.asarray(row)[None])[0, target])
