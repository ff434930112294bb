"""End-to-end training, prediction, evaluation and model persistence."""

from __future__ import annotations

import json
import logging
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifiers import RandomForest, RidgeLOO, classifier_from_dict
from .core import LabeledDataset, Provenance, UncertainSubsequence, VariantConfig, validate_dataset
from .ingest import GridSpec
from .metrics import evaluation_report, grouped_report, one_vs_rest_report
from .pool import SubsequencePool, build_pool
from .serialize import encode_array
from .transform import FeatureLayout, FeatureMatrix, layout_for, transform

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MODEL_FORMAT = "usast-model"


class ModelFormatError(ValueError):
    """Raised for unreadable, truncated or incompatible model files."""


class StageError(RuntimeError):
    def __init__(self, stage: str, err: Exception):
        super().__init__(f"{stage}: {err}")
        self.stage = stage


@dataclass(eq=False)
class TrainedModel:
    config: VariantConfig
    pool: SubsequencePool
    layout: FeatureLayout
    classifier: object
    classes: tuple[str, ...]
    grid: GridSpec | None = None
    summary: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION
    # wall-clock timings are kept out of the model file so that identical
    # runs write identical bytes
    timings: dict = field(default_factory=dict)

    @property
    def dim_names(self) -> tuple[str, ...]:
        return self.pool.dim_names


def _stage(name, timings, fn, *args, **kwargs):
    t0 = time.perf_counter()
    try:
        out = fn(*args, **kwargs)
    except Exception as err:
        raise StageError(name, err) from err
    timings[name] = time.perf_counter() - t0
    return out


def make_classifier(kind: str, seed: int, **params):
    if kind == "forest":
        return RandomForest(seed=seed, **params)
    if kind == "ridge":
        return RidgeLOO(**params)
    raise ValueError(f"unknown classifier {kind!r}; choose 'forest' or 'ridge'")


def train(
    dataset: LabeledDataset,
    config: VariantConfig,
    classifier: str = "forest",
    classifier_params: dict | None = None,
    grid: GridSpec | None = None,
    n_jobs: int = 1,
) -> TrainedModel:
    """Select references, build the pool, transform, and fit the classifier."""
    problems = validate_dataset(dataset)
    if problems:
        raise StageError("validate", ValueError(f"{len(problems)} violation(s), first: {problems[0]}"))
    timings: dict[str, float] = {}
    pool = _stage("pool", timings, build_pool, dataset, config)
    log.info("pool: %d of %d candidates kept", len(pool), pool.n_candidates)
    fm = _stage("transform", timings, transform, dataset.instances, pool, config, n_jobs)
    clf = make_classifier(classifier, config.seed, **(classifier_params or {}))
    _stage("fit", timings, clf.fit, fm.values, dataset.y, len(dataset.class_set))
    summary = {
        "variant": config.variant_name,
        "n_train": len(dataset),
        "pool_candidates": pool.n_candidates,
        "pool_size": len(pool),
        "n_features": fm.layout.n_features,
        "seed": config.seed,
    }
    return TrainedModel(config, pool, fm.layout, clf, dataset.class_set, grid, summary, timings=timings)


def features(model: TrainedModel, instances, n_jobs: int = 1) -> FeatureMatrix:
    instances = list(getattr(instances, "instances", instances))
    for inst in instances:
        missing = [d for d in model.dim_names if d not in inst.dim_names]
        if missing:
            raise ValueError(f"instance {inst.id!r} lacks dimension(s) {missing} required by the model")
        if model.grid is not None and inst.length != model.grid.n_points:
            raise ValueError(
                f"instance {inst.id!r} has length {inst.length}, model grid has {model.grid.n_points} points"
            )
    return transform(instances, model.pool, model.config, n_jobs)


def predict(model: TrainedModel, instances, n_jobs: int = 1):
    """Labels (class ids) and class probabilities (None for ridge models)."""
    fm = features(model, instances, n_jobs)
    t0 = time.perf_counter()
    idx = model.classifier.predict(fm.values)
    proba = model.classifier.predict_proba(fm.values) if hasattr(model.classifier, "predict_proba") else None
    model.timings["predict"] = time.perf_counter() - t0
    labels = [model.classes[i] for i in idx]
    return labels, proba


def evaluate(
    model: TrainedModel,
    dataset: LabeledDataset,
    group_columns: Sequence[str] = (),
    positive_class: str | None = None,
    n_jobs: int = 1,
) -> dict:
    """Overall report plus grouped and one-vs-rest reports when requested."""
    labels, proba = predict(model, dataset, n_jobs)
    classes = list(model.classes)
    out = {"overall": evaluation_report(dataset.labels, labels, classes, proba)}
    if group_columns:
        out["grouped"] = grouped_report(dataset.labels, labels, dataset.metadata, group_columns, classes, proba)
    if positive_class is not None:
        out["one_vs_rest"] = one_vs_rest_report(dataset.labels, labels, positive_class, classes)
    return out


def stratified_split(labels: Sequence[str], train_fraction: float = 0.8, seed: int = 0):
    """Per-class shuffled split; each class keeps ``round(n_c * train_fraction)`` training items."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    labels = np.asarray([str(c) for c in labels])
    train_idx, test_idx = [], []
    for cls in sorted(set(labels.tolist())):
        members = rng.permutation(np.flatnonzero(labels == cls))
        n_train = int(round(members.size * train_fraction))
        if members.size > 1:
            n_train = min(max(n_train, 1), members.size - 1)
        train_idx.extend(members[:n_train].tolist())
        test_idx.extend(members[n_train:].tolist())
    return np.sort(np.array(train_idx, dtype=np.int64)), np.sort(np.array(test_idx, dtype=np.int64))


def random_split(n: int, train_fraction: float = 0.8, seed: int = 0):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_train = int(round(n * train_fraction))
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


# --- persistence -------------------------------------------------------------

def _pool_to_dict(pool: SubsequencePool) -> dict:
    return {
        "dim_names": list(pool.dim_names),
        "length_list": list(pool.length_list),
        "epsilon": repr(pool.epsilon),
        "dedup": pool.dedup,
        "normalize": pool.normalize,
        "znormalize_windows": pool.znormalize_windows,
        "n_candidates": pool.n_candidates,
        "entries": [
            {
                "ref": e.provenance.ref_instance_id,
                "class": e.provenance.class_id,
                "dimension": e.provenance.dimension,
                "start": e.provenance.start,
                "values": encode_array(e.values)["data"],
                "uncertainties": encode_array(e.uncertainties)["data"],
            }
            for e in pool.entries
        ],
    }


def _pool_from_dict(d) -> SubsequencePool:
    entries = tuple(
        UncertainSubsequence(
            [float(v) for v in e["values"]],
            [float(u) for u in e["uncertainties"]],
            Provenance(e["ref"], e["class"], e["dimension"], int(e["start"])),
        )
        for e in d["entries"]
    )
    return SubsequencePool(
        entries=entries,
        dim_names=tuple(d["dim_names"]),
        length_list=tuple(int(l) for l in d["length_list"]),
        epsilon=float(d["epsilon"]),
        dedup=bool(d["dedup"]),
        normalize=bool(d["normalize"]),
        znormalize_windows=bool(d["znormalize_windows"]),
        n_candidates=int(d["n_candidates"]),
    )


def _config_to_dict(config: VariantConfig) -> dict:
    d = config.to_dict()
    d["epsilon"] = repr(float(d["epsilon"]))
    if d["count_epsilon"] is not None:
        d["count_epsilon"] = repr(float(d["count_epsilon"]))
    return d


def _config_from_dict(d) -> VariantConfig:
    d = dict(d)
    d["epsilon"] = float(d["epsilon"])
    if d.get("count_epsilon") is not None:
        d["count_epsilon"] = float(d["count_epsilon"])
    return VariantConfig.from_dict(d)


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "schema_version": model.schema_version,
        "config": _config_to_dict(model.config),
        "grid": model.grid.to_dict() if model.grid else None,
        "classes": list(model.classes),
        "layout": model.layout.to_dict(),
        "summary": model.summary,
        "pool": _pool_to_dict(model.pool),
        "classifier": model.classifier.to_dict(),
    }


def model_from_dict(d) -> TrainedModel:
    if not isinstance(d, dict) or d.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a usast model file")
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelFormatError(f"unsupported model schema_version {version!r} (expected {SCHEMA_VERSION})")
    try:
        config = _config_from_dict(d["config"])
        pool = _pool_from_dict(d["pool"])
        layout = FeatureLayout.from_dict(d["layout"])
        clf = classifier_from_dict(d["classifier"])
        grid = GridSpec.from_dict(d["grid"]) if d.get("grid") else None
        classes = tuple(d["classes"])
    except (KeyError, TypeError, ValueError) as err:
        raise ModelFormatError(f"corrupt model file: {err!r}") from err
    if layout != layout_for(pool, config):
        raise ModelFormatError("feature layout does not match pool size and variant flags")
    if getattr(clf, "n_features", layout.n_features) != layout.n_features:
        raise ModelFormatError("classifier feature count does not match layout")
    return TrainedModel(config, pool, layout, clf, classes, grid, dict(d.get("summary", {})), version)


def dumps_model(model: TrainedModel) -> str:
    return json.dumps(model_to_dict(model), separators=(",", ":"))


def save_model(model: TrainedModel, path: str | os.PathLike) -> None:
    """Write atomically: a failed write never leaves a partial file at ``path``."""
    path = Path(path)
    text = dumps_model(model)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path: str | os.PathLike) -> TrainedModel:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ModelFormatError(f"{path}: unreadable model file ({err.msg} at char {err.pos})") from err
    return model_from_dict(d)


# --- multi-run experiments ---------------------------------------------------

def run_experiment(
    dataset: LabeledDataset,
    config: VariantConfig,
    seeds: Sequence[int] = (1, 2, 3),
    train_fraction: float = 0.8,
    classifier: str = "forest",
    classifier_params: dict | None = None,
    stratified: bool = True,
    group_columns: Sequence[str] = (),
    positive_class: str | None = None,
    grid: GridSpec | None = None,
    n_jobs: int = 1,
):
    """Split/train/evaluate once per seed; returns per-run records and models."""
    runs, models = [], []
    for seed in seeds:
        if stratified:
            tr, te = stratified_split(dataset.labels, train_fraction, seed)
        else:
            tr, te = random_split(len(dataset), train_fraction, seed)
        cfg = config.with_(seed=int(seed))
        t0 = time.perf_counter()
        model = train(dataset.subset(tr), cfg, classifier, classifier_params, grid, n_jobs)
        reports = evaluate(model, dataset.subset(te), group_columns, positive_class, n_jobs)
        elapsed = time.perf_counter() - t0
        overall = reports["overall"]
        runs.append({
            "seed": int(seed),
            "precision": overall.precision,
            "recall": overall.recall,
            "f1": overall.f1,
            "accuracy": overall.accuracy,
            "log_loss": overall.log_loss,
            "hours": elapsed / 3600.0,
            "pool_size": len(model.pool),
            "pool_candidates": model.pool.n_candidates,
            "reports": reports,
        })
        models.append(model)
    return runs, models
