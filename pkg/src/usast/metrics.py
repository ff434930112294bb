"""Support-weighted classification metrics, log-loss and grouped reports."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import natural_key

BOTH = "Both"


def confusion_matrix(y_true, y_pred, classes: Sequence | None = None) -> tuple[np.ndarray, list]:
    """Rows are true classes, columns predicted classes."""
    y_true = [str(c) for c in y_true]
    y_pred = [str(c) for c in y_pred]
    if classes is None:
        classes = sorted(set(y_true) | set(y_pred), key=natural_key)
    classes = [str(c) for c in classes]
    idx = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        cm[idx[t], idx[p]] += 1
    return cm, classes


@dataclass
class ClassScores:
    label: str
    precision: float
    recall: float
    f1: float
    support: int
    zero_division: bool = False


def per_class_from_confusion(cm: np.ndarray, classes: Sequence[str]) -> list[ClassScores]:
    cm = np.asarray(cm, dtype=np.int64)
    out = []
    for i, c in enumerate(classes):
        tp = cm[i, i]
        predicted = cm[:, i].sum()
        support = cm[i, :].sum()
        flagged = predicted == 0
        precision = tp / predicted if predicted else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        out.append(ClassScores(str(c), float(precision), float(recall), float(f1), int(support), bool(flagged)))
    return out


def weighted_from_confusion(cm: np.ndarray, classes: Sequence[str]):
    per = per_class_from_confusion(cm, classes)
    support = np.array([p.support for p in per], dtype=np.float64)
    if support.sum() == 0:
        raise ValueError("empty confusion matrix")
    w = support / support.sum()
    precision = float(sum(wi * p.precision for wi, p in zip(w, per)))
    recall = float(sum(wi * p.recall for wi, p in zip(w, per)))
    f1 = float(sum(wi * p.f1 for wi, p in zip(w, per)))
    return precision, recall, f1, per


def weighted_scores(y_true, y_pred, classes: Sequence | None = None):
    """Weighted precision, recall, F1 and the per-class table.

    Weights are the class support fractions in ``y_true``. A class that is
    never predicted gets precision 0 and ``zero_division=True``.
    """
    if len(y_true) != len(y_pred):
        raise ValueError(f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted")
    if len(y_true) == 0:
        raise ValueError("no samples to score")
    cm, classes = confusion_matrix(y_true, y_pred, classes)
    return weighted_from_confusion(cm, classes)


def cross_entropy(y_true_idx, proba, clip: float = 1e-15) -> float:
    """Mean negative log of the (clipped) probability given to the true class."""
    proba = np.asarray(proba, dtype=np.float64)
    y = np.asarray(y_true_idx, dtype=np.int64)
    if proba.ndim != 2 or proba.shape[0] != y.size:
        raise ValueError(f"probabilities of shape {proba.shape} do not match {y.size} labels")
    if y.size == 0:
        raise ValueError("no samples to score")
    sums = proba.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise ValueError(f"probability row {bad} sums to {sums[bad]!r}, not 1")
    p = np.clip(proba[np.arange(y.size), y], clip, 1.0 - clip)
    return float(np.mean(-np.log(p)))


@dataclass
class EvaluationReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    per_class: list[ClassScores]
    confusion: np.ndarray
    classes: list[str]
    n_samples: int
    log_loss: float | None = None
    group: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "group": dict(self.group),
            "n_samples": self.n_samples,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "log_loss": self.log_loss,
            "classes": list(self.classes),
            "confusion": self.confusion.tolist(),
            "per_class": [vars(p) for p in self.per_class],
        }


def evaluation_report(y_true, y_pred, classes=None, proba=None, group=None) -> EvaluationReport:
    cm, classes = confusion_matrix(y_true, y_pred, classes)
    precision, recall, f1, per = weighted_from_confusion(cm, classes)
    log_loss = None
    if proba is not None:
        idx = {c: i for i, c in enumerate(classes)}
        log_loss = cross_entropy([idx[str(t)] for t in y_true], proba)
    return EvaluationReport(
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=float(np.trace(cm) / cm.sum()),
        per_class=per,
        confusion=cm,
        classes=classes,
        n_samples=int(cm.sum()),
        log_loss=log_loss,
        group=dict(group or {}),
    )


def grouped_report(
    y_true,
    y_pred,
    metadata: Sequence[Mapping],
    group_columns: Sequence[str],
    classes=None,
    proba=None,
) -> dict[tuple, EvaluationReport]:
    """Reports for every combination of group values, with "Both" marginals.

    Keys are tuples aligned with ``group_columns``; ``("Both", ..., "Both")``
    is the overall report.
    """
    y_true = [str(c) for c in y_true]
    y_pred = [str(c) for c in y_pred]
    if classes is None:
        classes = sorted(set(y_true) | set(y_pred), key=natural_key)
    values = []
    for i, meta in enumerate(metadata):
        row = []
        for col in group_columns:
            if col not in meta:
                raise KeyError(f"instance #{i} has no metadata column {col!r}")
            row.append(str(meta[col]))
        values.append(tuple(row))
    options = [sorted({v[k] for v in values}, key=natural_key) + [BOTH] for k in range(len(group_columns))]
    out = {}
    for key in itertools.product(*options):
        sel = [i for i, v in enumerate(values) if all(k == BOTH or k == vi for k, vi in zip(key, v))]
        if not sel:
            continue
        out[key] = evaluation_report(
            [y_true[i] for i in sel],
            [y_pred[i] for i in sel],
            classes,
            None if proba is None else np.asarray(proba)[sel],
            group=dict(zip(group_columns, key)),
        )
    return out


@dataclass
class BinaryScores:
    positive_class: str
    precision: float
    recall: float
    f1: float
    zero_division: bool = False


def one_vs_rest_report(y_true, y_pred, positive_class, classes=None) -> BinaryScores:
    positive = str(positive_class)
    known = set(str(c) for c in (classes if classes is not None else y_true))
    if positive not in known:
        raise ValueError(f"unknown positive class {positive!r}")
    t = np.array([str(c) == positive for c in y_true])
    p = np.array([str(c) == positive for c in y_pred])
    tp = int(np.sum(t & p))
    predicted = int(p.sum())
    actual = int(t.sum())
    precision = tp / predicted if predicted else 0.0
    recall = tp / actual if actual else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return BinaryScores(positive, float(precision), float(recall), float(f1), predicted == 0)


def format_grouped_table(reports: Mapping[tuple, EvaluationReport], group_columns: Sequence[str]) -> str:
    """Plain-text table: rows = first group column x metric, columns = second."""
    if len(group_columns) == 0:
        rep = reports[()]
        return format_report(rep)
    row_vals = sorted({k[0] for k in reports}, key=lambda v: (v == BOTH, natural_key(v)))
    col_vals = (
        sorted({k[1] for k in reports}, key=lambda v: (v == BOTH, natural_key(v)))
        if len(group_columns) > 1 else [None]
    )
    rest = (BOTH,) * max(0, len(group_columns) - 2)
    head = [group_columns[0], "metric"] + [str(c) if c is not None else "" for c in col_vals]
    lines = [head]
    for rv in row_vals:
        for metric in ("precision", "recall", "f1"):
            cells = [rv, metric]
            for cv in col_vals:
                key = (rv,) if cv is None else (rv, cv) + rest
                rep = reports.get(key)
                cells.append("-" if rep is None else f"{getattr(rep, metric):.2f}")
            lines.append(cells)
    widths = [max(len(r[i]) for r in lines) for i in range(len(head))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in lines)


def format_report(rep: EvaluationReport) -> str:
    lines = [["class", "precision", "recall", "f1", "support"]]
    for p in rep.per_class:
        flag = "*" if p.zero_division else ""
        lines.append([p.label, f"{p.precision:.4f}{flag}", f"{p.recall:.4f}", f"{p.f1:.4f}", str(p.support)])
    lines.append(["weighted", f"{rep.precision:.4f}", f"{rep.recall:.4f}", f"{rep.f1:.4f}", str(rep.n_samples)])
    widths = [max(len(r[i]) for r in lines) for i in range(5)]
    text = "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in lines)
    if rep.log_loss is not None:
        text += f"\nlog-loss {rep.log_loss:.4f}"
    if any(p.zero_division for p in rep.per_class):
        text += "\n* class never predicted; precision set to 0"
    return text


def mean_std_rows(runs: Sequence[Mapping[str, float]], keys=("precision", "recall", "f1", "log_loss", "hours")):
    """Mean and sample standard deviation per metric across runs."""
    out = {}
    for k in keys:
        vals = [r[k] for r in runs if r.get(k) is not None]
        if not vals:
            continue
        arr = np.array(vals, dtype=np.float64)
        out[k] = (float(arr.mean()), float(arr.std(ddof=1)) if arr.size > 1 else 0.0)
    return out


def format_runs_row(name: str, summary: Mapping[str, tuple[float, float]]) -> str:
    cells = [name]
    for k in ("precision", "recall", "f1", "log_loss", "hours"):
        if k in summary:
            m, s = summary[k]
            cells.append(f"{m:.2f} ± {s:.2f}")
        else:
            cells.append("-")
    return " | ".join(cells)


def reports_to_json(reports: Mapping[tuple, EvaluationReport]) -> str:
    return json.dumps([r.to_dict() for r in reports.values()], indent=2)
