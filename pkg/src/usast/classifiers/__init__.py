"""Classifiers over transformed features.

Any object with ``fit(X, y, n_classes)``, ``predict(X)``, ``to_dict()`` and
a ``kind`` attribute can be plugged into the pipeline; ``predict_proba`` and
``feature_importances_`` are used when present.
"""

from .forest import DecisionTree, RandomForest, feature_importance, fit_forest, predict_proba
from .ridge import RidgeLOO, fit_ridge_loocv, loo_errors

_KINDS = {"forest": RandomForest, "ridge": RidgeLOO}


def classifier_from_dict(d):
    try:
        cls = _KINDS[d["kind"]]
    except KeyError:
        raise ValueError(f"unknown classifier kind {d.get('kind')!r}") from None
    return cls.from_dict(d)


__all__ = [
    "DecisionTree",
    "RandomForest",
    "RidgeLOO",
    "classifier_from_dict",
    "feature_importance",
    "fit_forest",
    "fit_ridge_loocv",
    "loo_errors",
    "predict_proba",
]
