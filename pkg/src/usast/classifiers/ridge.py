"""One-vs-rest ridge classifier with exact leave-one-out selection of alpha."""

from __future__ import annotations

import numpy as np

from ..serialize import decode_array, encode_array


def one_hot(y, n_classes: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    out = np.zeros((y.size, n_classes))
    out[np.arange(y.size), y] = 1.0
    return out


def loo_errors(X, Y, alphas) -> np.ndarray:
    """Mean squared leave-one-out residual per alpha (unpenalized intercept).

    Uses the hat-matrix identity ``e_loo = e / (1 - h_ii)`` on the SVD of the
    centered design, so no model is ever refit.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = X.shape[0]
    Xc = X - X.mean(axis=0)
    Yc = Y - Y.mean(axis=0)
    U, s, _ = np.linalg.svd(Xc, full_matrices=False)
    UtY = U.T @ Yc
    s2 = s * s
    out = []
    for alpha in alphas:
        shrink = s2 / (s2 + alpha)
        fitted = U @ (shrink[:, None] * UtY)
        h = 1.0 / n + (U * U) @ shrink
        resid = (Yc - fitted) / (1.0 - h)[:, None]
        out.append(float(np.mean(resid * resid)))
    return np.array(out)


class RidgeLOO:
    """Ridge regression on one-hot targets, alpha chosen by exact LOO error.

    Produces class scores rather than probabilities; ``predict`` is the
    argmax of the scores (ties go to the lower class index).
    """

    kind = "ridge"

    def __init__(self, alphas=(0.1, 1.0, 10.0), standardize: bool = False):
        alphas = [float(a) for a in alphas]
        if not alphas:
            raise ValueError("alpha grid is empty")
        if any(not a > 0 for a in alphas):
            raise ValueError("alphas must be positive")
        self.alphas = tuple(alphas)
        self.standardize = standardize
        self.alpha_ = None
        self.loo_errors_ = None
        self.coef_ = None
        self.intercept_ = None
        self.scale_ = None
        self.n_features = None
        self.n_classes = None

    def fit(self, X, y, n_classes: int | None = None) -> "RidgeLOO":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.shape[0] < 2:
            raise ValueError("need at least 2 samples")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains NaN or infinite values")
        self.n_classes = int(n_classes if n_classes is not None else y.max() + 1)
        self.n_features = X.shape[1]
        if self.standardize:
            scale = X.std(axis=0)
            self.scale_ = np.where(scale > 0, scale, 1.0)
        else:
            self.scale_ = np.ones(self.n_features)
        Xs = X / self.scale_
        Y = one_hot(y, self.n_classes)
        self.loo_errors_ = loo_errors(Xs, Y, self.alphas)
        best = int(np.argmin(self.loo_errors_))
        self.alpha_ = self.alphas[best]
        x_mean = Xs.mean(axis=0)
        y_mean = Y.mean(axis=0)
        U, s, Vt = np.linalg.svd(Xs - x_mean, full_matrices=False)
        d = s / (s * s + self.alpha_)
        self.coef_ = Vt.T @ (d[:, None] * (U.T @ (Y - y_mean)))
        self.intercept_ = y_mean - x_mean @ self.coef_
        return self

    def decision_function(self, X) -> np.ndarray:
        if self.coef_ is None:
            raise RuntimeError("ridge model is not fitted")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got array of shape {X.shape}")
        return (X / self.scale_) @ self.coef_ + self.intercept_

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)

    @property
    def feature_importances_(self) -> np.ndarray:
        """Normalized summed absolute coefficients on the scaled features."""
        imp = np.abs(self.coef_).sum(axis=1)
        total = imp.sum()
        return imp / total if total > 0 else imp

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "alphas": [repr(a) for a in self.alphas],
            "standardize": self.standardize,
            "alpha": repr(self.alpha_),
            "loo_errors": encode_array(self.loo_errors_),
            "coef": encode_array(self.coef_),
            "intercept": encode_array(self.intercept_),
            "scale": encode_array(self.scale_),
            "n_features": self.n_features,
            "n_classes": self.n_classes,
        }

    @classmethod
    def from_dict(cls, d) -> "RidgeLOO":
        model = cls([float(a) for a in d["alphas"]], bool(d["standardize"]))
        model.alpha_ = float(d["alpha"])
        if model.alpha_ not in model.alphas:
            raise ValueError("selected alpha is not in the candidate grid")
        model.loo_errors_ = decode_array(d["loo_errors"])
        model.coef_ = decode_array(d["coef"])
        model.intercept_ = decode_array(d["intercept"])
        model.scale_ = decode_array(d["scale"])
        model.n_features = int(d["n_features"])
        model.n_classes = int(d["n_classes"])
        return model


def fit_ridge_loocv(X, y, alphas=(0.1, 1.0, 10.0), n_classes=None, standardize=False) -> RidgeLOO:
    return RidgeLOO(alphas, standardize).fit(X, y, n_classes)
