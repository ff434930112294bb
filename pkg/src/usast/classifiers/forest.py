"""Bagged decision trees split by information gain (entropy decrease)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..serialize import decode_array, encode_array


def _entropy(counts: np.ndarray) -> np.ndarray:
    """Base-2 entropy of count vectors along the last axis."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, counts / total, 0.0)
        logs = np.where(p > 0, np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -(p * logs).sum(axis=-1)


def _tree_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) % 2**64, int(index)])


@dataclass(eq=False)
class DecisionTree:
    """Array-backed binary tree; ``feature == -1`` marks a leaf.

    ``counts[node]`` holds the (bootstrap) class counts reaching the node;
    samples with ``x[feature] <= threshold`` go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray
    impurity_decrease: np.ndarray

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def node_proba(self) -> np.ndarray:
        return self.counts / self.counts.sum(axis=1, keepdims=True)

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[node]
            active = np.flatnonzero(f >= 0)
            if active.size == 0:
                return node
            cur = node[active]
            go_left = X[active, f[active]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])

    def decision_path(self, x: np.ndarray) -> list[int]:
        path = [0]
        node = 0
        while self.feature[node] >= 0:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
            path.append(int(node))
        return path

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.node_proba[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": encode_array(self.feature),
            "threshold": encode_array(self.threshold),
            "left": encode_array(self.left),
            "right": encode_array(self.right),
            "counts": encode_array(self.counts),
            "impurity_decrease": encode_array(self.impurity_decrease),
        }

    @classmethod
    def from_dict(cls, d) -> "DecisionTree":
        return cls(**{k: decode_array(d[k]) for k in cls.__dataclass_fields__})


class _TreeBuilder:
    def __init__(self, X, y, n_classes, max_features, min_samples_leaf, max_depth, rng):
        self.X = X
        self.y = y
        self.n_classes = n_classes
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.max_depth = max_depth
        self.rng = rng
        self.onehot = np.eye(n_classes, dtype=np.int64)

    def _best_split(self, rows: np.ndarray, parent_counts: np.ndarray):
        """Best (gain, feature, threshold, left_rows, right_rows) or None."""
        X, y = self.X, self.y
        n_features = X.shape[1]
        perm = self.rng.permutation(n_features)
        xs_node = X[rows]
        # look at max_features candidates, then keep drawing until one is usable
        lo, hi = 0, min(self.max_features, n_features)
        best = None
        while lo < n_features:
            feats = np.sort(perm[lo:hi])
            cand = xs_node[:, feats]
            usable = cand.max(axis=0) > cand.min(axis=0)
            if usable.any():
                best = self._scan(rows, feats[usable], cand[:, usable], parent_counts)
                if best is not None:
                    return best
            lo, hi = hi, hi + 1
        return best

    def _scan(self, rows, feats, cand, parent_counts):
        best = None
        step = max(1, (1 << 22) // max(1, rows.size * self.n_classes))
        for lo in range(0, len(feats), step):
            found = self._scan_chunk(rows, feats[lo:lo + step], cand[:, lo:lo + step], parent_counts)
            # strict comparison keeps the lower feature index on ties
            if found is not None and (best is None or found[0] > best[0]):
                best = found
        return best

    def _scan_chunk(self, rows, feats, cand, parent_counts):
        n = rows.size
        msl = self.min_samples_leaf
        order = np.argsort(cand, axis=0, kind="stable")
        xs = np.take_along_axis(cand, order, axis=0)
        ys = self.y[rows][order]  # (n, k)
        left = np.cumsum(self.onehot[ys], axis=0)[:-1]  # (n-1, k, C)
        right = parent_counts[None, None, :] - left
        n_left = np.arange(1, n)[:, None]
        valid = xs[:-1] < xs[1:]
        valid &= (n_left >= msl) & (n - n_left >= msl)
        if not valid.any():
            return None
        child = (n_left * _entropy(left) + (n - n_left) * _entropy(right)) / n
        gain = _entropy(parent_counts) - child
        gain = np.where(valid, gain, -np.inf)
        # ties: lowest feature index first (feats sorted), then lowest threshold
        best_pos_per_feat = np.argmax(gain, axis=0)
        best_gain_per_feat = gain[best_pos_per_feat, np.arange(len(feats))]
        k = int(np.argmax(best_gain_per_feat))
        i = int(best_pos_per_feat[k])
        lo_v, hi_v = xs[i, k], xs[i + 1, k]
        thr = (lo_v + hi_v) / 2.0
        if not lo_v < thr < hi_v:
            thr = lo_v
        col = cand[:, k]
        return float(gain[i, k]), int(feats[k]), float(thr), rows[col <= thr], rows[col > thr]

    def build(self) -> DecisionTree:
        feature, threshold, left, right, counts, decrease = [], [], [], [], [], []
        n_root = self.y.size

        def new_node(rows):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            counts.append(np.bincount(self.y[rows], minlength=self.n_classes))
            decrease.append(0.0)
            return len(feature) - 1

        root_rows = np.arange(n_root)
        stack = [(new_node(root_rows), root_rows, 0)]
        while stack:
            node, rows, depth = stack.pop()
            c = counts[node]
            if np.count_nonzero(c) <= 1 or rows.size < 2 * self.min_samples_leaf:
                continue
            if self.max_depth is not None and depth >= self.max_depth:
                continue
            split = self._best_split(rows, c)
            if split is None:
                continue
            gain, f, thr, lrows, rrows = split
            feature[node] = f
            threshold[node] = thr
            decrease[node] = rows.size / n_root * gain
            l_id = new_node(lrows)
            r_id = new_node(rrows)
            left[node], right[node] = l_id, r_id
            # right pushed first so the left subtree gets the lower node ids
            stack.append((r_id, rrows, depth + 1))
            stack.append((l_id, lrows, depth + 1))
        return DecisionTree(
            feature=np.array(feature, dtype=np.int64),
            threshold=np.array(threshold, dtype=np.float64),
            left=np.array(left, dtype=np.int64),
            right=np.array(right, dtype=np.int64),
            counts=np.array(counts, dtype=np.int64),
            impurity_decrease=np.array(decrease, dtype=np.float64),
        )


class RandomForest:
    """Random forest classifier over dense integer labels ``0..n_classes-1``.

    Parameters
    ----------
    n_trees : int
        Number of bagged trees.
    max_features : int, float, "sqrt" or None
        Features examined per split. ``"sqrt"`` means ``ceil(sqrt(F))``; a float
        is a fraction of F; None uses every feature.
    min_samples_leaf : int
        Minimum number of (bootstrap) samples in a leaf.
    max_depth : int or None
        Depth limit; None grows until leaves are pure.
    seed : int
        Master seed; tree ``t`` draws from ``SeedSequence([seed, t])``.
    """

    kind = "forest"

    def __init__(self, n_trees=100, max_features="sqrt", min_samples_leaf=1, max_depth=None, seed=0):
        if n_trees < 1:
            raise ValueError("n_trees must be positive")
        if min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be positive")
        self.n_trees = int(n_trees)
        self.max_features = max_features
        self.min_samples_leaf = int(min_samples_leaf)
        self.max_depth = max_depth
        self.seed = int(seed)
        self.trees: list[DecisionTree] = []
        self.n_features = None
        self.n_classes = None

    def _resolve_max_features(self, F: int) -> int:
        mf = self.max_features
        if mf is None:
            return F
        if mf == "sqrt":
            return max(1, math.ceil(math.sqrt(F)))
        if isinstance(mf, float):
            return max(1, min(F, int(mf * F)))
        return max(1, min(F, int(mf)))

    def fit(self, X, y, n_classes: int | None = None) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] != y.size:
            raise ValueError(f"X of shape {X.shape} does not match {y.size} labels")
        if X.shape[0] < 2:
            raise ValueError("need at least 2 samples")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains NaN or infinite values")
        if np.unique(y).size < 2:
            raise ValueError("need at least 2 classes in y")
        if y.min() < 0:
            raise ValueError("labels must be non-negative class indices")
        self.n_classes = int(n_classes if n_classes is not None else y.max() + 1)
        self.n_features = X.shape[1]
        mf = self._resolve_max_features(self.n_features)
        self.trees = []
        n = X.shape[0]
        for t in range(self.n_trees):
            rng = np.random.default_rng(_tree_seed(self.seed, t))
            boot = rng.integers(0, n, size=n)
            builder = _TreeBuilder(
                X[boot], y[boot], self.n_classes, mf, self.min_samples_leaf, self.max_depth, rng
            )
            self.trees.append(builder.build())
        if all(tree.n_nodes == 1 for tree in self.trees):
            warnings.warn("no tree found a usable split; feature importances are all zero", stacklevel=2)
        return self

    def _check(self, X) -> np.ndarray:
        if not self.trees:
            raise RuntimeError("forest is not fitted")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got array of shape {X.shape}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        """Mean of per-tree leaf class frequencies."""
        X = self._check(X)
        out = np.zeros((X.shape[0], self.n_classes))
        for tree in self.trees:
            out += tree.predict_proba(X)
        return out / len(self.trees)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    @property
    def feature_importances_(self) -> np.ndarray:
        imp = np.zeros(self.n_features)
        for tree in self.trees:
            split = tree.feature >= 0
            np.add.at(imp, tree.feature[split], tree.impurity_decrease[split])
        total = imp.sum()
        return imp / total if total > 0 else imp

    def contributions(self, x, target: int | None = None) -> tuple[int, float, np.ndarray]:
        """Decision-path attribution for one sample.

        Each split on the root-to-leaf path credits the change in the
        probability of ``target`` (default: the predicted class) to its split
        feature; contributions are averaged over trees. Returns ``(target,
        base, contrib)`` with ``base + contrib.sum() == predict_proba(x)[target]``.
        """
        x = self._check(np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
        if target is None:
            target = int(self.predict(x[None])[0])
        contrib = np.zeros(self.n_features)
        base = 0.0
        for tree in self.trees:
            proba = tree.node_proba[:, target]
            path = tree.decision_path(x)
            base += proba[0]
            for parent, child in zip(path[:-1], path[1:]):
                contrib[tree.feature[parent]] += proba[child] - proba[parent]
        n = len(self.trees)
        return target, base / n, contrib / n

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_trees": self.n_trees,
            "max_features": self.max_features,
            "min_samples_leaf": self.min_samples_leaf,
            "max_depth": self.max_depth,
            "seed": self.seed,
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d) -> "RandomForest":
        model = cls(d["n_trees"], d["max_features"], d["min_samples_leaf"], d["max_depth"], d["seed"])
        model.n_features = int(d["n_features"])
        model.n_classes = int(d["n_classes"])
        model.trees = [DecisionTree.from_dict(t) for t in d["trees"]]
        if len(model.trees) != model.n_trees:
            raise ValueError("tree count does not match n_trees")
        for t in model.trees:
            if np.any(t.feature >= model.n_features) or np.any(t.counts.sum(axis=1) <= 0):
                raise ValueError("corrupt tree: bad split feature or empty leaf")
        return model


def fit_forest(X, y, n_trees=100, max_features="sqrt", min_samples_leaf=1, max_depth=None, seed=0,
               n_classes=None) -> RandomForest:
    return RandomForest(n_trees, max_features, min_samples_leaf, max_depth, seed).fit(X, y, n_classes)


def predict_proba(model: RandomForest, X) -> np.ndarray:
    return model.predict_proba(X)


def feature_importance(model: RandomForest) -> np.ndarray:
    """Weighted mean decrease in entropy per feature, normalized to sum to 1."""
    return model.feature_importances_
