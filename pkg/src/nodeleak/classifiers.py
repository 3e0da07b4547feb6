"""From-scratch binary classifiers for the neighbor-recovery step.

All models share the same surface: ``fit(kind, features, labels, seed)``
returns a fitted model with ``predict_proba`` (positive-class probability
per row) and ``predict``.  Fitting is deterministic given the seed, models
are immutable afterwards, and prediction is safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = ("gnb", "knn", "dtree", "rforest", "adaboost")

_VAR_SMOOTHING = 1e-9


def _check_2d(features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("features must be a 2-D array")
    return x


def _check_width(x: np.ndarray, width: int) -> None:
    if x.shape[1] != width:
        raise ValueError(f"feature width {x.shape[1]} != fitted width {width}")


class _Model:
    """Common prediction plumbing; subclasses implement _scores."""

    n_features: int
    positive_on_tie = True

    def predict_proba(self, features) -> np.ndarray:
        x = _check_2d(features)
        _check_width(x, self.n_features)
        return self._scores(x)

    def predict(self, features) -> np.ndarray:
        scores = self.predict_proba(features)
        if self.positive_on_tie:
            return scores >= 0.5
        return scores > 0.5

    def _scores(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class GaussianNB(_Model):
    """Class-conditional Gaussian per feature, variance-smoothed.

    A single-class training set yields a degenerate model that scores that
    class with probability 1.
    """

    def __init__(self, x: np.ndarray, y: np.ndarray):
        self.n_features = x.shape[1]
        self.classes = np.unique(y)
        self.priors = np.array([np.mean(y == c) for c in self.classes])
        max_var = float(np.max(np.var(x, axis=0))) if x.size else 0.0
        self.epsilon = _VAR_SMOOTHING * max_var if max_var > 0 else _VAR_SMOOTHING
        self.means = np.stack([x[y == c].mean(axis=0) for c in self.classes])
        self.variances = np.stack([x[y == c].var(axis=0) for c in self.classes])
        self.variances += self.epsilon

    def _scores(self, x: np.ndarray) -> np.ndarray:
        if len(self.classes) == 1:
            value = 1.0 if self.classes[0] == 1 else 0.0
            return np.full(x.shape[0], value)
        logp = np.empty((x.shape[0], 2))
        for ci in range(2):
            mu = self.means[ci]
            var = self.variances[ci]
            ll = -0.5 * (np.log(2.0 * np.pi * var) + (x - mu) ** 2 / var)
            logp[:, ci] = math.log(self.priors[ci]) + ll.sum(axis=1)
        shift = logp.max(axis=1, keepdims=True)
        p = np.exp(logp - shift)
        p /= p.sum(axis=1, keepdims=True)
        return p[:, int(np.searchsorted(self.classes, 1))]


class KNearest(_Model):
    """k-nearest neighbors with Euclidean distance; score = vote fraction.

    Exactly split votes predict the negative class.
    """

    positive_on_tie = False

    def __init__(self, x: np.ndarray, y: np.ndarray, k: int = 5):
        self.n_features = x.shape[1]
        self.k = min(k, x.shape[0])
        self.x = x
        self.y = y.astype(np.float64)

    def _scores(self, x: np.ndarray) -> np.ndarray:
        scores = np.empty(x.shape[0])
        # chunked to bound the distance-matrix size
        step = max(1, 2_000_000 // max(self.x.shape[0], 1))
        for lo in range(0, x.shape[0], step):
            chunk = x[lo:lo + step]
            d2 = ((chunk[:, None, :] - self.x[None, :, :]) ** 2).sum(axis=2)
            nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
            scores[lo:lo + chunk.shape[0]] = self.y[nearest].mean(axis=1)
        return scores


@dataclass
class _TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "_TreeNode | None" = None
    right: "_TreeNode | None" = None
    score: float = 0.0  # positive fraction at leaves


class DecisionTree(_Model):
    """CART with Gini impurity; unlimited depth unless capped.

    Supports sample weights (for boosting) and per-split feature
    subsampling (for forests).  Ties between splits resolve to the lowest
    feature index, then the lowest threshold, so fitting is deterministic.
    """

    def __init__(self, x: np.ndarray, y: np.ndarray, *,
                 sample_weight: np.ndarray | None = None,
                 max_depth: int | None = None,
                 max_features: int | None = None,
                 rng: np.random.Generator | None = None,
                 min_samples_split: int = 2):
        self.n_features = x.shape[1]
        self.max_depth = max_depth
        self.max_features = max_features
        self.min_samples_split = min_samples_split
        self._rng = rng
        w = np.ones(x.shape[0]) if sample_weight is None else np.asarray(sample_weight, float)
        self.root = self._build(x, y.astype(np.float64), w, depth=0)
        self._rng = None  # only needed during fitting

    def _leaf(self, y: np.ndarray, w: np.ndarray) -> _TreeNode:
        total = w.sum()
        score = float((w * y).sum() / total) if total > 0 else 0.0
        return _TreeNode(score=score)

    def _build(self, x, y, w, depth) -> _TreeNode:
        n = x.shape[0]
        if (n < self.min_samples_split
                or (self.max_depth is not None and depth >= self.max_depth)
                or np.all(y == y[0])):
            return self._leaf(y, w)
        feature, threshold = self._best_split(x, y, w)
        if feature < 0:
            return self._leaf(y, w)
        mask = x[:, feature] < threshold
        node = _TreeNode(feature=feature, threshold=threshold)
        node.left = self._build(x[mask], y[mask], w[mask], depth + 1)
        node.right = self._build(x[~mask], y[~mask], w[~mask], depth + 1)
        return node

    def _candidate_features(self) -> np.ndarray:
        if self.max_features is None or self.max_features >= self.n_features:
            return np.arange(self.n_features)
        if self._rng is None:
            return np.arange(self.max_features)
        return np.sort(self._rng.choice(self.n_features, self.max_features,
                                        replace=False))

    def _best_split(self, x, y, w) -> tuple[int, float]:
        best = (np.inf, -1, 0.0)  # (weighted gini, feature, threshold)
        total_w = w.sum()
        total_pos = (w * y).sum()
        for f in self._candidate_features():
            order = np.argsort(x[:, f], kind="stable")
            xs = x[order, f]
            ws = w[order]
            ps = ws * y[order]
            cum_w = np.cumsum(ws)
            cum_p = np.cumsum(ps)
            # splits allowed only between distinct consecutive values
            distinct = np.nonzero(xs[1:] > xs[:-1])[0]
            if distinct.size == 0:
                continue
            lw = cum_w[distinct]
            lp = cum_p[distinct]
            rw = total_w - lw
            rp = total_pos - lp
            with np.errstate(invalid="ignore", divide="ignore"):
                gini_l = 1.0 - (lp / lw) ** 2 - (1.0 - lp / lw) ** 2
                gini_r = 1.0 - (rp / rw) ** 2 - (1.0 - rp / rw) ** 2
            score = lw * np.nan_to_num(gini_l) + rw * np.nan_to_num(gini_r)
            i = int(np.argmin(score))
            if score[i] < best[0] - 1e-15:
                threshold = 0.5 * (xs[distinct[i]] + xs[distinct[i] + 1])
                best = (float(score[i]), int(f), float(threshold))
        return best[1], best[2]

    def _scores(self, x: np.ndarray) -> np.ndarray:
        out = np.empty(x.shape[0])
        for i in range(x.shape[0]):
            node = self.root
            while node.left is not None:
                node = node.left if x[i, node.feature] < node.threshold else node.right
            out[i] = node.score
        return out


class RandomForest(_Model):
    """Bagged trees with sqrt-width feature subsampling per split."""

    def __init__(self, x: np.ndarray, y: np.ndarray, seed: int,
                 n_trees: int = 100):
        self.n_features = x.shape[1]
        max_features = max(1, round(math.sqrt(x.shape[1])))
        seqs = np.random.SeedSequence(seed).spawn(n_trees)
        self.trees = []
        for seq in seqs:
            rng = np.random.default_rng(seq)
            rows = rng.integers(0, x.shape[0], size=x.shape[0])
            self.trees.append(DecisionTree(x[rows], y[rows],
                                           max_features=max_features, rng=rng))

    def _scores(self, x: np.ndarray) -> np.ndarray:
        return np.mean([t._scores(x) for t in self.trees], axis=0)


class AdaBoost(_Model):
    """SAMME boosting of depth-1 trees; score = alpha-weighted vote share."""

    def __init__(self, x: np.ndarray, y: np.ndarray, n_rounds: int = 50):
        self.n_features = x.shape[1]
        n = x.shape[0]
        w = np.full(n, 1.0 / n)
        self.stumps: list[DecisionTree] = []
        self.alphas: list[float] = []
        for _ in range(n_rounds):
            stump = DecisionTree(x, y, sample_weight=w, max_depth=1)
            pred = stump._scores(x) >= 0.5
            miss = pred != (y == 1)
            err = float(w[miss].sum())
            if err >= 0.5:
                if not self.stumps:  # keep one weak stump rather than none
                    self.stumps.append(stump)
                    self.alphas.append(1e-10)
                break
            err = max(err, 1e-16)
            alpha = math.log((1.0 - err) / err)
            self.stumps.append(stump)
            self.alphas.append(alpha)
            if err <= 1e-16:
                break
            w = w * np.exp(alpha * miss)
            w /= w.sum()

    def _scores(self, x: np.ndarray) -> np.ndarray:
        total = sum(self.alphas)
        votes = np.zeros(x.shape[0])
        for stump, alpha in zip(self.stumps, self.alphas):
            votes += alpha * (stump._scores(x) >= 0.5)
        return votes / total if total > 0 else np.full(x.shape[0], 0.5)


def fit(kind: str, features: np.ndarray, labels: np.ndarray, seed: int = 0) -> _Model:
    """Fit a classifier of the named kind on a labeled feature table."""
    x = _check_2d(features)
    y = np.asarray(labels)
    if x.shape[0] == 0:
        raise ValueError("empty training table")
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"{x.shape[0]} rows but {y.shape[0]} labels")
    if not np.all(np.isin(y, (0, 1))):
        raise ValueError("labels must be 0/1")
    y = y.astype(np.int64)
    if kind == "gnb":
        return GaussianNB(x, y)
    if kind == "knn":
        return KNearest(x, y)
    if kind == "dtree":
        return DecisionTree(x, y)
    if kind == "rforest":
        return RandomForest(x, y, seed)
    if kind == "adaboost":
        return AdaBoost(x, y)
    raise ValueError(f"unknown classifier kind {kind!r}; expected one of {KINDS}")
