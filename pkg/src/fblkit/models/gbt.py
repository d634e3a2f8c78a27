"""Gradient-boosted trees over softmax loss. Experimental.

A generic depth-limited learner kept as the fourth classifier option; it
makes no attempt to mirror any particular boosting package's heuristics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .base import validate_fit_inputs, validate_predict_inputs


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: Optional["_Node"] = None
    right: Optional["_Node"] = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


class _RegressionTree:
    """Exact greedy CART regressor on gradient/hessian statistics."""

    def __init__(self, max_depth: int, min_samples_leaf: int):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def fit(self, X, gradient, hessian):
        self.root_ = self._split(X, gradient, hessian, depth=0)
        return self

    def _leaf_value(self, gradient, hessian) -> float:
        # Newton step with a small ridge term for near-zero curvature
        return -gradient.sum() / (hessian.sum() + 1e-6)

    def _split(self, X, gradient, hessian, depth) -> _Node:
        node = _Node(value=self._leaf_value(gradient, hessian))
        n = X.shape[0]
        if depth >= self.max_depth or n < 2 * self.min_samples_leaf:
            return node

        best_gain = 0.0
        best: Optional[tuple[int, float, np.ndarray]] = None
        g_total, h_total = gradient.sum(), hessian.sum()
        score_total = g_total**2 / (h_total + 1e-6)
        for j in range(X.shape[1]):
            order = np.argsort(X[:, j], kind="stable")
            xs = X[order, j]
            g_cum = np.cumsum(gradient[order])
            h_cum = np.cumsum(hessian[order])
            for i in range(self.min_samples_leaf - 1, n - self.min_samples_leaf):
                if xs[i] == xs[i + 1]:
                    continue
                g_left, h_left = g_cum[i], h_cum[i]
                g_right, h_right = g_total - g_left, h_total - h_left
                gain = (
                    g_left**2 / (h_left + 1e-6)
                    + g_right**2 / (h_right + 1e-6)
                    - score_total
                )
                if gain > best_gain + 1e-12:
                    best_gain = gain
                    threshold = 0.5 * (xs[i] + xs[i + 1])
                    best = (j, threshold, X[:, j] <= threshold)

        if best is None:
            return node
        feature, threshold, mask = best
        node.feature = feature
        node.threshold = threshold
        node.left = self._split(X[mask], gradient[mask], hessian[mask], depth + 1)
        node.right = self._split(X[~mask], gradient[~mask], hessian[~mask], depth + 1)
        return node

    def predict(self, X) -> np.ndarray:
        out = np.empty(X.shape[0])
        for i, row in enumerate(X):
            node = self.root_
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.value
        return out


class GradientBoostedTreesClassifier(BaseEstimator, ClassifierMixin):
    """Multiclass boosting: one regression tree per class per round."""

    def __init__(
        self,
        n_estimators: int = 100,
        max_depth: int = 3,
        learning_rate: float = 0.1,
        min_samples_leaf: int = 5,
    ):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.min_samples_leaf = min_samples_leaf

    def fit(self, X, y):
        X, y = validate_fit_inputs(self, X, y)
        self.classes_, codes = np.unique(y, return_inverse=True)
        n, k = X.shape[0], len(self.classes_)
        onehot = np.zeros((n, k))
        onehot[np.arange(n), codes] = 1.0

        scores = np.zeros((n, k))
        self.trees_: list[list[_RegressionTree]] = []
        for _ in range(self.n_estimators):
            probs = _softmax(scores)
            round_trees = []
            for c in range(k):
                gradient = probs[:, c] - onehot[:, c]
                hessian = probs[:, c] * (1.0 - probs[:, c])
                tree = _RegressionTree(self.max_depth, self.min_samples_leaf)
                tree.fit(X, gradient, hessian)
                scores[:, c] += self.learning_rate * tree.predict(X)
                round_trees.append(tree)
            self.trees_.append(round_trees)

        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        X = validate_predict_inputs(self, X, self.n_features_in_)
        scores = np.zeros((X.shape[0], len(self.classes_)))
        for round_trees in self.trees_:
            for c, tree in enumerate(round_trees):
                scores[:, c] += self.learning_rate * tree.predict(X)
        return scores

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)
