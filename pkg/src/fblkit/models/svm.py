"""Linear SVM trained by subgradient descent on the hinge loss."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .base import validate_fit_inputs, validate_predict_inputs


class LinearSvmClassifier(BaseEstimator, ClassifierMixin):
    """One-vs-rest linear SVM.

    Each binary problem minimizes mean hinge loss plus an L2 penalty on
    the weights via deterministic full-batch subgradient descent with a
    1/t step decay. Multiclass prediction takes the argmax decision value.
    """

    def __init__(
        self,
        reg_lambda: float = 1e-2,
        learning_rate: float = 1.0,
        max_iter: int = 500,
    ):
        self.reg_lambda = reg_lambda
        self.learning_rate = learning_rate
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = validate_fit_inputs(self, X, y)
        self.classes_ = np.unique(y)
        n, d = X.shape
        weights = np.zeros((d, len(self.classes_)))
        bias = np.zeros(len(self.classes_))

        for c, cls in enumerate(self.classes_):
            target = np.where(y == cls, 1.0, -1.0)
            w = np.zeros(d)
            b = 0.0
            for t in range(1, self.max_iter + 1):
                step = self.learning_rate / (1.0 + self.reg_lambda * self.learning_rate * t)
                margin = target * (X @ w + b)
                violating = margin < 1.0
                # subgradient of mean hinge + (lambda/2)||w||^2; bias unpenalized
                g_w = self.reg_lambda * w - (X[violating].T @ target[violating]) / n
                g_b = -target[violating].sum() / n
                w -= step * g_w
                b -= step * g_b
            weights[:, c] = w
            bias[c] = b

        self.weights_ = weights
        self.bias_ = bias
        self.n_features_in_ = d
        return self

    def decision_function(self, X) -> np.ndarray:
        X = validate_predict_inputs(self, X, self.n_features_in_)
        return X @ self.weights_ + self.bias_

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]

    def hinge_loss(self, X, y) -> float:
        """Mean multiclass (one-vs-rest summed) objective at the fit point."""
        X, y = validate_fit_inputs(self, X, y)
        total = 0.0
        for c, cls in enumerate(self.classes_):
            target = np.where(y == cls, 1.0, -1.0)
            margin = target * (X @ self.weights_[:, c] + self.bias_[c])
            total += float(np.mean(np.maximum(0.0, 1.0 - margin)))
            total += 0.5 * self.reg_lambda * float(np.sum(self.weights_[:, c] ** 2))
        return total
