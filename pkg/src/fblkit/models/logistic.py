"""Multinomial logistic regression trained by full-batch gradient descent."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .base import validate_fit_inputs, validate_predict_inputs


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def loss_and_gradient(
    weights: np.ndarray,
    bias: np.ndarray,
    X: np.ndarray,
    onehot: np.ndarray,
    reg_lambda: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy with an L2 penalty on the weights (bias exempt).

    Returns (loss, d_weights, d_bias). Kept as a standalone function so the
    analytic gradient can be checked against finite differences.
    """
    n = X.shape[0]
    probs = softmax(X @ weights + bias)
    # clip keeps log well-defined when a class probability underflows
    log_likelihood = np.sum(onehot * np.log(np.clip(probs, 1e-300, None)))
    loss = -log_likelihood / n + 0.5 * reg_lambda * float(np.sum(weights**2))
    delta = (probs - onehot) / n
    d_weights = X.T @ delta + reg_lambda * weights
    d_bias = delta.sum(axis=0)
    return loss, d_weights, d_bias


class MultinomialLogisticRegression(BaseEstimator, ClassifierMixin):
    """Softmax regression with L2 regularization.

    Full-batch gradient descent with backtracking on the step size, so the
    loss never increases between epochs and the deterministic zero init
    needs no random state. Stops once the gradient's max-abs entry falls
    below ``tol``.
    """

    def __init__(
        self,
        reg_lambda: float = 1e-2,
        learning_rate: float = 1.0,
        max_iter: int = 500,
        tol: float = 1e-6,
        adapt_step: bool = True,
    ):
        self.reg_lambda = reg_lambda
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.tol = tol
        self.adapt_step = adapt_step

    def fit(self, X, y):
        X, y = validate_fit_inputs(self, X, y)
        self.classes_, codes = np.unique(y, return_inverse=True)
        n, d = X.shape
        k = len(self.classes_)
        onehot = np.zeros((n, k))
        onehot[np.arange(n), codes] = 1.0

        weights = np.zeros((d, k))
        bias = np.zeros(k)
        step = self.learning_rate
        loss, d_w, d_b = loss_and_gradient(weights, bias, X, onehot, self.reg_lambda)
        history = [loss]

        for _ in range(self.max_iter):
            if max(np.abs(d_w).max(), np.abs(d_b).max()) <= self.tol:
                break
            while True:
                new_w = weights - step * d_w
                new_b = bias - step * d_b
                new_loss, new_dw, new_db = loss_and_gradient(
                    new_w, new_b, X, onehot, self.reg_lambda
                )
                if not self.adapt_step or new_loss <= loss or step < 1e-12:
                    break
                step *= 0.5
            weights, bias = new_w, new_b
            loss, d_w, d_b = new_loss, new_dw, new_db
            history.append(loss)
            if self.adapt_step:
                step *= 1.1

        self.weights_ = weights
        self.bias_ = bias
        self.loss_history_ = history
        self.n_features_in_ = d
        return self

    def decision_function(self, X) -> np.ndarray:
        X = validate_predict_inputs(self, X, self.n_features_in_)
        return X @ self.weights_ + self.bias_

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))

    def predict(self, X):
        scores = self.decision_function(X)
        return self.classes_[np.argmax(scores, axis=1)]

    def gradient_norm(self, X, y) -> float:
        """L2 norm of the full loss gradient at the fitted parameters."""
        X, y = validate_fit_inputs(self, X, y)
        codes = np.searchsorted(self.classes_, y)
        onehot = np.zeros((X.shape[0], len(self.classes_)))
        onehot[np.arange(X.shape[0]), codes] = 1.0
        _, d_w, d_b = loss_and_gradient(
            self.weights_, self.bias_, X, onehot, self.reg_lambda
        )
        return float(np.sqrt(np.sum(d_w**2) + np.sum(d_b**2)))
