"""k-nearest-neighbors classifier with deterministic tie handling."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .base import validate_fit_inputs, validate_predict_inputs


class KNearestNeighborsClassifier(BaseEstimator, ClassifierMixin):
    """Euclidean kNN.

    Distance ties while choosing the k neighbors break toward the smaller
    training index; vote ties among neighbor labels break toward the tied
    label whose nearest representative sits earliest in that ordering.
    Both rules keep predictions reproducible.
    """

    def __init__(self, n_neighbors: int = 5):
        self.n_neighbors = n_neighbors

    def fit(self, X, y):
        X, y = validate_fit_inputs(self, X, y)
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        if self.n_neighbors > X.shape[0]:
            raise ValueError(
                f"n_neighbors={self.n_neighbors} exceeds training size {X.shape[0]}"
            )
        self.classes_ = np.unique(y)
        self._X = X
        self._y = np.asarray(y)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        X = validate_predict_inputs(self, X, self.n_features_in_)
        out = []
        for row in X:
            distances = np.sqrt(np.sum((self._X - row) ** 2, axis=1))
            # stable sort: equal distances keep ascending index order
            order = np.argsort(distances, kind="stable")[: self.n_neighbors]
            votes: dict = {}
            for rank, idx in enumerate(order):
                label = self._y[idx]
                count, first_rank = votes.get(label, (0, rank))
                votes[label] = (count + 1, first_rank)
            out.append(max(votes, key=lambda lbl: (votes[lbl][0], -votes[lbl][1])))
        return np.asarray(out)
