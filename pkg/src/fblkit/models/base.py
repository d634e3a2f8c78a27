"""Shared estimator plumbing and the spec-level train/predict entry points."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..features import FeatureVector, feature_matrix


class ClassifierKind(enum.Enum):
    LOGISTIC_REGRESSION = "logistic_regression"
    SVM = "svm"
    KNN = "knn"
    GBT = "gbt"


@dataclass
class ClassifierSpec:
    """Which classifier to build, with fixed and searchable hyperparameters."""

    kind: ClassifierKind
    hyperparameters: dict = field(default_factory=dict)
    search_space: Optional[dict] = None


def encode_labels(y) -> tuple[np.ndarray, np.ndarray]:
    """Map labels to integer codes; returns (codes, ordered classes)."""
    y = np.asarray(y)
    classes, codes = np.unique(y, return_inverse=True)
    return codes, classes


def validate_fit_inputs(estimator, X, y) -> tuple[np.ndarray, np.ndarray]:
    X, y = check_X_y(X, y, estimator=estimator, dtype=float)
    if len(np.unique(y)) < 2:
        raise ValueError("training set contains a single class")
    return X, y


def validate_predict_inputs(estimator, X, n_features: int) -> np.ndarray:
    check_is_fitted(estimator)
    X = check_array(X, dtype=float, ensure_min_samples=0)
    if X.shape[0] and X.shape[1] != n_features:
        raise ValueError(
            f"feature dimension mismatch: model was fit with {n_features} "
            f"features, got {X.shape[1]}"
        )
    return X


def make_classifier(spec: ClassifierSpec):
    """Instantiate the estimator named by a spec."""
    from .gbt import GradientBoostedTreesClassifier
    from .knn import KNearestNeighborsClassifier
    from .logistic import MultinomialLogisticRegression
    from .svm import LinearSvmClassifier

    registry = {
        ClassifierKind.LOGISTIC_REGRESSION: MultinomialLogisticRegression,
        ClassifierKind.SVM: LinearSvmClassifier,
        ClassifierKind.KNN: KNearestNeighborsClassifier,
        ClassifierKind.GBT: GradientBoostedTreesClassifier,
    }
    return registry[spec.kind](**spec.hyperparameters)


def train(spec: ClassifierSpec, features: Sequence[FeatureVector], labels: Sequence):
    """Fit the spec'd classifier on feature records and aligned coarse labels."""
    if len(features) != len(labels):
        raise ValueError(
            f"got {len(features)} feature vectors but {len(labels)} labels"
        )
    _, X = feature_matrix(features)
    model = make_classifier(spec)
    return model.fit(X, labels_to_codes(labels))


def predict(model, features: Sequence[FeatureVector]) -> list:
    """Predict one coarse label per feature record."""
    if not features:
        return []
    _, X = feature_matrix(features)
    return codes_to_labels(model.predict(X))


def labels_to_codes(labels: Sequence) -> np.ndarray:
    """Estimators sort class values, which enum members do not support."""
    from ..labels import CoarseLabel

    return np.asarray(
        [label.value if isinstance(label, CoarseLabel) else label for label in labels]
    )


def codes_to_labels(codes: Sequence) -> list:
    from ..labels import CoarseLabel

    out = []
    for code in codes:
        try:
            out.append(CoarseLabel(code))
        except ValueError:
            out.append(code)
    return out
