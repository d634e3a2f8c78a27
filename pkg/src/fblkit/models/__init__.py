"""Three-class pair classifiers with an sklearn-compatible estimator API."""

from .base import ClassifierSpec, make_classifier, predict, train
from .cv import CvReport, double_cross_validate, kfold_indices, stratified_kfold_indices
from .gbt import GradientBoostedTreesClassifier
from .knn import KNearestNeighborsClassifier
from .logistic import MultinomialLogisticRegression
from .search import default_search_space, random_search, sample_params
from .svm import LinearSvmClassifier

__all__ = [
    "ClassifierSpec",
    "CvReport",
    "GradientBoostedTreesClassifier",
    "KNearestNeighborsClassifier",
    "LinearSvmClassifier",
    "MultinomialLogisticRegression",
    "default_search_space",
    "double_cross_validate",
    "kfold_indices",
    "make_classifier",
    "predict",
    "random_search",
    "sample_params",
    "stratified_kfold_indices",
    "train",
]
