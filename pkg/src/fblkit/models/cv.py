"""Double cross-validation: outer evaluation folds, inner tuning folds.

The outer layer is a plain shuffled 5-fold split scored on held-out
folds; hyperparameters are chosen per outer fold by random search over a
stratified 5-fold split of that fold's training portion, maximizing the
inner validation macro-F1. Outer test items never reach the inner search
or the refit, which the implementation asserts on every fold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..features import FeatureVector, feature_matrix
from ..metrics import macro_f1
from .base import ClassifierSpec, labels_to_codes, make_classifier
from .search import default_search_space, random_search


def kfold_indices(
    n: int, k: int, rng: np.random.Generator
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffled k-fold split of range(n) into (train, test) index arrays."""
    if k < 2 or k > n:
        raise ValueError(f"cannot split {n} examples into {k} folds")
    order = rng.permutation(n)
    folds = np.array_split(order, k)
    out = []
    for i in range(k):
        test = np.sort(folds[i])
        train = np.sort(np.concatenate([folds[j] for j in range(k) if j != i]))
        out.append((train, test))
    return out


def stratified_kfold_indices(
    y: Sequence, k: int, rng: np.random.Generator
) -> list[tuple[np.ndarray, np.ndarray]]:
    """k-fold split that spreads every class across folds within +/-1 item.

    Each class's members are shuffled and dealt round-robin to folds, so a
    fold's class count differs from any other fold's by at most one.
    """
    y = np.asarray(y)
    if k < 2:
        raise ValueError("need at least 2 folds")
    fold_members: list[list[int]] = [[] for _ in range(k)]
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        members = members[rng.permutation(len(members))]
        offset = int(rng.integers(k))
        for i, idx in enumerate(members):
            fold_members[(i + offset) % k].append(int(idx))
    out = []
    for i in range(k):
        test = np.sort(np.asarray(fold_members[i], dtype=int))
        train = np.sort(
            np.concatenate([np.asarray(fold_members[j], dtype=int) for j in range(k) if j != i])
        )
        out.append((train, test))
    return out


@dataclass
class FoldResult:
    fold_index: int
    valid_macro_f1: float
    test_macro_f1: float
    per_class_f1: dict
    chosen_params: dict
    test_ids: list[str]
    inner_ids: list[str]

    def to_dict(self) -> dict:
        return {
            "fold_index": self.fold_index,
            "valid_macro_f1": self.valid_macro_f1,
            "test_macro_f1": self.test_macro_f1,
            "per_class_f1": {str(k): v for k, v in self.per_class_f1.items()},
            "chosen_params": self.chosen_params,
            "test_ids": self.test_ids,
            "inner_ids": self.inner_ids,
        }


@dataclass
class CvReport:
    model_kind: str
    seed: int
    n_trials: int
    folds: list[FoldResult]
    valid_mean: float = 0.0
    valid_std: float = 0.0
    test_mean: float = 0.0
    test_std: float = 0.0
    per_class_mean: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.folds:
            valid = np.array([f.valid_macro_f1 for f in self.folds])
            test = np.array([f.test_macro_f1 for f in self.folds])
            self.valid_mean = float(valid.mean())
            self.valid_std = float(valid.std())
            self.test_mean = float(test.mean())
            self.test_std = float(test.std())
            classes = self.folds[0].per_class_f1.keys()
            self.per_class_mean = {
                str(c): float(np.mean([f.per_class_f1[c] for f in self.folds]))
                for c in classes
            }

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "seed": self.seed,
            "n_trials": self.n_trials,
            "valid_mean": self.valid_mean,
            "valid_std": self.valid_std,
            "test_mean": self.test_mean,
            "test_std": self.test_std,
            "per_class_mean": self.per_class_mean,
            "folds": [f.to_dict() for f in self.folds],
        }


def double_cross_validate(
    spec: ClassifierSpec,
    features: Sequence[FeatureVector],
    labels: Sequence,
    seed: int,
    n_trials: int = 50,
    n_outer: int = 5,
    n_inner: int = 5,
    min_class_count: Optional[int] = None,
) -> CvReport:
    """Nested evaluation of one classifier spec on labeled feature records.

    All randomness (outer shuffle, inner stratified shuffles, search
    draws) derives from the single ``seed``.
    """
    ids, X = feature_matrix(features)
    y = labels_to_codes(labels)
    if len(ids) != len(y):
        raise ValueError(f"got {len(ids)} feature vectors but {len(y)} labels")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate pair ids in the feature records")

    required = min_class_count if min_class_count is not None else n_inner
    classes, counts = np.unique(y, return_counts=True)
    thin = [f"{c}({n})" for c, n in zip(classes, counts) if n < required]
    if thin:
        raise ValueError(
            f"classes with fewer than {required} members make stratified "
            f"{n_inner}-fold tuning impossible: {', '.join(thin)}"
        )

    space = spec.search_space if spec.search_space is not None else default_search_space(spec.kind)
    class_list = tuple(classes)
    id_array = np.asarray(ids, dtype=object)

    root = np.random.SeedSequence(seed)
    outer_seq, *fold_seqs = root.spawn(1 + n_outer)
    outer_folds = kfold_indices(len(y), n_outer, np.random.default_rng(outer_seq))

    folds: list[FoldResult] = []
    for fold_index, (train_idx, test_idx) in enumerate(outer_folds):
        if np.intersect1d(train_idx, test_idx).size:
            raise AssertionError(f"fold {fold_index}: outer train/test indices overlap")
        inner_seq, search_seq = fold_seqs[fold_index].spawn(2)
        inner_folds = stratified_kfold_indices(
            y[train_idx], n_inner, np.random.default_rng(inner_seq)
        )

        def evaluate(params: dict) -> float:
            merged = {**spec.hyperparameters, **params}
            scores = []
            for inner_train, inner_val in inner_folds:
                model = make_classifier(
                    ClassifierSpec(kind=spec.kind, hyperparameters=merged)
                )
                rows = train_idx[inner_train]
                model.fit(X[rows], y[rows])
                predicted = model.predict(X[train_idx[inner_val]])
                scores.append(
                    macro_f1(list(predicted), list(y[train_idx[inner_val]]), classes=class_list).macro
                )
            return float(np.mean(scores))

        best_params, best_score, _ = random_search(
            space, evaluate, n_trials, np.random.default_rng(search_seq)
        )

        merged = {**spec.hyperparameters, **best_params}
        model = make_classifier(ClassifierSpec(kind=spec.kind, hyperparameters=merged))
        model.fit(X[train_idx], y[train_idx])
        predicted = model.predict(X[test_idx])
        result = macro_f1(list(predicted), list(y[test_idx]), classes=class_list)

        test_ids = set(id_array[test_idx])
        inner_ids = set(id_array[train_idx])
        if test_ids & inner_ids:
            raise AssertionError(
                f"fold {fold_index}: outer test ids leaked into the inner search"
            )

        folds.append(
            FoldResult(
                fold_index=fold_index,
                valid_macro_f1=best_score,
                test_macro_f1=result.macro,
                per_class_f1={str(k): v for k, v in result.per_class_f1.items()},
                chosen_params=best_params,
                test_ids=sorted(test_ids),
                inner_ids=sorted(inner_ids),
            )
        )

    return CvReport(
        model_kind=spec.kind.value, seed=seed, n_trials=n_trials, folds=folds
    )
