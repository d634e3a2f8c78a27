"""Seedable uniform random search over hyperparameter spaces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .base import ClassifierKind


@dataclass(frozen=True)
class LogUniform:
    low: float
    high: float

    def sample(self, rng: np.random.Generator) -> float:
        return float(np.exp(rng.uniform(np.log(self.low), np.log(self.high))))


@dataclass(frozen=True)
class IntRange:
    low: int
    high: int  # inclusive

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.low, self.high + 1))


@dataclass(frozen=True)
class Choice:
    values: tuple

    def sample(self, rng: np.random.Generator):
        return self.values[int(rng.integers(len(self.values)))]


Distribution = Union[LogUniform, IntRange, Choice]


def default_search_space(kind: ClassifierKind) -> dict[str, Distribution]:
    if kind in (ClassifierKind.LOGISTIC_REGRESSION, ClassifierKind.SVM):
        return {"reg_lambda": LogUniform(1e-4, 1e2)}
    if kind is ClassifierKind.KNN:
        return {"n_neighbors": Choice(tuple(range(1, 52, 2)))}
    if kind is ClassifierKind.GBT:
        return {
            "n_estimators": IntRange(50, 500),
            "max_depth": IntRange(2, 6),
            "learning_rate": LogUniform(0.01, 0.3),
        }
    raise ValueError(f"no default search space for {kind}")


def sample_params(
    space: Mapping[str, Distribution], rng: np.random.Generator
) -> dict:
    # sorted for a stable draw order regardless of dict construction
    return {name: space[name].sample(rng) for name in sorted(space)}


@dataclass
class TrialResult:
    params: dict
    score: float


def random_search(
    space: Mapping[str, Distribution],
    evaluate,
    n_trials: int,
    rng: np.random.Generator,
) -> tuple[dict, float, list[TrialResult]]:
    """Draw ``n_trials`` configurations and keep the best-scoring one.

    ``evaluate(params) -> float`` returns the objective (higher is
    better); configurations it rejects with ValueError score -inf.
    The first trial attaining the maximum wins, so results are
    reproducible for a fixed generator.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    trials: list[TrialResult] = []
    best_params: dict = {}
    best_score = -np.inf
    last_error: Exception | None = None
    for _ in range(n_trials):
        params = sample_params(space, rng)
        try:
            score = float(evaluate(params))
        except ValueError as exc:
            score = -np.inf
            last_error = exc
        trials.append(TrialResult(params=params, score=score))
        if score > best_score:
            best_score = score
            best_params = params
    if not np.isfinite(best_score):
        raise ValueError(
            f"every search trial failed to evaluate (last error: {last_error}); "
            "raise the trial budget or narrow the search space"
        )
    return best_params, best_score, trials
