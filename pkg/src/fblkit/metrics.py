"""Vote reduction and agreement metrics.

Covers majority voting with its consistency score, per-class and macro
F1 over the coarse classes, and count/normalized confusion matrices.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from .labels import COARSE_ORDER_INDEX, CoarseLabel, FunctionLabel


@dataclass(frozen=True)
class VoteResult:
    """Outcome of reducing one pair's vote list.

    ``consistency`` is the fraction of votes equal to the mode;
    ``is_tie`` is set when two or more labels share the maximum count,
    in which case ``mode_label`` is the tied label earliest in flowchart
    order (nine-class) or coarse order (three-class).
    """

    mode_label: Hashable
    vote_counts: Mapping[Hashable, int]
    is_tie: bool
    consistency: float


def _order_key(label: Hashable):
    if isinstance(label, FunctionLabel):
        return label.flowchart_index
    if isinstance(label, CoarseLabel):
        return COARSE_ORDER_INDEX[label]
    return str(label)


def majority_vote(labels: Sequence[Hashable]) -> VoteResult:
    """Reduce a non-empty vote list to its most frequent label.

    Ties break toward the label earliest in flowchart order (A..E) or
    coarse order (substitute, complementary, unrelated), with ``is_tie``
    recorded so downstream reports can flag the decision.
    """
    if not labels:
        raise ValueError("cannot take a majority vote over an empty label list")
    counts = Counter(labels)
    top_count = max(counts.values())
    tied = [label for label, n in counts.items() if n == top_count]
    mode = min(tied, key=_order_key)
    return VoteResult(
        mode_label=mode,
        vote_counts=dict(counts),
        is_tie=len(tied) > 1,
        consistency=top_count / len(labels),
    )


def consistency_score(vote_results: Sequence[VoteResult]) -> float:
    """Arithmetic mean of per-pair consistency over a non-empty run."""
    if not vote_results:
        raise ValueError("consistency score over an empty vote list is undefined")
    return sum(v.consistency for v in vote_results) / len(vote_results)


@dataclass(frozen=True)
class MacroF1Result:
    per_class_f1: dict
    macro: float


def macro_f1(
    predicted: Sequence[Hashable],
    gold: Sequence[Hashable],
    classes: Sequence[Hashable] = tuple(CoarseLabel),
) -> MacroF1Result:
    """Per-class F1 and its unweighted mean over ``classes``.

    Conventions for degenerate toy inputs: a class with precision +
    recall = 0 scores F1 = 0; a class absent from both gold and
    predicted reports F1 = 1 but is skipped from the macro average.
    """
    if len(predicted) != len(gold):
        raise ValueError(
            f"length mismatch: {len(predicted)} predictions vs {len(gold)} gold labels"
        )
    per_class: dict = {}
    contributing: list[float] = []
    for cls in classes:
        tp = sum(1 for p, g in zip(predicted, gold) if p == cls and g == cls)
        pred_n = sum(1 for p in predicted if p == cls)
        gold_n = sum(1 for g in gold if g == cls)
        if pred_n == 0 and gold_n == 0:
            per_class[cls] = 1.0
            continue
        precision = tp / pred_n if pred_n else 0.0
        recall = tp / gold_n if gold_n else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = f1
        contributing.append(f1)
    if not contributing:
        raise ValueError("no class present in either predicted or gold labels")
    return MacroF1Result(per_class_f1=per_class, macro=sum(contributing) / len(contributing))


@dataclass(frozen=True)
class ConfusionMatrix:
    """Count matrix with gold labels on rows and predictions on columns."""

    labels: tuple
    counts: np.ndarray

    def normalized(self, max_value: float = 100.0) -> np.ndarray:
        """Scale all cells so the largest equals ``max_value``.

        Positive scaling preserves cell ordering; an all-zero matrix
        stays zero.
        """
        peak = self.counts.max()
        if peak == 0:
            return np.zeros_like(self.counts, dtype=float)
        return self.counts.astype(float) * (max_value / peak)


def confusion_matrix(
    predicted: Sequence[Hashable],
    gold: Sequence[Hashable],
    labels: Sequence[Hashable] = tuple(FunctionLabel),
) -> ConfusionMatrix:
    if len(predicted) != len(gold):
        raise ValueError(
            f"length mismatch: {len(predicted)} predictions vs {len(gold)} gold labels"
        )
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=int)
    for p, g in zip(predicted, gold):
        counts[index[g], index[p]] += 1
    return ConfusionMatrix(labels=tuple(labels), counts=counts)
