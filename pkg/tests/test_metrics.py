import random

import numpy as np
import pytest

from fblkit.labels import CoarseLabel, FunctionLabel
from fblkit.metrics import (
    confusion_matrix,
    consistency_score,
    macro_f1,
    majority_vote,
)

C = CoarseLabel.COMPLEMENTARY
S = CoarseLabel.SUBSTITUTE
U = CoarseLabel.UNRELATED


def test_majority_vote_five_of_seven():
    result = majority_vote([C, C, C, C, C, S, U])
    assert result.mode_label is C
    assert result.consistency == pytest.approx(5 / 7, abs=1e-12)
    assert not result.is_tie
    assert result.vote_counts == {C: 5, S: 1, U: 1}


def test_majority_vote_unanimous():
    result = majority_vote([FunctionLabel.A] * 7)
    assert result.mode_label is FunctionLabel.A
    assert result.consistency == 1.0
    assert not result.is_tie


def test_majority_vote_tie_breaks_by_flowchart_order():
    votes = [FunctionLabel.A] * 3 + [FunctionLabel.D] * 3 + [FunctionLabel.E]
    result = majority_vote(votes)
    assert result.mode_label is FunctionLabel.A
    assert result.is_tie


def test_majority_vote_tie_breaks_by_coarse_order():
    result = majority_vote([U, U, S, S])
    assert result.mode_label is S
    assert result.is_tie


def test_majority_vote_empty_is_an_error():
    with pytest.raises(ValueError):
        majority_vote([])


def test_majority_vote_is_permutation_invariant():
    rng = random.Random(13)
    pool = list(FunctionLabel)
    for _ in range(300):
        votes = [rng.choice(pool) for _ in range(rng.randint(1, 9))]
        reference = majority_vote(votes)
        shuffled = votes[:]
        rng.shuffle(shuffled)
        again = majority_vote(shuffled)
        assert again.mode_label is reference.mode_label
        assert again.consistency == reference.consistency
        assert again.is_tie == reference.is_tie


def test_consistency_bounds_and_unanimity_iff_one():
    rng = random.Random(29)
    pool = list(CoarseLabel)
    for _ in range(300):
        votes = [rng.choice(pool) for _ in range(rng.randint(1, 9))]
        result = majority_vote(votes)
        assert 1 / len(votes) <= result.consistency <= 1.0
        assert (result.consistency == 1.0) == (len(set(votes)) == 1)


def test_consistency_score_is_the_mean():
    a = majority_vote([C] * 7)
    b = majority_vote([C, C, C, C, C, S, U])
    assert consistency_score([a, b]) == pytest.approx(6 / 7, abs=1e-12)
    assert consistency_score([a]) == 1.0


def test_consistency_score_empty_is_an_error():
    with pytest.raises(ValueError):
        consistency_score([])


def test_macro_f1_perfect_agreement():
    gold = [S, C, U, S, C, U]
    assert macro_f1(gold, gold).macro == 1.0


def test_macro_f1_hand_computed_case():
    gold = [S, S, C, U]
    predicted = [S, C, C, U]
    result = macro_f1(predicted, gold)
    assert result.per_class_f1[S] == pytest.approx(2 / 3, abs=1e-12)
    assert result.per_class_f1[C] == pytest.approx(2 / 3, abs=1e-12)
    assert result.per_class_f1[U] == pytest.approx(1.0, abs=1e-12)
    assert result.macro == pytest.approx(7 / 9, abs=1e-12)


def test_macro_f1_length_mismatch():
    with pytest.raises(ValueError, match="length mismatch"):
        macro_f1([S], [S, C])


def test_macro_f1_permutation_invariance():
    rng = random.Random(31)
    pool = list(CoarseLabel)
    for _ in range(200):
        n = rng.randint(1, 30)
        gold = [rng.choice(pool) for _ in range(n)]
        predicted = [rng.choice(pool) for _ in range(n)]
        reference = macro_f1(predicted, gold).macro
        order = list(range(n))
        rng.shuffle(order)
        shuffled = macro_f1([predicted[i] for i in order], [gold[i] for i in order]).macro
        assert shuffled == pytest.approx(reference, abs=1e-12)


def test_macro_f1_zero_denominator_scores_zero():
    # S is predicted never and never correct: precision and recall both 0
    gold = [S, U]
    predicted = [U, U]
    result = macro_f1(predicted, gold)
    assert result.per_class_f1[S] == 0.0


def test_macro_f1_absent_class_is_skipped_from_macro():
    gold = [C, C, U]
    predicted = [C, C, U]
    result = macro_f1(predicted, gold)
    assert result.per_class_f1[S] == 1.0  # absent everywhere: nothing was wrong
    assert result.macro == pytest.approx(1.0)
    # and an imperfect two-class case averages over the two present classes
    result = macro_f1([C, U, U], [C, C, U])
    f1_c = result.per_class_f1[C]
    f1_u = result.per_class_f1[U]
    assert result.macro == pytest.approx((f1_c + f1_u) / 2, abs=1e-12)


def test_confusion_matrix_diagonal_on_agreement():
    gold = [FunctionLabel.A, FunctionLabel.D, FunctionLabel.A]
    matrix = confusion_matrix(gold, gold)
    assert matrix.counts.shape == (9, 9)
    assert matrix.counts.sum() == 3
    assert np.all(matrix.counts == np.diag(np.diag(matrix.counts)))


def test_confusion_matrix_single_cell_normalizes_to_100():
    matrix = confusion_matrix([FunctionLabel.D], [FunctionLabel.A])
    normalized = matrix.normalized()
    assert normalized.max() == 100.0
    gold_row = list(FunctionLabel).index(FunctionLabel.A)
    pred_col = list(FunctionLabel).index(FunctionLabel.D)
    assert normalized[gold_row, pred_col] == 100.0
    assert normalized.sum() == 100.0


def test_confusion_matrix_normalization_preserves_argmax():
    rng = random.Random(3)
    pool = list(FunctionLabel)
    gold = [rng.choice(pool) for _ in range(60)]
    predicted = [rng.choice(pool) for _ in range(60)]
    matrix = confusion_matrix(predicted, gold)
    assert np.argmax(matrix.counts) == np.argmax(matrix.normalized())


def test_confusion_matrix_length_mismatch():
    with pytest.raises(ValueError):
        confusion_matrix([FunctionLabel.A], [])


def test_confusion_matrix_all_zero_normalizes_to_zero():
    matrix = confusion_matrix([], [])
    assert matrix.normalized().sum() == 0.0
