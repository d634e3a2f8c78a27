"""Label taxonomy for function-based item-pair relationship annotation.

Two label systems coexist: the nine fine-grained function-based labels
(A, B-1, B-2, C-1..C-4, D, E) shown to annotators in a fixed flowchart
order, and the three coarse classes (substitute, complementary,
unrelated) used by classifiers and coarse evaluation.
"""

from __future__ import annotations

import enum


class FunctionLabel(enum.Enum):
    """One of the nine function-based relationship labels.

    Declaration order is the flowchart order annotators walk through:
    clearer relationships come first.
    """

    A = "A"
    B1 = "B-1"
    B2 = "B-2"
    C1 = "C-1"
    C2 = "C-2"
    C3 = "C-3"
    C4 = "C-4"
    D = "D"
    E = "E"

    @property
    def flowchart_index(self) -> int:
        return _FLOWCHART_INDEX[self]

    @classmethod
    def parse(cls, text: str) -> "FunctionLabel":
        """Parse a label code, tolerating the hyphen-free spelling (``B1``)."""
        code = text.strip().upper().replace("-", "").replace(" ", "")
        try:
            return cls[code]
        except KeyError:
            raise ValueError(f"not a function label code: {text!r}") from None


class CoarseLabel(enum.Enum):
    """Three-way relationship class. Declaration order breaks vote ties."""

    SUBSTITUTE = "substitute"
    COMPLEMENTARY = "complementary"
    UNRELATED = "unrelated"

    @classmethod
    def parse(cls, text: str) -> "CoarseLabel":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"not a coarse label: {text!r}") from None


_FLOWCHART_INDEX = {label: i for i, label in enumerate(FunctionLabel)}

COARSE_ORDER_INDEX = {label: i for i, label in enumerate(CoarseLabel)}

# A is the substitution relationship; every B-* and C-* is complementary;
# D is unrelated and E (verbalization too hard) is consolidated into
# unrelated for all coarse evaluation.
_TO_COARSE = {
    FunctionLabel.A: CoarseLabel.SUBSTITUTE,
    FunctionLabel.B1: CoarseLabel.COMPLEMENTARY,
    FunctionLabel.B2: CoarseLabel.COMPLEMENTARY,
    FunctionLabel.C1: CoarseLabel.COMPLEMENTARY,
    FunctionLabel.C2: CoarseLabel.COMPLEMENTARY,
    FunctionLabel.C3: CoarseLabel.COMPLEMENTARY,
    FunctionLabel.C4: CoarseLabel.COMPLEMENTARY,
    FunctionLabel.D: CoarseLabel.UNRELATED,
    FunctionLabel.E: CoarseLabel.UNRELATED,
}

# B-1/B-2 and C-2/C-3 describe the same relationship read in the two
# directions; the rest are symmetric in x and y.
_REVERSE = {
    FunctionLabel.B1: FunctionLabel.B2,
    FunctionLabel.B2: FunctionLabel.B1,
    FunctionLabel.C2: FunctionLabel.C3,
    FunctionLabel.C3: FunctionLabel.C2,
}

#: Definition text per label, phrased for a pair (x, y). Used verbatim in
#: judge prompts and mirrored by the annotation UI's flowchart questions.
LABEL_DEFINITIONS: dict[FunctionLabel, str] = {
    FunctionLabel.A: "Items x and y have the same function and usage.",
    FunctionLabel.B1: "Item x can be replenished with item y.",
    FunctionLabel.B2: "Item y can be replenished with item x.",
    FunctionLabel.C1: "Items x and y must be combined to be usable.",
    FunctionLabel.C2: "When combined with item y, item x becomes more useful.",
    FunctionLabel.C3: "When combined with item x, item y becomes more useful.",
    FunctionLabel.C4: "Combining x and y makes them more useful.",
    FunctionLabel.D: "Items x and y have no relationship.",
    FunctionLabel.E: (
        "Items x and y seem to have a relationship, "
        "but it is difficult to verbalize."
    ),
}

COARSE_DEFINITIONS: dict[CoarseLabel, str] = {
    CoarseLabel.SUBSTITUTE: "The two items have the same function and usage.",
    CoarseLabel.COMPLEMENTARY: (
        "The two items are used together: one replenishes the other, "
        "they only work when combined, or combining them makes them "
        "more useful."
    ),
    CoarseLabel.UNRELATED: "The two items are neither substitutes nor complementary.",
}


def map_to_coarse(label: FunctionLabel) -> CoarseLabel:
    """Consolidate a nine-way label into its three-way class.

    Total: A maps to substitute, B-*/C-* to complementary, D and E to
    unrelated.
    """
    return _TO_COARSE[label]


def reverse_label(label: FunctionLabel) -> FunctionLabel:
    """Return the label describing the same pair stored in swapped order.

    Swaps B-1 with B-2 and C-2 with C-3; all other labels are fixed
    points. Involution by construction.
    """
    return _REVERSE.get(label, label)
