"""Catalog items, ordered item pairs, and annotation records.

All types are frozen dataclasses: values are immutable and safe to share
across threads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional, Union

from .labels import CoarseLabel, FunctionLabel, reverse_label


@dataclass(frozen=True)
class Item:
    """One catalog product with its textual fields and taxonomy placement."""

    id: str
    title: str = ""
    description: str = ""
    specification: str = ""
    major_category: str = ""
    sub_category: str = ""
    maker: str = ""
    brand: str = ""
    url: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("item id must be non-empty")


class PairSource(enum.Enum):
    DHONDT_SAMPLED = "dhondt_sampled"
    PRACTITIONER_SEED = "practitioner_seed"


@dataclass(frozen=True)
class ItemPair:
    """An ordered pair (x, y) of distinct items.

    Order matters: labels B-1/B-2 and C-2/C-3 are directional, so
    swapping x and y yields a distinct pair value. ``invalid`` marks
    pairs excluded from the valid set (responses that did not fit any
    label definition).
    """

    pair_id: str
    x: Item
    y: Item
    source: PairSource = PairSource.DHONDT_SAMPLED
    invalid: bool = False

    def __post_init__(self) -> None:
        if not self.pair_id:
            raise ValueError("pair_id must be non-empty")
        if self.x.id == self.y.id:
            raise ValueError(f"pair {self.pair_id!r} must reference two distinct items")

    def swapped(self) -> "ItemPair":
        """The same two items in the opposite order, as a new pair value."""
        return ItemPair(
            pair_id=make_pair_id(self.y.id, self.x.id),
            x=self.y,
            y=self.x,
            source=self.source,
            invalid=self.invalid,
        )


def make_pair_id(x_id: str, y_id: str) -> str:
    return f"{x_id}|{y_id}"


def canonicalize_pair(
    pair: ItemPair, label: Optional[FunctionLabel] = None
) -> tuple[ItemPair, Optional[FunctionLabel]]:
    """Reorder a pair lexicographically by item id for deduplication.

    If the items get swapped, a directional label is reversed to keep
    describing the same relationship. Never applied implicitly anywhere
    in the pipeline; callers opt in.
    """
    if pair.x.id <= pair.y.id:
        return pair, label
    return pair.swapped(), reverse_label(label) if label is not None else None


class Scheme(enum.Enum):
    """Label system an annotation was collected under."""

    NINE_CLASS = "nine_class"
    THREE_CLASS = "three_class"


AnyLabel = Union[FunctionLabel, CoarseLabel]

_SCHEME_LABEL_TYPE = {
    Scheme.NINE_CLASS: FunctionLabel,
    Scheme.THREE_CLASS: CoarseLabel,
}


@dataclass(frozen=True)
class AnnotationRecord:
    """One labeling act on a pair, by a human or by one LLM sample.

    ``annotator`` is a human id, or ``"<model_id>#<sample_index>"``
    for LLM samples. ``raw_response`` keeps the unparsed model output.
    """

    pair_id: str
    annotator: str
    scheme: Scheme
    label: AnyLabel
    timestamp: datetime = field(default_factory=datetime.utcnow)
    raw_response: Optional[str] = None

    def __post_init__(self) -> None:
        expected = _SCHEME_LABEL_TYPE[self.scheme]
        if not isinstance(self.label, expected):
            raise TypeError(
                f"scheme {self.scheme.value} requires a {expected.__name__}, "
                f"got {type(self.label).__name__}"
            )
