"""Fixed-layout numeric features for an item pair.

The vector for pair i is ``[similarities | match flags | category match]``:
four cosine similarities between the items' title, description,
specification, and category embeddings; four 0/1 flags for matching
major category, subcategory, maker, and brand; then one slot per known
major category and one per known subcategory, set to 1 exactly when both
items carry that category element. With the original taxonomy the total
is 424 dimensions (4 + 4 + 416 category slots).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .datastore import (
    EmbeddingTable,
    SchemaError,
    read_jsonl,
    write_jsonl_atomic,
    write_text_atomic,
)
from .items import Item, ItemPair

SIM_FIELDS = ("title", "description", "specification", "category")
FLAG_FIELDS = ("major_category_match", "sub_category_match", "maker_match", "brand_match")

#: Reserved vocabulary slot for categories unseen at layout-build time.
#: It never fires a match, even when both items are out of vocabulary,
#: so the dimension stays stable for unseen data.
OOV_SLOT = "__oov__"


class MissingEmbeddingError(KeyError):
    def __init__(self, item_id: str, field_kind: str):
        super().__init__(f"no {field_kind} embedding for item {item_id!r}")
        self.item_id = item_id
        self.field_kind = field_kind


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine of the angle between two equal-length non-zero vectors."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("undefined similarity: zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


@dataclass(frozen=True)
class FeatureLayout:
    """Block boundaries and category vocabularies of the feature vector.

    Vocabularies are sorted and duplicate-free, each ending with the
    reserved out-of-vocabulary slot.
    """

    major_vocab: tuple[str, ...]
    sub_vocab: tuple[str, ...]

    def __post_init__(self) -> None:
        for name, vocab in (("major", self.major_vocab), ("sub", self.sub_vocab)):
            if len(set(vocab)) != len(vocab):
                raise ValueError(f"{name} vocabulary contains duplicates")

    @property
    def total_dimension(self) -> int:
        return len(SIM_FIELDS) + len(FLAG_FIELDS) + len(self.major_vocab) + len(self.sub_vocab)

    @property
    def major_offset(self) -> int:
        return len(SIM_FIELDS) + len(FLAG_FIELDS)

    @property
    def sub_offset(self) -> int:
        return self.major_offset + len(self.major_vocab)

    def major_slot(self, category: str) -> int:
        return self._major_index.get(category, self._major_index[OOV_SLOT])

    def sub_slot(self, category: str) -> int:
        return self._sub_index.get(category, self._sub_index[OOV_SLOT])

    @property
    def _major_index(self) -> dict[str, int]:
        index = self.__dict__.get("_major_index_cache")
        if index is None:
            index = {c: i for i, c in enumerate(self.major_vocab)}
            object.__setattr__(self, "_major_index_cache", index)
        return index

    @property
    def _sub_index(self) -> dict[str, int]:
        index = self.__dict__.get("_sub_index_cache")
        if index is None:
            index = {c: i for i, c in enumerate(self.sub_vocab)}
            object.__setattr__(self, "_sub_index_cache", index)
        return index

    @classmethod
    def from_items(cls, items: Iterable[Item]) -> "FeatureLayout":
        majors = sorted({i.major_category for i in items if i.major_category})
        subs = sorted({i.sub_category for i in items if i.sub_category})
        return cls(
            major_vocab=tuple(majors) + (OOV_SLOT,),
            sub_vocab=tuple(subs) + (OOV_SLOT,),
        )

    def to_dict(self) -> dict:
        return {
            "sim_fields": list(SIM_FIELDS),
            "flag_fields": list(FLAG_FIELDS),
            "major_vocab": list(self.major_vocab),
            "sub_vocab": list(self.sub_vocab),
            "total_dimension": self.total_dimension,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FeatureLayout":
        layout = cls(
            major_vocab=tuple(obj["major_vocab"]),
            sub_vocab=tuple(obj["sub_vocab"]),
        )
        declared = obj.get("total_dimension")
        if declared is not None and declared != layout.total_dimension:
            raise SchemaError(
                f"layout declares {declared} dimensions but blocks sum to "
                f"{layout.total_dimension}"
            )
        return layout


@dataclass(frozen=True)
class FeatureVector:
    pair_id: str
    values: np.ndarray


def build_feature_vector(
    pair: ItemPair,
    embeddings: Mapping[str, EmbeddingTable],
    layout: FeatureLayout,
) -> FeatureVector:
    """Assemble the [sims | flags | major one-hot | sub one-hot] vector.

    Symmetric in the pair's two items even though pairs are ordered; a
    category slot fires only when both items share that category element.
    """
    values = np.zeros(layout.total_dimension)
    x, y = pair.x, pair.y

    for i, kind in enumerate(SIM_FIELDS):
        table = embeddings[kind]
        for item in (x, y):
            if item.id not in table.vectors:
                raise MissingEmbeddingError(item.id, kind)
        values[i] = cosine_similarity(table.vectors[x.id], table.vectors[y.id])

    base = len(SIM_FIELDS)
    values[base + 0] = float(bool(x.major_category) and x.major_category == y.major_category)
    values[base + 1] = float(bool(x.sub_category) and x.sub_category == y.sub_category)
    values[base + 2] = float(bool(x.maker) and x.maker == y.maker)
    values[base + 3] = float(bool(x.brand) and x.brand == y.brand)

    if x.major_category == y.major_category:
        slot = layout.major_slot(x.major_category)
        if layout.major_vocab[slot] != OOV_SLOT:
            values[layout.major_offset + slot] = 1.0
    if x.sub_category == y.sub_category:
        slot = layout.sub_slot(x.sub_category)
        if layout.sub_vocab[slot] != OOV_SLOT:
            values[layout.sub_offset + slot] = 1.0

    return FeatureVector(pair_id=pair.pair_id, values=values)


class PairFeaturizer(BaseEstimator, TransformerMixin):
    """Transformer from item pairs to the fixed-layout feature matrix.

    ``fit`` learns the category vocabularies from the catalog items;
    ``transform`` maps a sequence of pairs to an (n_pairs, total_dimension)
    array. The embeddings tables are constructor state, not fitted state,
    because they come from an external provider.
    """

    def __init__(self, embeddings: Optional[Mapping[str, EmbeddingTable]] = None):
        self.embeddings = embeddings

    def fit(self, items: Iterable[Item], y=None) -> "PairFeaturizer":
        self.layout_ = FeatureLayout.from_items(items)
        return self

    def transform(self, pairs: Sequence[ItemPair]) -> np.ndarray:
        if not hasattr(self, "layout_"):
            raise RuntimeError("PairFeaturizer is not fitted; call fit(items) first")
        if self.embeddings is None:
            raise RuntimeError("PairFeaturizer needs embedding tables to transform")
        rows = [build_feature_vector(p, self.embeddings, self.layout_) for p in pairs]
        if not rows:
            return np.empty((0, self.layout_.total_dimension))
        return np.stack([r.values for r in rows])

    def transform_records(self, pairs: Sequence[ItemPair]) -> list[FeatureVector]:
        matrix = self.transform(pairs)
        return [
            FeatureVector(pair_id=p.pair_id, values=row) for p, row in zip(pairs, matrix)
        ]


# ---------------------------------------------------------------------------
# features.jsonl + layout.json sidecar


def save_features(
    vectors: Sequence[FeatureVector],
    layout: FeatureLayout,
    features_path: str | Path,
    provenance: Optional[dict] = None,
) -> None:
    features_path = Path(features_path)
    write_jsonl_atomic(
        features_path,
        ({"pair_id": v.pair_id, "values": [float(x) for x in v.values]} for v in vectors),
    )
    sidecar = dict(layout.to_dict())
    if provenance:
        sidecar["provenance"] = provenance
    layout_path = features_path.with_name("layout.json")
    write_text_atomic(layout_path, json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def load_features(
    features_path: str | Path,
) -> tuple[list[FeatureVector], FeatureLayout]:
    features_path = Path(features_path)
    layout_path = features_path.with_name("layout.json")
    layout = FeatureLayout.from_dict(json.loads(layout_path.read_text()))
    vectors = []
    for line_no, obj in read_jsonl(features_path):
        values = np.asarray(obj["values"], dtype=float)
        if values.shape != (layout.total_dimension,):
            raise SchemaError(
                f"{features_path}:{line_no}: vector has {values.shape[0]} values, "
                f"layout expects {layout.total_dimension}"
            )
        vectors.append(FeatureVector(pair_id=obj["pair_id"], values=values))
    return vectors, layout


def feature_matrix(vectors: Sequence[FeatureVector]) -> tuple[list[str], np.ndarray]:
    """Split feature records into aligned (pair_ids, matrix)."""
    ids = [v.pair_id for v in vectors]
    if not vectors:
        return ids, np.empty((0, 0))
    return ids, np.stack([v.values for v in vectors])
