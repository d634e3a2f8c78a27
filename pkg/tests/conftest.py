"""Shared fixtures: toy catalogs, the released-style CSV, planted features."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest

from fblkit.datastore import Dataset, EmbeddingTable, import_released_csv
from fblkit.features import FeatureVector
from fblkit.items import Item, ItemPair, PairSource
from fblkit.labels import CoarseLabel

# Gold label counts that reproduce the released dataset's published
# distribution: 2,800 annotated pairs, 41 invalid, 134 contested, and
# 2,625 adopted labels whose shares over the 2,759 valid pairs land on
# A 14.9%, B/C 21.4%, D 48.0%, E 10.8% (and 4.8% contested) within a
# tenth of a percentage point.
RELEASED_GOLD_COUNTS = {
    "A": 411,
    "B-1": 99,
    "B-2": 98,
    "C-1": 98,
    "C-2": 99,
    "C-3": 98,
    "C-4": 98,
    "D": 1325,
    "E": 299,
}
RELEASED_CONTESTED = 134
RELEASED_INVALID = 41

_OTHER = {"A": "D", "B-1": "D", "B-2": "D", "C-1": "D", "C-2": "A",
          "C-3": "A", "C-4": "A", "D": "E", "E": "D"}
_CONTESTED_TRIPLES = [("A", "B-1", "D"), ("B-2", "C-1", "E"), ("C-2", "D", "E")]


def write_released_style_csv(path: Path) -> None:
    """Emit a CSV shaped like the public release of the annotation data."""
    rows = []
    index = 0

    def next_pair(labels: tuple[str, str, str]) -> None:
        nonlocal index
        rows.append(
            {
                "pair_id": f"p{index:04d}",
                "item_x_url": f"https://example.com/item/x{index:04d}",
                "item_y_url": f"https://example.com/item/y{index:04d}",
                "label_1": labels[0],
                "label_2": labels[1],
                "label_3": labels[2],
            }
        )
        index += 1

    for label, count in RELEASED_GOLD_COUNTS.items():
        for i in range(count):
            # alternate unanimity and two-of-three panels
            third = label if i % 2 == 0 else _OTHER[label]
            next_pair((label, label, third))
    for i in range(RELEASED_CONTESTED):
        next_pair(_CONTESTED_TRIPLES[i % len(_CONTESTED_TRIPLES)])
    for _ in range(RELEASED_INVALID):
        next_pair(("-", "-", "-"))

    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=["pair_id", "item_x_url", "item_y_url", "label_1", "label_2", "label_3"],
        )
        writer.writeheader()
        writer.writerows(rows)


@pytest.fixture(scope="session")
def released_csv(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("released") / "fbl_release.csv"
    write_released_style_csv(path)
    return path


@pytest.fixture(scope="session")
def released_dataset(released_csv, tmp_path_factory) -> Dataset:
    out_dir = tmp_path_factory.mktemp("released_store")
    return import_released_csv(released_csv, out_dir)


# ---------------------------------------------------------------------------
# Small catalog with embeddings, for feature and pipeline tests


def make_item(i: int, **overrides) -> Item:
    fields = {
        "id": f"item{i}",
        "title": f"title {i}",
        "description": f"description {i}",
        "specification": f"spec {i}",
        "major_category": "stationery" if i % 2 == 0 else "kitchen",
        "sub_category": f"sub{i % 3}",
        "maker": f"maker{i % 2}",
        "brand": f"brand{i % 2}",
        "url": f"https://example.com/item{i}",
    }
    fields.update(overrides)
    return Item(**fields)


@pytest.fixture
def toy_catalog():
    items = {f"item{i}": make_item(i) for i in range(6)}
    pairs = [
        ItemPair(
            pair_id=f"item{i}|item{i+1}",
            x=items[f"item{i}"],
            y=items[f"item{i+1}"],
            source=PairSource.DHONDT_SAMPLED,
        )
        for i in range(5)
    ]
    rng = np.random.default_rng(7)
    embeddings = {
        kind: EmbeddingTable(
            field_kind=kind,
            vectors={item_id: rng.normal(size=8) for item_id in items},
            dimension=8,
        )
        for kind in ("title", "description", "specification", "category")
    }
    return items, pairs, embeddings


# ---------------------------------------------------------------------------
# Planted-structure features for the classifier tests


def make_planted_features(
    n: int = 2625, seed: int = 0, noise: float = 0.55, dims: int = 12
) -> tuple[list[FeatureVector], list[CoarseLabel]]:
    """Synthetic pair features with a recoverable class structure.

    Class proportions roughly follow the adopted label distribution
    (unrelated heavy); each class gets its own mean direction so linear
    models separate them cleanly unless the labels are permuted.
    """
    rng = np.random.default_rng(seed)
    classes = [CoarseLabel.SUBSTITUTE, CoarseLabel.COMPLEMENTARY, CoarseLabel.UNRELATED]
    proportions = np.array([0.16, 0.22, 0.62])
    means = np.zeros((3, dims))
    means[0, 0] = 2.0
    means[1, 1] = 2.0
    means[2, 2] = 2.0

    counts = np.floor(proportions * n).astype(int)
    counts[-1] += n - counts.sum()
    features: list[FeatureVector] = []
    labels: list[CoarseLabel] = []
    idx = 0
    for c, count in enumerate(counts):
        for _ in range(count):
            values = means[c] + rng.normal(scale=noise, size=dims)
            features.append(FeatureVector(pair_id=f"s{idx:05d}", values=values))
            labels.append(classes[c])
            idx += 1
    order = rng.permutation(n)
    return [features[i] for i in order], [labels[i] for i in order]


@pytest.fixture
def planted_small():
    return make_planted_features(n=300, seed=11)
