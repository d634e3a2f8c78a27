"""Load, save, and aggregate the annotation dataset.

Storage is a directory of line-oriented JSON files with fixed names:

- ``items.jsonl`` — one catalog item per line
- ``pairs.jsonl`` — one ordered pair per line, referencing item ids
- ``annotations.jsonl`` — one labeling act per line
- ``gold.jsonl`` — adopted pair_id -> label entries
- ``embeddings.<kind>.jsonl`` — header line with field kind, dimension and
  provider provenance, then one ``{item_id, vector}`` object per line,
  for kind in {title, description, specification, category}

Also hosts the adoption pipeline (majority vote with quorum), dataset
statistics, and the import adapter for the released annotation CSV.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .items import AnnotationRecord, Item, ItemPair, PairSource, Scheme, make_pair_id
from .labels import CoarseLabel, FunctionLabel, map_to_coarse

EMBEDDING_KINDS = ("title", "description", "specification", "category")

ITEMS_FILE = "items.jsonl"
PAIRS_FILE = "pairs.jsonl"
ANNOTATIONS_FILE = "annotations.jsonl"
GOLD_FILE = "gold.jsonl"


class SchemaError(ValueError):
    """A stored file violates the datastore schema."""


class IntegrityError(ValueError):
    """A stored file references an id that does not exist."""


# ---------------------------------------------------------------------------
# JSONL plumbing


def write_text_atomic(path: str | Path, text: str) -> None:
    """Write a whole file via a temp file + rename, fsynced."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jsonl_atomic(path: str | Path, rows: Iterable[dict]) -> None:
    """Write rows as JSON lines via a temp file + rename, fsynced."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
                fh.write("\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, object) for each non-blank line."""
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{line_no}: invalid JSON: {exc}") from exc


def _require(obj: dict, fields: Sequence[str], path: Path, line_no: int) -> None:
    for name in fields:
        if name not in obj:
            raise SchemaError(f"{path}:{line_no}: missing field {name!r}")


# ---------------------------------------------------------------------------
# Record (de)serialization


def item_to_dict(item: Item) -> dict:
    return {
        "id": item.id,
        "title": item.title,
        "description": item.description,
        "specification": item.specification,
        "major_category": item.major_category,
        "sub_category": item.sub_category,
        "maker": item.maker,
        "brand": item.brand,
        "url": item.url,
    }


def item_from_dict(obj: dict) -> Item:
    return Item(
        id=obj["id"],
        title=obj.get("title", ""),
        description=obj.get("description", ""),
        specification=obj.get("specification", ""),
        major_category=obj.get("major_category", ""),
        sub_category=obj.get("sub_category", ""),
        maker=obj.get("maker", ""),
        brand=obj.get("brand", ""),
        url=obj.get("url"),
    )


def pair_to_dict(pair: ItemPair) -> dict:
    return {
        "pair_id": pair.pair_id,
        "x_id": pair.x.id,
        "y_id": pair.y.id,
        "source": pair.source.value,
        "invalid": pair.invalid,
    }


def annotation_to_dict(record: AnnotationRecord) -> dict:
    return {
        "pair_id": record.pair_id,
        "annotator": record.annotator,
        "scheme": record.scheme.value,
        "label": record.label.value,
        "timestamp": record.timestamp.isoformat(),
        "raw_response": record.raw_response,
    }


def annotation_from_dict(obj: dict) -> AnnotationRecord:
    scheme = Scheme(obj["scheme"])
    if scheme is Scheme.NINE_CLASS:
        label = FunctionLabel.parse(obj["label"])
    else:
        label = CoarseLabel.parse(obj["label"])
    return AnnotationRecord(
        pair_id=obj["pair_id"],
        annotator=obj["annotator"],
        scheme=scheme,
        label=label,
        timestamp=datetime.fromisoformat(obj["timestamp"]),
        raw_response=obj.get("raw_response"),
    )


# ---------------------------------------------------------------------------
# Dataset


@dataclass
class Dataset:
    """An immutable-by-convention snapshot of one annotation project."""

    items: dict[str, Item] = field(default_factory=dict)
    pairs: list[ItemPair] = field(default_factory=list)
    annotations: list[AnnotationRecord] = field(default_factory=list)
    gold: dict[str, FunctionLabel] = field(default_factory=dict)

    def pair_by_id(self, pair_id: str) -> ItemPair:
        try:
            return self._pair_index[pair_id]
        except AttributeError:
            self._pair_index = {p.pair_id: p for p in self.pairs}
            return self._pair_index[pair_id]

    def valid_pairs(self) -> list[ItemPair]:
        return [p for p in self.pairs if not p.invalid]

    def validate(self) -> None:
        """Check referential integrity and uniqueness."""
        ids = set()
        for pair in self.pairs:
            if pair.pair_id in ids:
                raise IntegrityError(f"duplicate pair_id {pair.pair_id!r}")
            ids.add(pair.pair_id)
            for item in (pair.x, pair.y):
                if item.id not in self.items:
                    raise IntegrityError(
                        f"pair {pair.pair_id!r} references unknown item {item.id!r}"
                    )
        for record in self.annotations:
            if record.pair_id not in ids:
                raise IntegrityError(
                    f"annotation by {record.annotator!r} references unknown pair "
                    f"{record.pair_id!r}"
                )
        for pair_id in self.gold:
            if pair_id not in ids:
                raise IntegrityError(f"gold entry references unknown pair {pair_id!r}")


def save_dataset(dataset: Dataset, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_jsonl_atomic(
        directory / ITEMS_FILE,
        (item_to_dict(item) for item in dataset.items.values()),
    )
    write_jsonl_atomic(directory / PAIRS_FILE, (pair_to_dict(p) for p in dataset.pairs))
    write_jsonl_atomic(
        directory / ANNOTATIONS_FILE,
        (annotation_to_dict(a) for a in dataset.annotations),
    )
    write_jsonl_atomic(
        directory / GOLD_FILE,
        ({"pair_id": pid, "label": label.value} for pid, label in dataset.gold.items()),
    )


def load_dataset(directory: str | Path) -> Dataset:
    """Load a dataset directory, enforcing schema and referential integrity."""
    directory = Path(directory)
    items_path = directory / ITEMS_FILE
    if not items_path.exists():
        raise FileNotFoundError(f"no dataset at {directory}: {items_path} missing")

    items: dict[str, Item] = {}
    for line_no, obj in read_jsonl(items_path):
        _require(obj, ["id"], items_path, line_no)
        item = item_from_dict(obj)
        if item.id in items:
            raise SchemaError(f"{items_path}:{line_no}: duplicate item id {item.id!r}")
        items[item.id] = item

    pairs: list[ItemPair] = []
    pairs_path = directory / PAIRS_FILE
    if pairs_path.exists():
        for line_no, obj in read_jsonl(pairs_path):
            _require(obj, ["pair_id", "x_id", "y_id"], pairs_path, line_no)
            for key in ("x_id", "y_id"):
                if obj[key] not in items:
                    raise IntegrityError(
                        f"{pairs_path}:{line_no}: pair {obj['pair_id']!r} references "
                        f"unknown item {obj[key]!r}"
                    )
            pairs.append(
                ItemPair(
                    pair_id=obj["pair_id"],
                    x=items[obj["x_id"]],
                    y=items[obj["y_id"]],
                    source=PairSource(obj.get("source", "dhondt_sampled")),
                    invalid=bool(obj.get("invalid", False)),
                )
            )

    annotations: list[AnnotationRecord] = []
    ann_path = directory / ANNOTATIONS_FILE
    if ann_path.exists():
        for line_no, obj in read_jsonl(ann_path):
            _require(
                obj, ["pair_id", "annotator", "scheme", "label", "timestamp"], ann_path, line_no
            )
            annotations.append(annotation_from_dict(obj))

    gold: dict[str, FunctionLabel] = {}
    gold_path = directory / GOLD_FILE
    if gold_path.exists():
        for line_no, obj in read_jsonl(gold_path):
            _require(obj, ["pair_id", "label"], gold_path, line_no)
            gold[obj["pair_id"]] = FunctionLabel.parse(obj["label"])

    dataset = Dataset(items=items, pairs=pairs, annotations=annotations, gold=gold)
    dataset.validate()
    return dataset


# ---------------------------------------------------------------------------
# Embeddings


@dataclass
class EmbeddingTable:
    """Dense vectors for one textual field of every item."""

    field_kind: str
    vectors: dict[str, np.ndarray]
    dimension: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.field_kind not in EMBEDDING_KINDS:
            raise ValueError(f"unknown embedding field kind {self.field_kind!r}")
        for item_id, vec in self.vectors.items():
            if vec.shape != (self.dimension,):
                raise ValueError(
                    f"embedding for {item_id!r} has shape {vec.shape}, "
                    f"expected ({self.dimension},)"
                )
            if not np.any(vec):
                raise ValueError(f"embedding for {item_id!r} is all-zero")


def embedding_path(directory: str | Path, kind: str) -> Path:
    return Path(directory) / f"embeddings.{kind}.jsonl"


def save_embeddings(table: EmbeddingTable, directory: str | Path) -> None:
    header = {
        "field_kind": table.field_kind,
        "dimension": table.dimension,
        "provenance": table.provenance,
    }
    rows = (
        {"item_id": item_id, "vector": [float(v) for v in vec]}
        for item_id, vec in table.vectors.items()
    )

    def stream():
        yield header
        yield from rows

    write_jsonl_atomic(embedding_path(directory, table.field_kind), stream())


def load_embeddings(directory: str | Path, kind: str) -> EmbeddingTable:
    path = embedding_path(directory, kind)
    lines = read_jsonl(path)
    try:
        line_no, header = next(lines)
    except StopIteration:
        raise SchemaError(f"{path}: empty embeddings file") from None
    _require(header, ["field_kind", "dimension"], path, line_no)
    if header["field_kind"] != kind:
        raise SchemaError(
            f"{path}: header says field_kind {header['field_kind']!r}, expected {kind!r}"
        )
    vectors: dict[str, np.ndarray] = {}
    for line_no, obj in lines:
        _require(obj, ["item_id", "vector"], path, line_no)
        vectors[obj["item_id"]] = np.asarray(obj["vector"], dtype=float)
    return EmbeddingTable(
        field_kind=kind,
        vectors=vectors,
        dimension=int(header["dimension"]),
        provenance=header.get("provenance", {}),
    )


def load_all_embeddings(directory: str | Path) -> dict[str, EmbeddingTable]:
    tables = {}
    for kind in EMBEDDING_KINDS:
        if not embedding_path(directory, kind).exists():
            raise FileNotFoundError(
                f"missing embeddings file for field kind {kind!r} in {directory}"
            )
        tables[kind] = load_embeddings(directory, kind)
    return tables


def embedding_text(item: Item, kind: str) -> str:
    """The text an embedding provider receives for one item field.

    Category embeds the full path string (major / sub), not only the
    leaf name.
    """
    if kind == "category":
        return " / ".join(v for v in (item.major_category, item.sub_category) if v)
    return getattr(item, kind)


def fetch_embeddings(
    items: Mapping[str, Item],
    kind: str,
    endpoint_url: str,
    session=None,
    batch_size: int = 64,
    token_env: str = "FBL_EMBED_TOKEN",
) -> EmbeddingTable:
    """Optional fetch mode: embed one field of every item over HTTP.

    Posts ``{"input": [texts...]}`` and expects ``{"data": [{"embedding":
    [...]}, ...]}`` in input order, the common embeddings wire shape. Any
    provider-side text preparation should be recorded by the caller in the
    table's provenance before saving.
    """
    if kind not in EMBEDDING_KINDS:
        raise ValueError(f"unknown embedding field kind {kind!r}")
    if session is None:
        import requests

        session = requests.Session()
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(token_env, "")
    if token:
        headers["Authorization"] = f"Bearer {token}"

    ordered = sorted(items)
    vectors: dict[str, np.ndarray] = {}
    for start in range(0, len(ordered), batch_size):
        batch = ordered[start : start + batch_size]
        payload = {"input": [embedding_text(items[i], kind) for i in batch]}
        response = session.post(endpoint_url, json=payload, headers=headers, timeout=120)
        response.raise_for_status()
        data = response.json()["data"]
        if len(data) != len(batch):
            raise SchemaError(
                f"embedding endpoint returned {len(data)} vectors for "
                f"{len(batch)} inputs"
            )
        for item_id, entry in zip(batch, data):
            vectors[item_id] = np.asarray(entry["embedding"], dtype=float)

    dimensions = {v.shape[0] for v in vectors.values()}
    if len(dimensions) != 1:
        raise SchemaError(f"endpoint returned mixed dimensions: {sorted(dimensions)}")
    return EmbeddingTable(
        field_kind=kind,
        vectors=vectors,
        dimension=dimensions.pop(),
        provenance={"endpoint": endpoint_url},
    )


# ---------------------------------------------------------------------------
# Adoption pipeline


@dataclass
class AdoptionResult:
    gold: dict[str, FunctionLabel]
    contested: set[str]


def adopt_labels(
    annotations: Iterable[AnnotationRecord],
    quorum: int = 2,
    panel_size: int = 3,
) -> AdoptionResult:
    """Adopt per-pair labels chosen by at least ``quorum`` annotators.

    Every annotated pair must carry exactly ``panel_size`` nine-class
    records. Pairs where no label reaches the quorum land in the
    contested set; gold and contested partition the annotated pairs.
    """
    by_pair: dict[str, list[FunctionLabel]] = defaultdict(list)
    for record in annotations:
        if record.scheme is not Scheme.NINE_CLASS:
            raise ValueError(
                f"adoption runs on nine-class annotations; pair {record.pair_id!r} "
                f"has a {record.scheme.value} record"
            )
        by_pair[record.pair_id].append(record.label)  # type: ignore[arg-type]

    wrong_panel = sorted(
        pid for pid, labels in by_pair.items() if len(labels) != panel_size
    )
    if wrong_panel:
        raise ValueError(
            f"pairs without exactly {panel_size} annotations: {', '.join(wrong_panel)}"
        )

    gold: dict[str, FunctionLabel] = {}
    contested: set[str] = set()
    for pair_id, labels in by_pair.items():
        label, count = Counter(labels).most_common(1)[0]
        if count >= quorum:
            gold[pair_id] = label
        else:
            contested.add(pair_id)
    return AdoptionResult(gold=gold, contested=contested)


# ---------------------------------------------------------------------------
# Statistics


@dataclass
class DatasetStats:
    """Distribution report over a dataset's adopted and contested pairs.

    Label shares use adopted + contested pairs as the denominator, so a
    full report's slices (nine labels plus the contested share) sum
    to 1. Coarse shares are over adopted pairs only.
    """

    n_pairs: int
    n_invalid: int
    n_valid: int
    n_gold: int
    n_contested: int
    label_counts: dict[FunctionLabel, int]
    label_shares: dict[FunctionLabel, float]
    coarse_counts: dict[CoarseLabel, int]
    coarse_shares: dict[CoarseLabel, float]
    contested_share: float

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "n_invalid": self.n_invalid,
            "n_valid": self.n_valid,
            "n_gold": self.n_gold,
            "n_contested": self.n_contested,
            "label_counts": {k.value: v for k, v in self.label_counts.items()},
            "label_shares": {k.value: v for k, v in self.label_shares.items()},
            "coarse_counts": {k.value: v for k, v in self.coarse_counts.items()},
            "coarse_shares": {k.value: v for k, v in self.coarse_shares.items()},
            "contested_share": self.contested_share,
        }


def dataset_stats(dataset: Dataset) -> DatasetStats:
    if not dataset.gold:
        raise ValueError("dataset has no gold labels; run adoption first")

    valid_ids = {p.pair_id for p in dataset.valid_pairs()}
    human_nine = [
        a
        for a in dataset.annotations
        if a.scheme is Scheme.NINE_CLASS and a.pair_id in valid_ids
    ]
    contested: set[str] = set()
    if human_nine:
        complete = _complete_panels(human_nine)
        contested = adopt_labels(complete).contested

    label_counts = Counter(dataset.gold.values())
    denominator = len(dataset.gold) + len(contested)
    coarse_counts = Counter(map_to_coarse(label) for label in dataset.gold.values())

    return DatasetStats(
        n_pairs=len(dataset.pairs),
        n_invalid=sum(1 for p in dataset.pairs if p.invalid),
        n_valid=len(dataset.valid_pairs()),
        n_gold=len(dataset.gold),
        n_contested=len(contested),
        label_counts={label: label_counts.get(label, 0) for label in FunctionLabel},
        label_shares={
            label: label_counts.get(label, 0) / denominator for label in FunctionLabel
        },
        coarse_counts={c: coarse_counts.get(c, 0) for c in CoarseLabel},
        coarse_shares={
            c: coarse_counts.get(c, 0) / len(dataset.gold) for c in CoarseLabel
        },
        contested_share=len(contested) / denominator,
    )


def _complete_panels(
    records: Sequence[AnnotationRecord], panel_size: int = 3
) -> list[AnnotationRecord]:
    sizes = Counter(r.pair_id for r in records)
    return [r for r in records if sizes[r.pair_id] == panel_size]


# ---------------------------------------------------------------------------
# Import adapter for the released annotation CSV

RELEASED_COLUMNS = ("pair_id", "item_x_url", "item_y_url", "label_1", "label_2", "label_3")

#: Cell values in a label column that mark the whole pair as invalid
#: (the response did not fit any label definition).
INVALID_MARKERS = {"", "-", "invalid", "n/a", "na"}


def import_released_csv(csv_path: str | Path, out_dir: str | Path) -> Dataset:
    """Convert the released annotation CSV into a dataset directory.

    Expected columns: ``pair_id, item_x_url, item_y_url, label_1,
    label_2, label_3``. Items are synthesized from the web links (the
    release carries links rather than full catalog records); a label
    cell matching one of the invalid markers flags the pair invalid and
    drops its annotations. Adoption then derives gold and contested sets.
    """
    csv_path = Path(csv_path)
    items: dict[str, Item] = {}
    pairs: list[ItemPair] = []
    annotations: list[AnnotationRecord] = []
    timestamp = datetime(2000, 1, 1)

    with csv_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(RELEASED_COLUMNS).issubset(reader.fieldnames):
            raise SchemaError(
                f"{csv_path}: expected columns {', '.join(RELEASED_COLUMNS)}; "
                f"got {reader.fieldnames}"
            )
        for line_no, row in enumerate(reader, start=2):
            x = _item_from_url(row["item_x_url"], items)
            y = _item_from_url(row["item_y_url"], items)
            raw_labels = [row["label_1"], row["label_2"], row["label_3"]]
            invalid = any(cell.strip().lower() in INVALID_MARKERS for cell in raw_labels)
            pair = ItemPair(
                pair_id=row["pair_id"] or make_pair_id(x.id, y.id),
                x=x,
                y=y,
                source=PairSource.DHONDT_SAMPLED,
                invalid=invalid,
            )
            pairs.append(pair)
            if invalid:
                continue
            for i, cell in enumerate(raw_labels, start=1):
                try:
                    label = FunctionLabel.parse(cell)
                except ValueError as exc:
                    raise SchemaError(f"{csv_path}:{line_no}: {exc}") from exc
                annotations.append(
                    AnnotationRecord(
                        pair_id=pair.pair_id,
                        annotator=f"annotator_{i}",
                        scheme=Scheme.NINE_CLASS,
                        label=label,
                        timestamp=timestamp,
                    )
                )

    adoption = adopt_labels(annotations)
    dataset = Dataset(items=items, pairs=pairs, annotations=annotations, gold=adoption.gold)
    dataset.validate()
    save_dataset(dataset, out_dir)
    return dataset


def _item_from_url(url: str, items: dict[str, Item]) -> Item:
    item_id = url.rstrip("/").rsplit("/", 1)[-1] or url
    if item_id not in items:
        items[item_id] = Item(id=item_id, url=url)
    return items[item_id]
