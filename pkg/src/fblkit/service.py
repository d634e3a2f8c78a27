"""HTTP service backing the annotation UI.

Endpoints (JSON, versioned under /v1):

- ``GET /v1/assignments/{annotator}`` — the annotator's pair queue and cursor
- ``GET /v1/pairs/{pair_id}`` — full pair payload with both items
- ``POST /v1/annotations`` — record one label (annotator id via the
  ``X-Annotator-Id`` header)
- ``GET /v1/status`` — progress, live vote states, gold preview, contested list
- ``GET /v1/export`` / ``GET /v1/export/{name}`` — stream datastore files

Annotations append to the dataset directory's ``annotations.jsonl`` with
fsync, one serialized writer; restarting the service replays the log and
reproduces identical state.
"""

from __future__ import annotations

import json
import os
import random
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Optional, Sequence

from fastapi import FastAPI, Header, HTTPException
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .datastore import (
    ANNOTATIONS_FILE,
    GOLD_FILE,
    ITEMS_FILE,
    PAIRS_FILE,
    Dataset,
    adopt_labels,
    annotation_to_dict,
    item_to_dict,
    load_dataset,
    write_text_atomic,
)
from .items import AnnotationRecord, ItemPair, Scheme
from .labels import FunctionLabel

DEFAULT_BATCH_SIZES = (400, 500)
ASSIGNMENTS_FILE = "assignments.json"

EXPORTABLE = (ITEMS_FILE, PAIRS_FILE, ANNOTATIONS_FILE, GOLD_FILE)


@dataclass
class Assignment:
    annotator_id: str
    pair_ids: list[str]
    cursor: int = 0

    def to_dict(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "pair_ids": self.pair_ids,
            "cursor": self.cursor,
        }


class InfeasibleAssignment(ValueError):
    pass


def create_assignments(
    pairs: Sequence[ItemPair],
    annotators: Sequence[str],
    per_pair_panel: int = 3,
    batch_sizes: Sequence[int] = DEFAULT_BATCH_SIZES,
    seed: int = 0,
) -> list[Assignment]:
    """Spread every pair over ``per_pair_panel`` distinct annotators.

    Per-annotator loads are drawn from ``batch_sizes`` when the slot
    total decomposes exactly into those sizes (2,800 pairs over 18
    annotators gives 6 at 400 and 12 at 500); otherwise loads are
    balanced as evenly as possible under the maximum batch size. The
    greedy most-remaining-capacity order guarantees no annotator sees a
    pair twice. Deterministic for a fixed seed.
    """
    if len(set(p.pair_id for p in pairs)) != len(pairs):
        raise ValueError("duplicate pair ids in assignment input")
    n_slots = per_pair_panel * len(pairs)
    max_batch = max(batch_sizes)
    capacity = len(annotators) * min(max_batch, len(pairs))
    if len(annotators) < per_pair_panel or capacity < n_slots:
        raise InfeasibleAssignment(
            f"cannot place {n_slots} assignment slots on {len(annotators)} "
            f"annotators (shortfall {max(n_slots - capacity, per_pair_panel - len(annotators))})"
        )

    loads = _target_loads(n_slots, len(annotators), sorted(batch_sizes), len(pairs))
    order = list(annotators)
    random.Random(seed).shuffle(order)
    remaining = {a: loads[i] for i, a in enumerate(order)}
    tie_rank = {a: i for i, a in enumerate(order)}

    queues: dict[str, list[str]] = {a: [] for a in annotators}
    for pair in pairs:
        chosen = sorted(remaining, key=lambda a: (-remaining[a], tie_rank[a]))[:per_pair_panel]
        if remaining[chosen[-1]] == 0:
            raise InfeasibleAssignment(
                f"ran out of capacity while assigning pair {pair.pair_id!r}"
            )
        for a in chosen:
            queues[a].append(pair.pair_id)
            remaining[a] -= 1

    return [Assignment(annotator_id=a, pair_ids=queues[a]) for a in annotators]


def _target_loads(
    n_slots: int, n_annotators: int, sizes: list[int], n_pairs: int
) -> list[int]:
    if len(sizes) == 2 and sizes[1] <= n_pairs:
        small, large = sizes
        span = large - small
        excess = n_slots - small * n_annotators
        if span > 0 and 0 <= excess <= span * n_annotators and excess % span == 0:
            n_large = excess // span
            return [large] * n_large + [small] * (n_annotators - n_large)
    base, extra = divmod(n_slots, n_annotators)
    loads = [base + 1] * extra + [base] * (n_annotators - extra)
    if loads and loads[0] > min(max(sizes), n_pairs):
        raise InfeasibleAssignment(
            f"per-annotator load {loads[0]} exceeds the feasible maximum"
        )
    return loads


# ---------------------------------------------------------------------------
# Store


class AnnotationStore:
    """Dataset snapshot + append-only annotation log + assignments."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.dataset: Dataset = load_dataset(self.directory)
        self._pairs = {p.pair_id: p for p in self.dataset.pairs}
        self._lock = threading.Lock()
        self.assignments: dict[str, Assignment] = {}
        self._seen: dict[tuple[str, str], FunctionLabel] = {}
        self._records: list[AnnotationRecord] = []
        for record in self.dataset.annotations:
            if record.scheme is Scheme.NINE_CLASS:
                self._records.append(record)
                self._seen[(record.annotator, record.pair_id)] = record.label  # type: ignore[assignment]
        assignments_path = self.directory / ASSIGNMENTS_FILE
        if assignments_path.exists():
            payload = json.loads(assignments_path.read_text())
            for entry in payload["assignments"]:
                assignment = Assignment(
                    annotator_id=entry["annotator_id"], pair_ids=entry["pair_ids"]
                )
                self.assignments[assignment.annotator_id] = assignment
        self._restore_cursors()

    def init_assignments(self, annotators: Sequence[str], seed: int = 0) -> None:
        assignments = create_assignments(
            self.dataset.valid_pairs(), annotators, seed=seed
        )
        self.assignments = {a.annotator_id: a for a in assignments}
        write_text_atomic(
            self.directory / ASSIGNMENTS_FILE,
            json.dumps(
                {"assignments": [a.to_dict() for a in self.assignments.values()]},
                indent=2,
            ),
        )
        self._restore_cursors()

    def _restore_cursors(self) -> None:
        for assignment in self.assignments.values():
            labeled = {
                pair_id
                for (annotator, pair_id) in self._seen
                if annotator == assignment.annotator_id
            }
            done = sum(1 for pid in assignment.pair_ids if pid in labeled)
            assignment.cursor = done

    def assignment(self, annotator_id: str) -> Assignment:
        try:
            return self.assignments[annotator_id]
        except KeyError:
            raise KeyError(f"no assignment for annotator {annotator_id!r}") from None

    def labeled_pairs(self, annotator_id: str) -> set[str]:
        return {pid for (who, pid) in self._seen if who == annotator_id}

    def pair(self, pair_id: str) -> ItemPair:
        return self._pairs[pair_id]

    def record(self, annotator_id: str, pair_id: str, label: FunctionLabel) -> dict:
        """Durably append one label; idempotent on exact duplicates."""
        assignment = self.assignment(annotator_id)
        if pair_id not in assignment.pair_ids:
            raise PermissionError(
                f"pair {pair_id!r} is not assigned to annotator {annotator_id!r}"
            )
        with self._lock:
            existing = self._seen.get((annotator_id, pair_id))
            if existing is not None:
                if existing is label:
                    return {"status": "duplicate", "label": label.value}
                raise FileExistsError(existing.value)
            record = AnnotationRecord(
                pair_id=pair_id,
                annotator=annotator_id,
                scheme=Scheme.NINE_CLASS,
                label=label,
                timestamp=datetime.utcnow(),
            )
            self._append(record)
            self._records.append(record)
            self._seen[(annotator_id, pair_id)] = label
            assignment.cursor += 1
            return {"status": "recorded", "label": label.value}

    def _append(self, record: AnnotationRecord) -> None:
        path = self.directory / ANNOTATIONS_FILE
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(annotation_to_dict(record), sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def status(self) -> dict:
        """Live aggregation over completed panels only."""
        votes: dict[str, dict[str, int]] = {}
        counts: dict[str, int] = {}
        for record in self._records:
            counts[record.pair_id] = counts.get(record.pair_id, 0) + 1
            votes.setdefault(record.pair_id, {})
            key = record.label.value
            votes[record.pair_id][key] = votes[record.pair_id].get(key, 0) + 1

        complete = [r for r in self._records if counts[r.pair_id] == 3]
        adoption = adopt_labels(complete) if complete else None

        pair_states = {}
        for pair_id, vote_counts in sorted(votes.items()):
            if counts[pair_id] < 3:
                state = "pending"
            elif adoption and pair_id in adoption.gold:
                state = "adopted"
            else:
                state = "contested"
            pair_states[pair_id] = {
                "votes": vote_counts,
                "n_annotations": counts[pair_id],
                "state": state,
            }

        total_slots = sum(len(a.pair_ids) for a in self.assignments.values())
        per_annotator = {
            a.annotator_id: {"done": a.cursor, "total": len(a.pair_ids)}
            for a in self.assignments.values()
        }
        return {
            "progress": {
                "overall": (len(self._records) / total_slots) if total_slots else 0.0,
                "per_annotator": per_annotator,
            },
            "pairs": pair_states,
            "gold_preview": (
                {pid: label.value for pid, label in sorted(adoption.gold.items())}
                if adoption
                else {}
            ),
            "contested": sorted(adoption.contested) if adoption else [],
        }


# ---------------------------------------------------------------------------
# FastAPI wiring


class AnnotationIn(BaseModel):
    pair_id: str
    label: str


def create_app(
    dataset_dir: str | Path,
    annotators: Optional[Sequence[str]] = None,
    seed: int = 0,
    ui_dir: Optional[str | Path] = None,
) -> FastAPI:
    store = AnnotationStore(dataset_dir)
    if not store.assignments:
        if not annotators:
            raise ValueError(
                "dataset has no assignments.json; pass annotator ids to create them"
            )
        store.init_assignments(annotators, seed=seed)

    app = FastAPI(title="fblkit annotation service")
    app.state.store = store

    @app.get("/v1/assignments/{annotator_id}")
    def get_assignment(annotator_id: str) -> dict:
        try:
            assignment = store.assignment(annotator_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        labeled = store.labeled_pairs(annotator_id)
        next_pair = next((pid for pid in assignment.pair_ids if pid not in labeled), None)
        return {
            "annotator_id": assignment.annotator_id,
            "pair_ids": assignment.pair_ids,
            "cursor": assignment.cursor,
            "next_pair_id": next_pair,
        }

    @app.get("/v1/pairs/{pair_id}")
    def get_pair(pair_id: str) -> dict:
        try:
            pair = store.pair(pair_id)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=f"unknown pair {pair_id!r}") from exc
        return {
            "pair_id": pair.pair_id,
            "source": pair.source.value,
            "invalid": pair.invalid,
            "x": item_to_dict(pair.x),
            "y": item_to_dict(pair.y),
        }

    @app.post("/v1/annotations")
    def post_annotation(
        body: AnnotationIn, x_annotator_id: str = Header(default="")
    ) -> dict:
        if not x_annotator_id:
            raise HTTPException(status_code=400, detail="X-Annotator-Id header required")
        try:
            label = FunctionLabel.parse(body.label)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        try:
            ack = store.record(x_annotator_id, body.pair_id, label)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except PermissionError as exc:
            raise HTTPException(status_code=403, detail=str(exc)) from exc
        except FileExistsError as exc:
            raise HTTPException(
                status_code=409,
                detail=f"pair already labeled by this annotator as {exc}",
            ) from exc
        return ack

    @app.get("/v1/status")
    def get_status() -> dict:
        return store.status()

    @app.get("/v1/export")
    def list_exports() -> dict:
        present = [name for name in EXPORTABLE if (store.directory / name).exists()]
        return {"files": present}

    @app.get("/v1/export/{name}", response_class=PlainTextResponse)
    def export_file(name: str) -> str:
        if name not in EXPORTABLE:
            raise HTTPException(status_code=404, detail=f"not exportable: {name!r}")
        path = store.directory / name
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"{name} not present")
        return path.read_text(encoding="utf-8")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
