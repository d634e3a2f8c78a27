"""Plain-text tables, matrix grids, and JSON report assembly."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .datastore import write_text_atomic
from .items import Scheme
from .judge import JudgeRun
from .labels import CoarseLabel, FunctionLabel, map_to_coarse
from .metrics import ConfusionMatrix, confusion_matrix, macro_f1
from .models.cv import CvReport

_CLASS_ROWS = [
    (CoarseLabel.COMPLEMENTARY, "Compl."),
    (CoarseLabel.SUBSTITUTE, "Subst."),
    (CoarseLabel.UNRELATED, "Unrel."),
]

_MODEL_NAMES = {
    "logistic_regression": "LR",
    "svm": "SVM",
    "knn": "kNN",
    "gbt": "GBT",
}


def render_cv_table(reports: Sequence[CvReport]) -> str:
    """Macro-F1 summary table: one row per model, Valid and Test columns."""
    lines = [
        f"{'':8s}  {'Valid':>18s}  {'Test':>18s}",
        "-" * 48,
    ]
    for report in reports:
        name = _MODEL_NAMES.get(report.model_kind, report.model_kind)
        valid = f"{report.valid_mean:.3f} (+/- {report.valid_std:.3f})"
        test = f"{report.test_mean:.3f} (+/- {report.test_std:.3f})"
        lines.append(f"{name:8s}  {valid:>18s}  {test:>18s}")
    return "\n".join(lines) + "\n"


def file_digest(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return f"sha256:{digest.hexdigest()}"


def provenance(
    inputs: Mapping[str, str | Path],
    seed: Optional[int] = None,
    config: Optional[dict] = None,
) -> dict:
    """Provenance header for a report: input hashes, seed, config snapshot."""
    block: dict = {
        "inputs": {name: file_digest(path) for name, path in sorted(inputs.items())}
    }
    if seed is not None:
        block["seed"] = seed
    if config is not None:
        block["config"] = config
    return block


# ---------------------------------------------------------------------------
# Judge run reports


def judge_report(
    run: JudgeRun,
    gold: Optional[Mapping[str, FunctionLabel]] = None,
) -> dict:
    """Aggregate a judge run into consistency and agreement metrics.

    Consistency is averaged over all voted pairs, and broken down by the
    coarse class of the human gold label where one exists. For
    nine-class runs the agreement block consolidates the voted label
    (vote first, then map to coarse), compares against consolidated
    gold, and adds the 9x9 confusion matrix.
    """
    scheme = Scheme(run.config["scheme"])
    votes = run.votes
    pair_ids = sorted(votes)

    report: dict = {
        "config": run.config,
        "n_pairs": len(pair_ids),
        "n_failures": len(run.failures),
        "failures": {pid: errors for pid, errors in sorted(run.failures.items())},
        "ties": sorted(pid for pid in pair_ids if votes[pid].is_tie),
    }

    consistency: dict = {}
    if pair_ids:
        consistency["all"] = sum(votes[p].consistency for p in pair_ids) / len(pair_ids)
    if gold:
        for coarse, _ in _CLASS_ROWS:
            members = [
                p for p in pair_ids if p in gold and map_to_coarse(gold[p]) is coarse
            ]
            if members:
                consistency[coarse.value] = sum(
                    votes[p].consistency for p in members
                ) / len(members)
    report["consistency"] = consistency

    if gold:
        scored = [p for p in pair_ids if p in gold]
        gold_coarse = [map_to_coarse(gold[p]) for p in scored]
        if scheme is Scheme.NINE_CLASS:
            voted = [votes[p].mode_label for p in scored]
            predicted_coarse = [map_to_coarse(v) for v in voted]
            matrix = confusion_matrix(voted, [gold[p] for p in scored])
            report["confusion_matrix"] = {
                "labels": [label.value for label in matrix.labels],
                "counts": matrix.counts.tolist(),
                "normalized": [
                    [round(v, 2) for v in row] for row in matrix.normalized()
                ],
            }
        else:
            predicted_coarse = [votes[p].mode_label for p in scored]
        if scored:
            agreement = macro_f1(predicted_coarse, gold_coarse)
            report["agreement"] = {
                "n_scored": len(scored),
                "macro_f1": agreement.macro,
                "per_class_f1": {
                    k.value: v for k, v in agreement.per_class_f1.items()
                },
            }

    return report


def render_consistency_table(report: dict) -> str:
    """Consistency score per coarse class plus the overall row."""
    consistency = report.get("consistency", {})
    lines = [f"{'':8s}  {'Consistency':>11s}", "-" * 21]
    for coarse, title in _CLASS_ROWS:
        if coarse.value in consistency:
            lines.append(f"{title:8s}  {consistency[coarse.value]:>11.3f}")
    if "all" in consistency:
        lines.append(f"{'All':8s}  {consistency['all']:>11.3f}")
    return "\n".join(lines) + "\n"


def render_agreement_table(report: dict) -> str:
    agreement = report.get("agreement")
    if not agreement:
        return "no gold labels supplied; agreement not computed\n"
    lines = [f"{'':8s}  {'macro-F1':>9s}", "-" * 19]
    for coarse, title in _CLASS_ROWS:
        value = agreement["per_class_f1"].get(coarse.value)
        if value is not None:
            lines.append(f"{title:8s}  {value:>9.3f}")
    lines.append(f"{'All':8s}  {agreement['macro_f1']:>9.3f}")
    return "\n".join(lines) + "\n"


def render_matrix_grid(
    labels: Sequence[str], normalized: Sequence[Sequence[float]]
) -> str:
    """Text grid of a normalized confusion matrix (gold rows, judged columns)."""
    width = max(6, max(len(str(label)) for label in labels) + 1)
    header = " " * width + "".join(f"{str(label):>{width}s}" for label in labels)
    lines = [header]
    for label, row in zip(labels, normalized):
        cells = "".join(f"{value:>{width}.1f}" for value in row)
        lines.append(f"{str(label):>{width}s}{cells}")
    return "\n".join(lines) + "\n"


def render_confusion_from_report(report: dict) -> str:
    block = report.get("confusion_matrix")
    if not block:
        return "no confusion matrix (needs a nine-class run and gold labels)\n"
    return render_matrix_grid(block["labels"], block["normalized"])


def matrix_to_grid(matrix: ConfusionMatrix, max_value: float = 100.0) -> str:
    return render_matrix_grid(
        [getattr(label, "value", str(label)) for label in matrix.labels],
        matrix.normalized(max_value),
    )


def dump_report_json(report: dict, path: str | Path) -> None:
    """Stable serialization: sorted keys, trailing newline, atomic write."""
    write_text_atomic(path, json.dumps(report, indent=2, sort_keys=True) + "\n")
