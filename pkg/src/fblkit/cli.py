"""Command-line entry point for every pipeline stage.

Subcommands: sample, import-dataset, featurize, evaluate, judge, report,
serve. A TOML config file can prefill flag defaults; explicit flags win
over the file, which wins over built-in defaults. Outputs are written
atomically and inputs are never mutated.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:
    import tomli as tomllib

from . import datastore, reports
from .datastore import (
    Dataset,
    dataset_stats,
    import_released_csv,
    load_all_embeddings,
    load_dataset,
    write_jsonl_atomic,
    write_text_atomic,
)
from .features import (
    FeatureLayout,
    load_features,
    build_feature_vector,
    save_features,
)
from .items import Scheme
from .judge import HttpTransport, JudgeConfig, ScriptedTransport, annotate_pairs
from .labels import map_to_coarse
from .models import ClassifierSpec, double_cross_validate
from .models.base import ClassifierKind
from .sampling import read_copurchase_table, read_practitioner_pairs, sample_pairs

DEFAULT_SEED = 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    apply_config_defaults(args)
    try:
        return args.handler(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fbl",
        description="Annotation workbench for function-based item-pair labels",
    )
    parser.add_argument("--config", type=Path, help="TOML file with flag defaults")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("sample", help="apportion a quota and draw top co-purchased pairs")
    p.add_argument("--copurchases", type=Path, required=True)
    p.add_argument("--items", type=Path, required=True, help="items.jsonl catalog")
    p.add_argument("--total", type=int, required=True)
    p.add_argument("--practitioner", type=Path, help="practitioner seed pairs CSV")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=Path, required=True, help="pairs.jsonl output")
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("import-dataset", help="adapt the released annotation CSV")
    p.add_argument("--csv", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(handler=cmd_import_dataset)

    p = sub.add_parser("featurize", help="build pair feature vectors from embeddings")
    p.add_argument("--dataset", type=Path, required=True, help="dataset directory")
    p.add_argument("--embeddings", type=Path, required=True, help="embeddings directory")
    p.add_argument("--out", type=Path, required=True, help="features.jsonl output")
    p.set_defaults(handler=cmd_featurize)

    p = sub.add_parser("evaluate", help="double cross-validate a classifier")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True, help="dataset directory with gold labels")
    p.add_argument(
        "--model",
        choices=[k.value for k in ClassifierKind],
        default=ClassifierKind.LOGISTIC_REGRESSION.value,
    )
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=Path, required=True, help="report JSON path")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("judge", help="run the LLM judge over a dataset's valid pairs")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--judge-config", type=Path, required=True)
    p.add_argument(
        "--mock-transport",
        type=Path,
        help="JSON script file; replay responses instead of calling the endpoint",
    )
    p.add_argument("--limit", type=int, help="annotate only the first N valid pairs")
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(handler=cmd_judge)

    p = sub.add_parser("report", help="tables and matrices from a stored judge run")
    p.add_argument("--run", type=Path, required=True, help="judge_run.jsonl")
    p.add_argument("--judge-config", type=Path, required=True)
    p.add_argument("--dataset", type=Path, help="dataset directory with gold labels")
    p.add_argument("--out-dir", type=Path, required=True)
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8400)
    p.add_argument("--annotators", help="comma-separated ids; creates assignments.json")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ui-dir", type=Path, help="static UI directory (default frontend/dist)")
    p.set_defaults(handler=cmd_serve)

    return parser


def apply_config_defaults(args: argparse.Namespace) -> None:
    """Fill unset flags from the config file; flags > file > defaults."""
    file_values: dict = {}
    if args.config is not None:
        with open(args.config, "rb") as fh:
            file_values = tomllib.load(fh)
    if getattr(args, "seed", None) is None:
        args.seed = int(file_values.get("seed", DEFAULT_SEED))
    if getattr(args, "trials", None) is None and hasattr(args, "trials"):
        args.trials = int(file_values.get("trials", 50))


def cmd_sample(args: argparse.Namespace) -> int:
    if args.total <= 0:
        print("error: --total must be a positive pair count", file=sys.stderr)
        return 2
    dataset = _load_items_only(args.items)
    table = read_copurchase_table(args.copurchases)
    result = sample_pairs(dataset.items, table, args.total)
    pairs = list(result.pairs)
    if args.practitioner:
        pairs.extend(read_practitioner_pairs(args.practitioner, dataset.items))
    write_jsonl_atomic(args.out, (datastore.pair_to_dict(p) for p in pairs))
    if result.total_shortfall:
        print(
            f"warning: {result.total_shortfall} slots unfilled "
            f"(strata too small: {sorted(result.shortfalls)})",
            file=sys.stderr,
        )
    print(f"wrote {len(pairs)} pairs to {args.out}")
    return 0


def _load_items_only(items_path: Path) -> Dataset:
    if not items_path.exists():
        raise FileNotFoundError(f"items file not found: {items_path}")
    dataset = Dataset()
    for _, obj in datastore.read_jsonl(items_path):
        item = datastore.item_from_dict(obj)
        dataset.items[item.id] = item
    return dataset


def cmd_import_dataset(args: argparse.Namespace) -> int:
    if not args.csv.exists():
        raise FileNotFoundError(f"csv not found: {args.csv}")
    dataset = import_released_csv(args.csv, args.out_dir)
    stats = dataset_stats(dataset)
    print(json.dumps(stats.to_dict(), indent=2, sort_keys=True))
    return 0


def cmd_featurize(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset)
    pairs = dataset.valid_pairs()
    if pairs:
        embeddings = load_all_embeddings(args.embeddings)
    else:
        embeddings = {}
    layout = FeatureLayout.from_items(dataset.items.values())
    vectors = [build_feature_vector(p, embeddings, layout) for p in pairs]
    save_features(
        vectors,
        layout,
        args.out,
        provenance=reports.provenance(
            inputs={"dataset_pairs": Path(args.dataset) / datastore.PAIRS_FILE},
        ),
    )
    print(f"wrote {len(vectors)} feature vectors ({layout.total_dimension} dims) to {args.out}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    vectors, _ = load_features(args.features)
    dataset = load_dataset(args.dataset)
    if not dataset.gold:
        raise ValueError(f"dataset {args.dataset} has no gold labels")
    usable = [v for v in vectors if v.pair_id in dataset.gold]
    labels = [map_to_coarse(dataset.gold[v.pair_id]) for v in usable]
    spec = ClassifierSpec(kind=ClassifierKind(args.model))
    report = double_cross_validate(
        spec, usable, labels, seed=args.seed, n_trials=args.trials
    )
    payload = report.to_dict()
    payload["provenance"] = reports.provenance(
        inputs={"features": args.features}, seed=args.seed
    )
    reports.dump_report_json(payload, args.out)
    table = reports.render_cv_table([report])
    write_text_atomic(args.out.with_suffix(".txt"), table)
    print(table, end="")
    return 0


def cmd_judge(args: argparse.Namespace) -> int:
    config = load_judge_config(args.judge_config)
    dataset = load_dataset(args.dataset)
    pairs = dataset.valid_pairs()
    if args.limit:
        pairs = pairs[: args.limit]
    if args.mock_transport:
        script = json.loads(args.mock_transport.read_text())["responses"]
        transport = ScriptedTransport(script)
    else:
        if not config.endpoint_url:
            raise ValueError("judge config has no endpoint_url and --mock-transport not given")
        transport = HttpTransport(config)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    run = annotate_pairs(
        pairs, config, transport, run_path=args.out_dir / "judge_run.jsonl"
    )
    gold = dataset.gold or None
    report = reports.judge_report(run, gold=gold)
    reports.dump_report_json(report, args.out_dir / "judge_report.json")
    print(
        f"annotated {len(run.records)} pairs "
        f"({len(run.failures)} failures) -> {args.out_dir}"
    )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    from .judge import JudgeRun, load_run_records, reduce_votes

    config = load_judge_config(args.judge_config)
    records = load_run_records(args.run, config.samples_per_pair)
    run = JudgeRun(
        config=config.snapshot(),
        records=records,
        votes=reduce_votes(records),
        failures={},
    )
    gold = None
    if args.dataset:
        gold = load_dataset(args.dataset).gold or None
    report = reports.judge_report(run, gold=gold)
    report["provenance"] = reports.provenance(inputs={"run": args.run})
    args.out_dir.mkdir(parents=True, exist_ok=True)
    reports.dump_report_json(report, args.out_dir / "judge_report.json")
    text = (
        reports.render_consistency_table(report)
        + "\n"
        + reports.render_agreement_table(report)
        + "\n"
        + reports.render_confusion_from_report(report)
    )
    write_text_atomic(args.out_dir / "judge_report.txt", text)
    print(text, end="")
    return 0


def load_judge_config(path: Path) -> JudgeConfig:
    with open(path, "rb") as fh:
        payload = tomllib.load(fh)
    section = payload.get("judge", payload)
    known = {
        "endpoint_url",
        "model_id",
        "scheme",
        "samples_per_pair",
        "temperature",
        "extra_options",
        "max_concurrency",
        "retry_limit",
        "credential_header",
        "credential_env",
    }
    unknown = set(section) - known
    if unknown:
        raise ValueError(f"unknown judge config keys: {sorted(unknown)}")
    if "scheme" in section:
        section["scheme"] = Scheme(section["scheme"])
    return JudgeConfig(**section)


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    annotators = args.annotators.split(",") if args.annotators else None
    ui_dir = args.ui_dir
    if ui_dir is None:
        candidate = Path("frontend/dist")
        ui_dir = candidate if candidate.is_dir() else None
    app = create_app(args.dataset, annotators=annotators, seed=args.seed, ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
