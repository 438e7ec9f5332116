"""Pipeline command line: each stage of the pseudo-labeling workflow as a subcommand.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend failure. Diagnostics
go to stderr; files are the only machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Sequence

from .backends import Backend, BackendSpec, make_backend
from .classifier import ClassifierConfig
from .corpus import DEFAULT_SCHEMA, LabelSchema, load_dataset, make_schema, save_dataset
from .ensemble import (
    consensus_dataset,
    consensus_for,
    kappa_per_run,
    read_consensus,
    read_votes,
    run_ensemble,
    unanimity_histogram,
    write_consensus,
    write_votes,
)
from .errors import BackendError, DataError
from .evaluation import cross_validate, format_table, write_report
from .featurizer import FeaturizerConfig
from .ioutil import atomic_write_text
from .review import ReviewStore, apply_corrections, assign, build_queue
from .selftrain import SelfTrainConfig, write_trace
from .server import serve


@dataclass(frozen=True)
class PipelineConfig:
    schema: LabelSchema = DEFAULT_SCHEMA
    featurizer: FeaturizerConfig = FeaturizerConfig()
    backend: BackendSpec = BackendSpec()
    selftrain: SelfTrainConfig = SelfTrainConfig()
    learning_rate: float = 0.05
    epochs: int = 30
    batch_size: int = 32
    class_weights: tuple[float, ...] | None = None
    runs: int = 5
    seed: int = 0


def _take(section: dict[str, Any], allowed: Sequence[str], where: str) -> dict[str, Any]:
    unknown = set(section) - set(allowed)
    if unknown:
        raise DataError(f"{where}: unknown config keys {sorted(unknown)}")
    return section


def load_config(path: str | Path | None) -> PipelineConfig:
    """JSON config file; omitted sections keep their defaults."""
    if path is None:
        return PipelineConfig()
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise DataError(f"{path}: config must be a JSON object")
    _take(raw, ["schema", "featurizer", "classifier", "backend", "selftrain", "runs", "seed"], str(path))

    config = PipelineConfig()
    if "schema" in raw:
        config = replace(config, schema=make_schema([str(n) for n in raw["schema"]]))
    if "featurizer" in raw:
        sec = _take(raw["featurizer"], ["max_tokens", "min_doc_freq", "weighting"], f"{path}: featurizer")
        config = replace(config, featurizer=FeaturizerConfig(**sec))
    if "classifier" in raw:
        sec = _take(
            raw["classifier"],
            ["learning_rate", "epochs", "batch_size", "class_weights"],
            f"{path}: classifier",
        )
        weights = sec.get("class_weights")
        config = replace(
            config,
            learning_rate=float(sec.get("learning_rate", config.learning_rate)),
            epochs=int(sec.get("epochs", config.epochs)),
            batch_size=int(sec.get("batch_size", config.batch_size)),
            class_weights=None if weights is None else tuple(float(w) for w in weights),
        )
    if "backend" in raw:
        sec = _take(raw["backend"], ["kind", "command", "timeout"], f"{path}: backend")
        config = replace(config, backend=BackendSpec(**sec))
    if "selftrain" in raw:
        sec = _take(
            raw["selftrain"],
            ["acquisition_rate", "stop_threshold", "max_iterations"],
            f"{path}: selftrain",
        )
        config = replace(config, selftrain=SelfTrainConfig(**sec))
    if "runs" in raw:
        config = replace(config, runs=int(raw["runs"]))
    if "seed" in raw:
        config = replace(config, seed=int(raw["seed"]))
    return config


def _apply_overrides(config: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    if getattr(args, "runs", None) is not None:
        config = replace(config, runs=args.runs)
    return config


def backend_factory(config: PipelineConfig) -> Callable[[int], Backend]:
    schema = config.schema

    def factory(seed: int) -> Backend:
        classifier_config = ClassifierConfig(
            num_classes=schema.num_classes,
            class_weights=config.class_weights,
            learning_rate=config.learning_rate,
            epochs=config.epochs,
            batch_size=config.batch_size,
            seed=seed,
        )
        return make_backend(
            config.backend, schema.num_classes, schema.names, config.featurizer, classifier_config
        )

    return factory


def _log(message: str) -> None:
    sys.stderr.write(message + "\n")


def _run_cv(args: argparse.Namespace, with_extra: bool) -> int:
    config = _apply_overrides(load_config(args.config), args)
    labeled = load_dataset(args.labeled, args.format, config.schema)
    extra = None
    if with_extra and args.extra is not None:
        extra = load_dataset(args.extra, args.format, config.schema)
    cv = cross_validate(
        labeled,
        extra,
        backend_factory(config),
        k=args.folds,
        base_seed=config.seed,
        parallel=args.parallel,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_report(out / "report.json", cv)
    table = format_table(cv, config.schema.names)
    atomic_write_text(out / "report.txt", table)
    _log(table.rstrip("\n"))
    _log(f"wrote {out / 'report.json'} and {out / 'report.txt'}")
    return 0


def cmd_baseline(args: argparse.Namespace) -> int:
    return _run_cv(args, with_extra=False)


def cmd_evaluate(args: argparse.Namespace) -> int:
    return _run_cv(args, with_extra=True)


def cmd_pseudolabel(args: argparse.Namespace) -> int:
    config = _apply_overrides(load_config(args.config), args)
    labeled = load_dataset(args.labeled, args.format, config.schema)
    unlabeled = load_dataset(args.unlabeled, args.format, config.schema)
    matrix, traces = run_ensemble(
        labeled,
        unlabeled,
        backend_factory(config),
        k_runs=config.runs,
        config=config.selftrain,
        base_seed=config.seed,
        parallel=args.parallel,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_votes(out / "votes.jsonl", matrix)
    for j, trace in enumerate(traces):
        write_trace(out / f"trace-run{j}.jsonl", trace)
    _log(
        f"pseudo-labeled {len(matrix)} posts with {config.runs} runs; "
        f"wrote {out / 'votes.jsonl'}"
    )
    return 0


def cmd_vote(args: argparse.Namespace) -> int:
    matrix = read_votes(args.votes)
    consensus = consensus_for(matrix)
    write_consensus(args.consensus, matrix, consensus)
    histogram = unanimity_histogram(consensus, matrix.num_runs, matrix.schema.num_classes)
    payload = histogram.as_dict()
    payload["run_agreement"] = list(kappa_per_run(matrix, consensus))
    payload["tie_broken"] = sum(c.tie_broken for c in consensus)
    histogram_path = (
        Path(args.histogram) if args.histogram else Path(args.consensus).with_name("unanimity.json")
    )
    atomic_write_text(histogram_path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    non_unanimous = len(consensus) - histogram.level_counts[matrix.num_runs]
    _log(
        f"{len(consensus)} consensus labels ({non_unanimous} non-unanimous); "
        f"wrote {args.consensus} and {histogram_path}"
    )
    return 0


def cmd_review_serve(args: argparse.Namespace) -> int:
    store_dir = Path(args.store)
    if (store_dir / ReviewStore.QUEUE_FILE).exists():
        store = ReviewStore.open(store_dir)
        _log(f"resuming review store {store_dir} ({len(store.items)} queued items)")
    else:
        if args.consensus is None:
            raise DataError("--consensus is required to create a new review store")
        matrix, consensus = read_consensus(args.consensus)
        queue = build_queue(consensus, matrix)
        annotators = [a for a in args.annotators.split(",") if a]
        overlap = args.overlap if args.overlap is not None else len(queue) // 4
        assignment = assign(queue, annotators, overlap)
        store = ReviewStore.create(store_dir, queue, assignment, matrix.schema, matrix.num_runs)
        _log(
            f"created review store {store_dir}: {len(queue)} items, "
            f"overlap {overlap}, annotators {', '.join(annotators)}"
        )
    try:
        server = serve(store, args.port, args.host, args.static_dir, quiet=not args.verbose)
    except OSError as exc:
        raise DataError(f"cannot bind {args.host}:{args.port}: {exc}") from None
    _log(f"review API on http://{args.host}:{server.server_address[1]}/")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        _log("shutting down")
    finally:
        server.server_close()
    return 0


def cmd_apply_corrections(args: argparse.Namespace) -> int:
    matrix, consensus = read_consensus(args.consensus)
    pseudo = consensus_dataset(matrix, consensus)
    store = ReviewStore.open(args.store)
    corrected, summary = apply_corrections(pseudo, store)
    save_dataset(corrected, args.out)
    payload: dict[str, Any] = {
        "total": summary.total,
        "resolved": summary.resolved,
        "correct": summary.correct,
        "corrected": summary.corrected,
        "conflicts": summary.conflicts,
        "unresolved": summary.unresolved,
        "accuracy": summary.accuracy,
    }
    try:
        payload["agreement_rate"] = store.percent_agreement().agreement_rate
    except DataError:
        pass
    summary_path = (
        Path(args.summary) if args.summary else Path(args.out).with_name("correction-summary.json")
    )
    atomic_write_text(summary_path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _log(
        f"applied {summary.corrected} corrections "
        f"({summary.conflicts} conflicts, {summary.unresolved} unresolved); wrote {args.out}"
    )
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        _log(f"error: {message}")
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semilabel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, runs: bool = False) -> None:
        p.add_argument("--config", help="JSON pipeline config file")
        p.add_argument("--seed", type=int, help="base seed (overrides config)")
        p.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
        p.add_argument("--parallel", type=int, default=1)
        if runs:
            p.add_argument("--runs", type=int, help="ensemble size (overrides config)")

    p = sub.add_parser("baseline", help="cross-validate on ground-truth labels only")
    p.add_argument("--labeled", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--folds", type=int, default=5)
    common(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("pseudolabel", help="ensemble self-training over the unlabeled pool")
    p.add_argument("--labeled", required=True)
    p.add_argument("--unlabeled", required=True)
    p.add_argument("--out", required=True, help="output directory for votes and traces")
    common(p, runs=True)
    p.set_defaults(func=cmd_pseudolabel)

    p = sub.add_parser("vote", help="majority-vote consensus from a votes file")
    p.add_argument("--votes", required=True)
    p.add_argument("--consensus", required=True)
    p.add_argument("--histogram", help="unanimity histogram path (default: unanimity.json)")
    p.set_defaults(func=cmd_vote)

    p = sub.add_parser("review-serve", help="serve the annotation API (and UI, if built)")
    p.add_argument("--store", required=True, help="review store directory")
    p.add_argument("--consensus", help="consensus file (required when creating the store)")
    p.add_argument("--annotators", default="a1,a2", help="comma-separated annotator ids")
    p.add_argument("--overlap", type=int, help="shared double-annotated items (default: quarter)")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--static-dir", help="directory of UI assets to serve")
    p.add_argument("--verbose", action="store_true", help="log requests to stderr")
    p.set_defaults(func=cmd_review_serve)

    p = sub.add_parser("apply-corrections", help="merge review verdicts into the pseudo-labels")
    p.add_argument("--consensus", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--out", required=True, help="corrected dataset path")
    p.add_argument("--summary", help="summary JSON path (default: correction-summary.json)")
    p.set_defaults(func=cmd_apply_corrections)

    p = sub.add_parser("evaluate", help="cross-validate with extra pseudo/corrected data")
    p.add_argument("--labeled", required=True)
    p.add_argument("--extra", help="pseudo-labeled or corrected dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--folds", type=int, default=5)
    common(p)
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse --help (0) or usage error (1)
        return int(exc.code or 0)
    except DataError as exc:
        _log(f"data error: {exc}")
        return 2
    except FileNotFoundError as exc:
        _log(f"data error: {exc}")
        return 2
    except BackendError as exc:
        _log(f"backend error: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
