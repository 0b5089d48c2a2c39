"""Command-line entry point: ``esgnews <subcommand>``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import analytics, evaluation, topics
from .config import EXAMPLE_CONFIG, ConfigError, PipelineConfig, load_config
from .corpus import CorpusError, dump_record
from .pipeline import STAGES, Pipeline, StageError, StageInterrupted
from .providers import ProviderError
from .records import DataValidationError, DatasetRecord, load_dataset
from .synthetic import write_synthetic

logger = logging.getLogger("esgnews")


def _config(args) -> PipelineConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.mock:
        # A mock run without a config works on a freshly generated synthetic corpus.
        work = Path(args.work_dir or "work")
        corpus, companies = write_synthetic(work / "input", args.synthetic_size, args.seed or 0)
        cfg = PipelineConfig(work_dir=work, corpus=corpus, companies=companies, mock=True)
    else:
        raise ConfigError("pass --config, or --mock to run on a synthetic corpus")
    overrides = {}
    if args.work_dir:
        overrides["work_dir"] = Path(args.work_dir)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    return replace(cfg, **overrides) if overrides else cfg


def _print_reports(reports) -> None:
    print(f"{'stage':18s} {'input':>8s} {'output':>8s} {'-prev':>8s} {'-start':>8s}")
    for r in reports:
        print(
            f"{r.stage:18s} {r.input_count:8d} {r.output_count:8d} "
            f"{100 * r.reduction_vs_previous:7.1f}% {100 * r.reduction_vs_start:7.1f}%"
        )


def cmd_stage(args) -> int:
    pipeline = Pipeline(_config(args), mock=args.mock)
    if args.force:
        pipeline.reset(args.command)
    try:
        report = pipeline.run_stage(args.command, max_records=args.max_records)
    except StageInterrupted as exc:
        print(f"interrupted: {exc}; re-run to resume")
        return 3
    _print_reports([report])
    if args.command in ("determine", "translate"):
        print(f"dataset: {pipeline.export_dataset()}")
    return 0


def cmd_run_all(args) -> int:
    pipeline = Pipeline(_config(args), mock=args.mock)
    if args.force:
        pipeline.reset("ingest")
    translate = None if not args.no_translate else False
    reports = pipeline.run_all(translate=translate)
    _print_reports(reports)
    print(f"dataset: {pipeline.work / 'dataset.jsonl'}")
    return 0


def _dataset(args) -> list[DatasetRecord]:
    path = Path(args.dataset)
    if not path.exists():
        raise FileNotFoundError(f"dataset {path} not found")
    return load_dataset(path)


def _embedder(args):
    """Embedding client for topic detection / sampling: from config, or the mock."""
    from .pipeline import Providers

    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = PipelineConfig(mock=True, seed=args.seed or 0)
    return Providers(cfg, [], mock=args.mock or not args.config).embedder


def cmd_report(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "eval":
        return _evaluate(args, out)
    records = _dataset(args)
    if args.company:
        records = [r for r in records if r.company == args.company]
    written: list[Path] = []
    if args.kind == "stats":
        labelled = [r for r in records if r.sentiment and r.aspect]
        analytics.write_stats_csv(analytics.aggregate_counts(labelled), out / "stats.csv")
        analytics.write_company_csv(analytics.company_totals(labelled), out / "companies.csv")
        written += [out / "stats.csv", out / "companies.csv"]
    elif args.kind == "timeseries":
        labelled = [r for r in records if r.sentiment and r.aspect]
        analytics.write_weekly_csv(analytics.weekly_counts(labelled), out / "weekly.csv")
        analytics.write_moving_average_csv(
            analytics.sentiment_moving_average(labelled, args.window_days), out / "moving_average.csv"
        )
        written += [out / "weekly.csv", out / "moving_average.csv"]
    elif args.kind == "relevance":
        analytics.write_relevance_csv(analytics.relevance_histogram(records), out / "relevance.csv")
        written.append(out / "relevance.csv")
    elif args.kind == "topics":
        written += _topics(args, records, out)
    if args.plots and args.kind in ("stats", "timeseries") and records:
        written += analytics.plot_panels([r for r in records if r.sentiment and r.aspect], out)
    for p in written:
        print(p)
    return 0


def _topics(args, records: Sequence[DatasetRecord], out: Path) -> list[Path]:
    embedder = _embedder(args)
    names = sorted({r.company for r in records})
    cfg = topics.ClusterConfig(seed=args.seed or 0, k=args.k)
    summary_rows, monthly_rows = [], []
    for company in names:
        subset = [r for r in records if r.company == company and (r.summary or r.summary_en)]
        for t in topics.detect_topics(subset, embedder, names, cfg, top_k=args.top_k):
            summary_rows.append(
                [
                    company,
                    t.topic_id,
                    t.size,
                    f"{t.mean_relevance:.4f}",
                    f"{t.mean_sentiment:.4f}",
                    " ".join(term for term, _ in t.top_terms),
                ]
            )
            for month, per_aspect in t.monthly.items():
                for aspect, (pos, neg) in per_aspect.items():
                    monthly_rows.append([company, t.topic_id, month, aspect, pos, neg])
    with (out / "topics.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["company", "topic_id", "size", "mean_relevance", "mean_sentiment", "top_terms"])
        w.writerows(summary_rows)
    with (out / "topic_monthly.csv").open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["company", "topic_id", "month", "aspect", "positive", "negative"])
        w.writerows(monthly_rows)
    return [out / "topics.csv", out / "topic_monthly.csv"]


def cmd_sample_eval(args) -> int:
    records = _dataset(args)
    seed = args.seed or 0
    if args.task == "summary":
        picks = evaluation.sample_summary_eval(records, seed)
    else:
        embedder = _embedder(args)
        texts = [r.summary or r.summary_en or "-" for r in records]
        vectors = []
        for i in range(0, len(texts), 64):
            vectors.extend(embedder.embed_texts(texts[i : i + 64]))
        picks = evaluation.sample_classification_eval(records, vectors, seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for i in picks:
            r = records[i]
            row = {"sample_id": r.record_id or r.url or str(i), **r.to_record()}
            fh.write(dump_record(row) + "\n")
    print(f"{len(picks)} samples -> {out}")
    return 0


def _evaluate(args, out: Path) -> int:
    if not args.annotations or not args.llm_labels:
        raise FileNotFoundError("evaluation needs --annotations and --llm-labels")
    annotations = evaluation.load_annotations(args.annotations)
    labels = evaluation.load_llm_labels(args.llm_labels)
    summary = evaluation.load_annotations(args.summary_annotations) if args.summary_annotations else ()
    report = evaluation.evaluate(annotations, labels, summary)
    evaluation.write_report(report, out / "eval_metrics.csv", out / "eval_report.txt")
    print(report.text())
    return 0


def cmd_evaluate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return _evaluate(args, out)


def cmd_init_config(args) -> int:
    path = Path(args.path)
    if path.exists() and not args.force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")
    path.write_text(EXAMPLE_CONFIG, encoding="utf-8")
    print(path)
    return 0


def _pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="pipeline YAML/JSON config")
    p.add_argument("--mock", action="store_true", help="use deterministic mock providers")
    p.add_argument("--work-dir", help="override the checkpoint directory")
    p.add_argument("--seed", type=int, help="override the top-level seed")
    p.add_argument("--workers", type=int, help="override the worker pool size")
    p.add_argument("--synthetic-size", type=int, default=200, help="articles in the mock corpus")
    p.add_argument("--force", action="store_true", help="discard this stage's (and later) checkpoints")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esgnews", description="ESG news extraction pipeline and analysis")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    for stage in STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        _pipeline_args(p)
        p.add_argument("--max-records", type=int, help="stop after this many records (resumable)")
        p.set_defaults(func=cmd_stage)

    p = sub.add_parser("run-all", help="run every stage in order")
    _pipeline_args(p)
    p.add_argument("--no-translate", action="store_true")
    p.set_defaults(func=cmd_run_all)

    p = sub.add_parser("report", help="CSV (and optional plot) reports")
    p.add_argument("kind", choices=["stats", "timeseries", "relevance", "topics", "eval"])
    p.add_argument("--dataset", help="dataset file or directory")
    p.add_argument("--out", default="reports")
    p.add_argument("--company", help="restrict to one company")
    p.add_argument("--plots", action="store_true", help="also write PNG panels (needs matplotlib)")
    p.add_argument("--window-days", type=int, default=30)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--k", type=int, help="fixed number of topic clusters")
    p.add_argument("--config")
    p.add_argument("--mock", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--annotations")
    p.add_argument("--llm-labels")
    p.add_argument("--summary-annotations")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sample-eval", help="draw human-evaluation samples")
    p.add_argument("--dataset", required=True)
    p.add_argument("--task", choices=["summary", "classification"], default="classification")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--mock", action="store_true")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_sample_eval)

    p = sub.add_parser("evaluate", help="agreement and accuracy metrics from annotations")
    p.add_argument("--annotations", required=True)
    p.add_argument("--llm-labels", required=True)
    p.add_argument("--summary-annotations")
    p.add_argument("--out", default="reports")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("init-config", help="write an example config file")
    p.add_argument("path")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_init_config)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (
        ConfigError,
        CorpusError,
        StageError,
        ProviderError,
        DataValidationError,
        evaluation.AnnotationError,
        FileNotFoundError,
        FileExistsError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
