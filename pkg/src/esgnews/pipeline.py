"""Resumable stage runner with JSON-lines checkpoints and per-stage volume reports."""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .config import PipelineConfig, ProviderConfig
from .corpus import (
    Article,
    CompanySpec,
    CompanyStream,
    RecordError,
    assign_companies,
    dump_record,
    filter_language,
    format_timestamp,
    load_company_specs,
    load_corpus,
    match_keywords,
)
from .dedup import SummaryItem, dedup_paragraph_stage, dedup_summary_stage
from .entity_filter import entity_gate, keyword_sentences
from .llm_stages import (
    StageFailure,
    esg_mock_responder,
    run_determination,
    run_filter_stage,
    translate_summary,
)
from .providers import (
    ChatClient,
    EmbeddingClient,
    HttpChat,
    HttpEmbedder,
    HttpNer,
    MockChat,
    MockEmbedder,
    MockNer,
    NerClient,
    ProviderError,
    ResponseCache,
)
from .records import DATASET_COLUMNS
from .synthetic import NON_ORG_PHRASES

logger = logging.getLogger(__name__)

STAGES = (
    "ingest",
    "dedup-paragraphs",
    "ner-filter",
    "llm-filter",
    "dedup-summaries",
    "determine",
    "translate",
)
PREDECESSOR = {stage: STAGES[i - 1] for i, stage in enumerate(STAGES) if i}


class StageError(RuntimeError):
    pass


class MissingCheckpointError(StageError):
    def __init__(self, stage: str, required: str):
        super().__init__(f"stage {stage!r} needs the completed {required!r} checkpoint; run {required} first")
        self.stage = stage
        self.required = required


class StageInterrupted(StageError):
    """Raised when a run stops early on request; the checkpoint stays resumable."""


@dataclass(frozen=True)
class StageReport:
    stage: str
    input_count: int
    output_count: int
    reduction_vs_previous: float
    reduction_vs_start: float
    quarantined: int = 0
    provider_calls: int = 0

    @property
    def retention(self) -> float:
        return 1.0 - self.reduction_vs_previous


def _reduction(after: int, before: int) -> float:
    return 1.0 - after / before if before else 0.0


# ------------------------------------------------------------- providers


class Providers:
    """Clients for every stage, built from config (or mocks)."""

    def __init__(self, cfg: PipelineConfig, specs: Sequence[CompanySpec], mock: bool):
        self.cfg = cfg
        self.mock = mock or cfg.mock
        table = {kw: "organization" for spec in specs for kw in spec.keywords}
        table.update(NON_ORG_PHRASES)
        self._ner_table = table
        self._chats: dict[str, ChatClient] = {}
        p = cfg.providers
        self.embedder = EmbeddingClient(self._backend("embed", p.embedder), rate_per_second=p.embedder.rate_per_second)
        self.ner = NerClient(self._backend("ner", p.ner), rate_per_second=p.ner.rate_per_second)

    def _backend(self, role: str, pc: ProviderConfig):
        if self.mock or pc.kind == "mock":
            if role == "embed":
                return MockEmbedder(seed=self.cfg.seed)
            if role == "ner":
                return MockNer(self._ner_table)
            return MockChat(esg_mock_responder, seed=self.cfg.seed, provider_id=f"mock-{role}")
        kwargs = dict(api_key_env=pc.api_key_env, timeout=pc.timeout)
        if role == "embed":
            return HttpEmbedder(pc.base_url, pc.model, **kwargs)
        if role == "ner":
            return HttpNer(pc.base_url, pc.model, **kwargs)
        return HttpChat(pc.base_url, pc.model, provider_id=f"{role}:{pc.model}", **kwargs)

    def chat(self, role: str, pc: ProviderConfig) -> ChatClient:
        key = f"{role}|{pc.model}|{pc.valid_from}|{pc.valid_until}"
        if key not in self._chats:
            cache = ResponseCache(self.cfg.cache_dir) if self.cfg.cache_dir else None
            self._chats[key] = ChatClient(
                self._backend(role, pc), cache=cache, rate_per_second=pc.rate_per_second
            )
        return self._chats[key]

    def filter_chat(self, article: Article) -> ChatClient:
        return self.chat("filter", self.cfg.providers.filter_for(article.published_at.date()))

    def chat_calls(self) -> int:
        return sum(c.calls for c in self._chats.values())


# --------------------------------------------------------- checkpoint I/O


def read_jsonl(path: Path, repair: bool = False) -> list[dict]:
    """Read a checkpoint; a torn final line (interrupted write) is dropped, and cut off if ``repair``."""
    if not path.exists():
        return []
    raw = path.read_text(encoding="utf-8")
    lines = raw.split("\n")
    rows: list[dict] = []
    good_len = 0
    for line in lines:
        if not line.strip():
            good_len += len(line) + 1
            continue
        try:
            rows.append(json.loads(line))
        except ValueError:
            if repair:
                logger.warning("%s: dropping torn trailing record", path)
                with path.open("r+", encoding="utf-8") as fh:
                    fh.truncate(len(raw[:good_len].encode("utf-8")))
            break
        good_len += len(line) + 1
    return rows


def _write_atomic(path: Path, rows: Iterable[dict]) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(dump_record(row) + "\n")
    os.replace(tmp, path)


def _quarantine_row(stage: str, record_id: str, failure: StageFailure | None = None, error: str = "") -> dict:
    if failure is not None:
        q = failure.record.to_record()
    else:
        q = {"article_id": record_id, "stage": stage, "attempts": 1, "last_error": error, "raw_response": ""}
    return {"id": record_id, "kept": False, "quarantine": q}


# ---------------------------------------------------------------- pipeline


class Pipeline:
    def __init__(self, cfg: PipelineConfig, mock: bool = False, specs: Sequence[CompanySpec] | None = None):
        self.cfg = cfg
        self.work = Path(cfg.work_dir)
        self.work.mkdir(parents=True, exist_ok=True)
        if specs is None:
            if cfg.companies is None:
                raise StageError("config has no companies file")
            specs = load_company_specs(cfg.companies)
        self.specs = {s.company_id: s for s in specs}
        self.names = {s.company_id: s.display_name for s in specs}
        self.providers = Providers(cfg, list(self.specs.values()), mock)
        self._articles: dict[str, Article] | None = None

    # paths -----------------------------------------------------------
    def checkpoint(self, stage: str) -> Path:
        return self.work / f"{stage}.jsonl"

    def report_path(self, stage: str) -> Path:
        return self.work / f"{stage}.report.json"

    def is_complete(self, stage: str) -> bool:
        return self.report_path(stage).exists() and self.checkpoint(stage).exists()

    def load_report(self, stage: str) -> StageReport:
        return StageReport(**json.loads(self.report_path(stage).read_text(encoding="utf-8")))

    def reports(self) -> list[StageReport]:
        return [self.load_report(s) for s in STAGES if self.is_complete(s)]

    def reset(self, stage: str) -> None:
        """Remove the outputs of ``stage`` and every later stage."""
        for s in STAGES[STAGES.index(stage) :]:
            for p in (self.checkpoint(s), self.report_path(s), self.work / f"{s}.calls.json"):
                p.unlink(missing_ok=True)
        self._articles = None

    # helpers ---------------------------------------------------------
    def _require(self, stage: str) -> None:
        prev = PREDECESSOR.get(stage)
        if prev is not None and not self.is_complete(prev):
            raise MissingCheckpointError(stage, prev)

    def articles(self) -> dict[str, Article]:
        if self._articles is None:
            self._articles = {
                a.record_id: a for a in (Article.from_record(r) for r in read_jsonl(self.checkpoint("ingest")))
            }
        return self._articles

    def kept(self, stage: str) -> list[dict]:
        return [r for r in read_jsonl(self.checkpoint(stage)) if r.get("kept", True)]

    def _stream(self, record_id: str) -> CompanyStream:
        article = self.articles()[record_id]
        return CompanyStream(article, match_keywords(article, self.specs[article.company_id]))

    def _finish(self, stage: str, input_count: int, output_count: int, quarantined: int = 0, calls: int = 0) -> StageReport:
        if output_count > input_count:
            raise StageError(f"{stage}: output {output_count} exceeds input {input_count}")
        start = input_count if stage == "ingest" else self.load_report("ingest").input_count
        report = StageReport(
            stage,
            input_count,
            output_count,
            _reduction(output_count, input_count),
            _reduction(output_count, start),
            quarantined,
            calls,
        )
        tmp = self.report_path(stage).with_suffix(".tmp")
        tmp.write_text(json.dumps(asdict(report), indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, self.report_path(stage))
        self._rebuild_quarantine()
        logger.info(
            "%s: %d -> %d (-%.1f%%, -%.1f%% overall)",
            stage,
            input_count,
            output_count,
            100 * report.reduction_vs_previous,
            100 * report.reduction_vs_start,
        )
        return report

    def _rebuild_quarantine(self) -> None:
        rows = [
            r["quarantine"]
            for s in STAGES
            for r in read_jsonl(self.checkpoint(s))
            if r.get("quarantine")
        ]
        _write_atomic(self.work / "quarantine.jsonl", rows)

    def _per_record(
        self,
        stage: str,
        inputs: Sequence[str],
        work: Callable[[str], dict],
        max_records: int | None,
    ) -> list[dict]:
        """Apply ``work`` to pending ids in input order, appending results chunk by chunk."""
        path = self.checkpoint(stage)
        calls_path = self.work / f"{stage}.calls.json"
        if not path.exists():
            calls_path.unlink(missing_ok=True)
        done_rows = read_jsonl(path, repair=True)
        done = [r["id"] for r in done_rows]
        if done != list(inputs[: len(done)]):
            raise StageError(f"{path} does not match the current {PREDECESSOR[stage]} output; reset {stage}")
        pending = list(inputs[len(done) :])
        interrupted = max_records is not None and max_records < len(pending)
        if interrupted:
            pending = pending[:max_records]
        chunk = max(1, self.cfg.workers * 4)
        calls_before = self.providers.chat_calls()
        with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool, path.open("a", encoding="utf-8") as fh:
            for i in range(0, len(pending), chunk):
                for row in pool.map(work, pending[i : i + chunk]):
                    fh.write(dump_record(row) + "\n")
                fh.flush()
        # Provider calls are summed over resumed segments so a resumed run reports the same total.
        total = self.stage_calls(stage) + self.providers.chat_calls() - calls_before
        calls_path.write_text(json.dumps({"provider_calls": total}) + "\n", encoding="utf-8")
        if interrupted:
            raise StageInterrupted(f"{stage}: stopped after {max_records} records")
        return read_jsonl(path)

    def stage_calls(self, stage: str) -> int:
        """Chat calls spent on ``stage`` so far, across interrupted and resumed segments."""
        path = self.work / f"{stage}.calls.json"
        return json.loads(path.read_text(encoding="utf-8"))["provider_calls"] if path.exists() else 0

    # stages ----------------------------------------------------------
    def run_stage(self, stage: str, max_records: int | None = None) -> StageReport:
        if stage not in STAGES:
            raise StageError(f"unknown stage {stage!r}; choose from {', '.join(STAGES)}")
        if self.is_complete(stage):
            logger.info("%s already complete; reusing checkpoint", stage)
            return self.load_report(stage)
        self._require(stage)
        runner = getattr(self, "_run_" + stage.replace("-", "_"))
        return runner(max_records) if stage not in ("ingest", "dedup-paragraphs", "dedup-summaries") else runner()

    def run_all(self, translate: bool | None = None) -> list[StageReport]:
        translate = self.cfg.translate if translate is None else translate
        stages = STAGES if translate else STAGES[:-1]
        reports = [self.run_stage(s) for s in stages]
        self.export_dataset()
        write_stage_reports(reports, self.work / "stage_report.csv")
        return reports

    def _run_ingest(self) -> StageReport:
        if self.cfg.corpus is None:
            raise StageError("config has no corpus path")
        errors: list[RecordError] = []
        candidates = 0
        rows = []
        for article in load_corpus(self.cfg.corpus, errors, self.cfg.date_range):
            streams = assign_companies(article, self.specs.values()) if filter_language(article) else []
            candidates += max(1, len(streams))
            rows.extend(s.article.to_record() for s in streams)
        candidates += len(errors)
        _write_atomic(self.checkpoint("ingest"), rows)
        _write_atomic(self.work / "ingest.errors.jsonl", (asdict(e) for e in errors))
        self._articles = None
        return self._finish("ingest", candidates, len(rows))

    def _run_dedup_paragraphs(self) -> StageReport:
        ids = list(self.articles())
        outcome = dedup_paragraph_stage([self._stream(i) for i in ids], self.providers.embedder, self.cfg.paragraph_dedup)
        outcome.check_partition(ids)
        kept = set(outcome.kept_ids)
        rows = []
        for i in ids:
            row = {"id": i, "kept": i in kept}
            if i in outcome.discarded:
                row["representative_id"] = outcome.discarded[i]
            if i in outcome.excluded:
                row["excluded"] = True
            rows.append(row)
        _write_atomic(self.checkpoint("dedup-paragraphs"), rows)
        return self._finish("dedup-paragraphs", len(ids), len(kept))

    def _run_ner_filter(self, max_records: int | None = None) -> StageReport:
        inputs = [r["id"] for r in self.kept("dedup-paragraphs")]
        cfg = self.cfg
        labels = list(cfg.ner_candidate_labels) if cfg.ner_candidate_labels else None

        def work(record_id: str) -> dict:
            stream = self._stream(record_id)
            try:
                gate = entity_gate(
                    keyword_sentences(stream.article, stream.matches),
                    self.providers.ner,
                    cfg.org_labels,
                    labels,
                )
            except ProviderError as exc:
                return _quarantine_row("ner-filter", record_id, error=str(exc))
            return {"id": record_id, "kept": gate.keep, "labels": [list(x) for x in gate.labels]}

        rows = self._per_record("ner-filter", inputs, work, max_records)
        return self._finish(
            "ner-filter", len(inputs), sum(r["kept"] for r in rows), sum("quarantine" in r for r in rows)
        )

    def _run_llm_filter(self, max_records: int | None = None) -> StageReport:
        inputs = [r["id"] for r in self.kept("ner-filter")]

        def work(record_id: str) -> dict:
            article = self.articles()[record_id]
            company = self.specs[article.company_id]
            chat = self.providers.filter_chat(article)
            try:
                v = run_filter_stage(article, company, chat, self.names)
            except StageFailure as failure:
                return _quarantine_row("llm-filter", record_id, failure)
            return {
                "id": record_id,
                "kept": v.passes,
                "provider": chat.provider_id,
                "initial_relevant": v.initial_relevant,
                "final_relevant": v.final_relevant,
                "direct_esg": v.direct_esg,
                "explanation": v.explanation,
                "summary": v.summary,
            }

        rows = self._per_record("llm-filter", inputs, work, max_records)
        return self._finish(
            "llm-filter",
            len(inputs),
            sum(r["kept"] for r in rows),
            sum("quarantine" in r for r in rows),
            self.stage_calls("llm-filter"),
        )

    def _run_dedup_summaries(self) -> StageReport:
        passed = self.kept("llm-filter")
        articles = self.articles()
        items = [
            SummaryItem(r["id"], articles[r["id"]].company_id, articles[r["id"]].published_at, r.get("summary", ""))
            for r in passed
        ]
        outcome = dedup_summary_stage(items, self.providers.embedder, self.cfg.summary_dedup)
        ids = [r["id"] for r in passed]
        outcome.check_partition(ids)
        kept = set(outcome.kept_ids)
        rows = []
        for i in ids:
            row = {"id": i, "kept": i in kept}
            if i in outcome.discarded:
                row["representative_id"] = outcome.discarded[i]
            if i in outcome.excluded:
                row.update(_quarantine_row("dedup-summaries", i, error="empty summary"))
            rows.append(row)
        _write_atomic(self.checkpoint("dedup-summaries"), rows)
        return self._finish("dedup-summaries", len(ids), len(kept), len(outcome.excluded))

    def _determination_row(self, record_id: str, det) -> dict:
        article = self.articles()[record_id]
        return {
            "id": record_id,
            "kept": det.relevant,
            "relevant": det.relevant,
            "company": self.names[article.company_id],
            "url": article.url,
            "published_at": format_timestamp(article.published_at),
            "summary": det.summary,
            "summary_en": det.summary_en,
            "sentiment": det.sentiment,
            "aspect": det.aspect,
            "relevance_score": det.relevance_score,
            "keywords": list(det.keywords),
        }

    def _run_determine(self, max_records: int | None = None) -> StageReport:
        inputs = [r["id"] for r in self.kept("dedup-summaries")]
        chat = self.providers.chat("determine", self.cfg.providers.determine_chat)

        def work(record_id: str) -> dict:
            article = self.articles()[record_id]
            try:
                det = run_determination(article, self.specs[article.company_id], chat, self.names)
            except StageFailure as failure:
                return _quarantine_row("determine", record_id, failure)
            return self._determination_row(record_id, det)

        rows = self._per_record("determine", inputs, work, max_records)
        return self._finish(
            "determine",
            len(inputs),
            sum(r["kept"] for r in rows),
            sum("quarantine" in r for r in rows),
            self.stage_calls("determine"),
        )

    def _run_translate(self, max_records: int | None = None) -> StageReport:
        determined = {r["id"]: r for r in self.kept("determine")}
        inputs = list(determined)
        chat = self.providers.chat("translate", self.cfg.providers.translate_chat)

        def work(record_id: str) -> dict:
            row = dict(determined[record_id])
            row["summary_en"] = translate_summary(row["summary"], chat)
            return row

        rows = self._per_record("translate", inputs, work, max_records)
        return self._finish("translate", len(inputs), len(rows), 0, self.stage_calls("translate"))

    # outputs -----------------------------------------------------------
    def final_stage(self) -> str:
        for stage in ("translate", "determine"):
            if self.is_complete(stage):
                return stage
        raise MissingCheckpointError("export", "determine")

    def export_dataset(self, path: Path | None = None) -> Path:
        """Write the relevant determinations in dataset column layout."""
        path = path or self.work / "dataset.jsonl"
        rows = [
            {"id": r["id"], **{c: r.get(c) for c in DATASET_COLUMNS}}
            for r in self.kept(self.final_stage())
        ]
        _write_atomic(path, rows)
        return path


def write_stage_reports(reports: Sequence[StageReport], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["stage", "input_count", "output_count", "reduction_vs_previous", "reduction_vs_start", "quarantined", "provider_calls"]
        )
        for r in reports:
            writer.writerow(
                [
                    r.stage,
                    r.input_count,
                    r.output_count,
                    f"{r.reduction_vs_previous:.4f}",
                    f"{r.reduction_vs_start:.4f}",
                    r.quarantined,
                    r.provider_calls,
                ]
            )
