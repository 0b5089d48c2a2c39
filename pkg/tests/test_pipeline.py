from __future__ import annotations

import json
import math
from datetime import date
from pathlib import Path

import pytest

from esgnews.config import ConfigError, PipelineConfig, config_from_dict, load_config
from esgnews.pipeline import STAGES, MissingCheckpointError, Pipeline, StageInterrupted, read_jsonl
from esgnews.synthetic import synthetic_corpus, write_synthetic


def _pipeline(tmp: Path, name: str = "work", workers: int = 4) -> Pipeline:
    corpus, companies = write_synthetic(tmp / "input")
    cfg = PipelineConfig(work_dir=tmp / name, corpus=corpus, companies=companies, workers=workers)
    return Pipeline(cfg, mock=True)


def _checkpoint_bytes(p: Pipeline) -> dict[str, bytes]:
    return {f.name: f.read_bytes() for f in sorted(p.work.glob("*.json*"))}


@pytest.fixture(scope="module")
def full_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("run")
    p = _pipeline(tmp)
    reports = p.run_all()
    return p, reports


def test_counts_never_increase(full_run):
    _, reports = full_run
    assert [r.stage for r in reports] == list(STAGES)
    for prev, cur in zip(reports, reports[1:]):
        assert cur.input_count == prev.output_count
    assert all(r.output_count <= r.input_count for r in reports)


def test_retention_product_identity(full_run):
    _, reports = full_run
    product = math.prod(r.retention for r in reports)
    assert product == pytest.approx(1 - reports[-1].reduction_vs_start, abs=1e-12)


def test_dedup_partition_and_reprints(full_run):
    p, _ = full_run
    corpus = synthetic_corpus()
    rows = read_jsonl(p.checkpoint("dedup-paragraphs"))
    kept = {r["id"] for r in rows if r["kept"]}
    for r in rows:
        if not r["kept"]:
            assert r["representative_id"] in kept
    discarded_articles = {r["id"].split("::")[0] for r in rows if not r["kept"]}
    assert discarded_articles == corpus.reprint_ids


def test_entity_gate_drops_exactly_non_org_records(full_run):
    p, _ = full_run
    dropped = {r["id"] for r in read_jsonl(p.checkpoint("ner-filter")) if not r["kept"]}
    assert dropped == synthetic_corpus().non_org_record_ids


def test_conjunction_gate(full_run):
    p, _ = full_run
    expected = synthetic_corpus().expected_filter_pass
    rows = read_jsonl(p.checkpoint("llm-filter"))
    for r in rows:
        assert r["kept"] == expected[r["id"]]
        if "quarantine" not in r:
            assert r["kept"] == (r["final_relevant"] and r["direct_esg"])
    quarantined = [r["id"] for r in rows if "quarantine" in r]
    assert len(quarantined) == 1


def test_summary_duplicates_removed(full_run):
    p, _ = full_run
    corpus = synthetic_corpus()
    rows = {r["id"]: r for r in read_jsonl(p.checkpoint("dedup-summaries"))}
    for rid in corpus.summary_duplicate_ids:
        if rid in rows:
            assert rows[rid]["kept"] is False


def test_dataset_export(full_run):
    p, reports = full_run
    rows = read_jsonl(p.work / "dataset.jsonl")
    assert len(rows) == reports[-1].output_count
    assert all(r["summary_en"].startswith("[EN] ") for r in rows)
    assert all(1 <= r["relevance_score"] <= 10 for r in rows)
    assert {r["sentiment"] for r in rows} <= {"positive", "negative", "neutral"}


def test_two_runs_bit_identical(full_run, tmp_path):
    p, _ = full_run
    other = _pipeline(tmp_path, workers=2)
    other.run_all()
    assert _checkpoint_bytes(other) == _checkpoint_bytes(p)


def test_resume_after_interrupt_is_identical(full_run, tmp_path):
    p, _ = full_run
    q = _pipeline(tmp_path)
    for stage in STAGES[:3]:
        q.run_stage(stage)
    with pytest.raises(StageInterrupted):
        q.run_stage("llm-filter", max_records=100)
    assert len(read_jsonl(q.checkpoint("llm-filter"))) == 100
    # Simulate a torn final write as left behind by a crash.
    with q.checkpoint("llm-filter").open("a") as fh:
        fh.write('{"id": "a01')
    fresh = _pipeline(tmp_path)
    fresh.run_all()
    assert _checkpoint_bytes(fresh) == _checkpoint_bytes(p)


def test_missing_predecessor_is_named(tmp_path):
    p = _pipeline(tmp_path)
    with pytest.raises(MissingCheckpointError, match="dedup-paragraphs"):
        p.run_stage("ner-filter")


def test_rerun_of_completed_stage_is_noop(full_run):
    p, reports = full_run
    before = _checkpoint_bytes(p)
    assert p.run_stage("determine") == reports[5]
    assert _checkpoint_bytes(p) == before


def test_quarantine_file(full_run):
    p, _ = full_run
    rows = read_jsonl(p.work / "quarantine.jsonl")
    assert len(rows) == 1 and rows[0]["stage"] == "llm-filter"


def test_config_loading_and_routing(tmp_path):
    f = tmp_path / "cfg.yaml"
    f.write_text(
        "seed: 3\nworkers: 2\npaths: {corpus: c.jsonl, companies: co.yaml, work_dir: w}\n"
        "date_range: {start: 2023-01-01, end: 2024-12-31}\n"
        "dedup: {paragraphs: {similarity_threshold: 0.9, window_days: 3}}\n"
        "providers:\n"
        "  filter_chat:\n"
        "    - {kind: http, base_url: 'http://x', model: old, until: 2023-12-31}\n"
        "    - {kind: http, base_url: 'http://x', model: new, from: 2024-01-01}\n"
    )
    cfg = load_config(f)
    assert cfg.corpus == tmp_path / "c.jsonl" and cfg.seed == 3
    assert cfg.paragraph_dedup.similarity_threshold == 0.9 and cfg.paragraph_dedup.window.days == 3
    assert cfg.providers.filter_for(date(2023, 6, 1)).model == "old"
    assert cfg.providers.filter_for(date(2024, 6, 1)).model == "new"
    assert cfg.date_range[1].year == 2024
    with pytest.raises(ConfigError):
        config_from_dict({"providers": {"ner": {"kind": "grpc"}}})
    with pytest.raises(ConfigError):
        config_from_dict({"providers": {"ner": {"kind": "http"}}})
    with pytest.raises(ConfigError):
        config_from_dict({"workers": 0})


def test_stage_report_file(full_run):
    p, reports = full_run
    data = json.loads(p.report_path("ingest").read_text())
    assert data["input_count"] == reports[0].input_count
    assert (p.work / "stage_report.csv").read_text().startswith("stage,input_count")
