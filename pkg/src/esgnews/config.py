"""Pipeline configuration: one YAML (or JSON) file with every tunable value."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path
from typing import Any

import yaml

from .dedup import DedupConfig
from .entity_filter import DEFAULT_ORG_LABELS
from .topics import ClusterConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ProviderConfig:
    """Endpoint of one model provider; ``kind`` is ``mock`` or ``http``."""

    kind: str = "mock"
    base_url: str = ""
    model: str = ""
    api_key_env: str | None = None
    rate_per_second: float | None = None
    timeout: float = 60.0
    # Optional validity interval (inclusive dates) for date-dependent routing.
    valid_from: date | None = None
    valid_until: date | None = None

    def covers(self, day: date) -> bool:
        if self.valid_from is not None and day < self.valid_from:
            return False
        if self.valid_until is not None and day > self.valid_until:
            return False
        return True


@dataclass(frozen=True)
class ProvidersConfig:
    embedder: ProviderConfig = ProviderConfig()
    ner: ProviderConfig = ProviderConfig()
    filter_chat: tuple[ProviderConfig, ...] = (ProviderConfig(),)
    determine_chat: ProviderConfig = ProviderConfig()
    translate_chat: ProviderConfig = ProviderConfig()

    def filter_for(self, day: date) -> ProviderConfig:
        for p in self.filter_chat:
            if p.covers(day):
                return p
        raise ConfigError(f"no filter provider configured for {day.isoformat()}")


@dataclass(frozen=True)
class PipelineConfig:
    work_dir: Path = Path("work")
    corpus: Path | None = None
    companies: Path | None = None
    start: datetime | None = None
    end: datetime | None = None
    seed: int = 0
    workers: int = 4
    cache_dir: Path | None = None
    paragraph_dedup: DedupConfig = DedupConfig()
    summary_dedup: DedupConfig = DedupConfig()
    org_labels: frozenset[str] = DEFAULT_ORG_LABELS
    ner_candidate_labels: tuple[str, ...] | None = None
    clusters: ClusterConfig = ClusterConfig()
    translate: bool = True
    mock: bool = False
    providers: ProvidersConfig = ProvidersConfig()
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def date_range(self) -> tuple[datetime, datetime] | None:
        if self.start is None and self.end is None:
            return None
        lo = self.start or datetime.min.replace(tzinfo=timezone.utc)
        hi = self.end or datetime.max.replace(tzinfo=timezone.utc)
        return lo, hi


def _as_date(value) -> date | None:
    if value is None or value == "":
        return None
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    return date.fromisoformat(str(value))


def _bound(value, end: bool) -> datetime | None:
    day = _as_date(value)
    if day is None:
        return None
    return datetime.combine(day, time.max.replace(microsecond=0) if end else time.min, tzinfo=timezone.utc)


def _provider(raw: dict | None) -> ProviderConfig:
    raw = dict(raw or {})
    known = {"kind", "base_url", "model", "api_key_env", "rate_per_second", "timeout", "from", "until"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown provider keys: {sorted(unknown)}")
    kind = raw.get("kind", "mock")
    if kind not in ("mock", "http"):
        raise ConfigError(f"provider kind must be mock or http, not {kind!r}")
    if kind == "http" and not (raw.get("base_url") and raw.get("model")):
        raise ConfigError("http provider needs base_url and model")
    return ProviderConfig(
        kind=kind,
        base_url=str(raw.get("base_url", "")),
        model=str(raw.get("model", "")),
        api_key_env=raw.get("api_key_env"),
        rate_per_second=raw.get("rate_per_second"),
        timeout=float(raw.get("timeout", 60.0)),
        valid_from=_as_date(raw.get("from")),
        valid_until=_as_date(raw.get("until")),
    )


def _dedup(raw: dict | None) -> DedupConfig:
    raw = raw or {}
    return DedupConfig(
        similarity_threshold=float(raw.get("similarity_threshold", 0.8)),
        window=timedelta(days=float(raw.get("window_days", 7))),
        aggregation=str(raw.get("aggregation", "max")),
    )


def config_from_dict(data: dict, base_dir: Path | None = None) -> PipelineConfig:
    base_dir = base_dir or Path.cwd()

    def path(value) -> Path | None:
        if value in (None, ""):
            return None
        p = Path(value)
        return p if p.is_absolute() else base_dir / p

    paths = data.get("paths", {})
    providers = data.get("providers", {})
    filter_raw = providers.get("filter_chat", {})
    filter_list = filter_raw if isinstance(filter_raw, list) else [filter_raw]
    dates = data.get("date_range", {})
    ner = data.get("ner", {})
    clusters = data.get("clusters", {})
    cfg = PipelineConfig(
        work_dir=path(paths.get("work_dir", "work")),
        corpus=path(paths.get("corpus")),
        companies=path(paths.get("companies")),
        cache_dir=path(paths.get("cache_dir")),
        start=_bound(dates.get("start"), end=False),
        end=_bound(dates.get("end"), end=True),
        seed=int(data.get("seed", 0)),
        workers=int(data.get("workers", 4)),
        paragraph_dedup=_dedup(data.get("dedup", {}).get("paragraphs")),
        summary_dedup=_dedup(data.get("dedup", {}).get("summaries")),
        org_labels=frozenset(ner.get("org_labels", sorted(DEFAULT_ORG_LABELS))),
        ner_candidate_labels=tuple(ner["candidate_labels"]) if ner.get("candidate_labels") else None,
        clusters=ClusterConfig(
            k=clusters.get("k"),
            max_k=int(clusters.get("max_k", 30)),
            min_docs=int(clusters.get("min_docs", 4)),
            min_cluster_size=int(clusters.get("min_cluster_size", 1)),
            seed=int(data.get("seed", 0)),
        ),
        translate=bool(data.get("translate", True)),
        mock=bool(data.get("mock", False)),
        providers=ProvidersConfig(
            embedder=_provider(providers.get("embedder")),
            ner=_provider(providers.get("ner")),
            filter_chat=tuple(_provider(p) for p in filter_list),
            determine_chat=_provider(providers.get("determine_chat")),
            translate_chat=_provider(providers.get("translate_chat")),
        ),
    )
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if cfg.start and cfg.end and cfg.start > cfg.end:
        raise ConfigError("date_range start after end")
    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    data = json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return config_from_dict(data, path.parent)


EXAMPLE_CONFIG = """\
# Pipeline configuration. Relative paths resolve against this file.
seed: 0
workers: 4
paths:
  corpus: corpus.jsonl
  companies: companies.yaml
  work_dir: work
  cache_dir: work/cache
date_range:
  start: 2023-01-01
  end: 2024-12-31
dedup:
  paragraphs: {similarity_threshold: 0.8, window_days: 7, aggregation: max}
  summaries: {similarity_threshold: 0.8, window_days: 7, aggregation: max}
ner:
  org_labels: [organization, company]
clusters:
  max_k: 30
  min_docs: 4
translate: true
providers:
  embedder: {kind: http, base_url: "http://localhost:8000/v1", model: embedding-model, api_key_env: ESGNEWS_API_KEY}
  ner: {kind: http, base_url: "http://localhost:8001", model: ner-model}
  filter_chat:
    - {kind: http, base_url: "http://localhost:8000/v1", model: filter-model-a, api_key_env: ESGNEWS_API_KEY, until: 2023-12-31}
    - {kind: http, base_url: "http://localhost:8000/v1", model: filter-model-b, api_key_env: ESGNEWS_API_KEY, from: 2024-01-01}
  determine_chat: {kind: http, base_url: "http://localhost:8000/v1", model: determination-model, api_key_env: ESGNEWS_API_KEY}
  translate_chat: {kind: http, base_url: "http://localhost:8000/v1", model: determination-model, api_key_env: ESGNEWS_API_KEY}
"""
