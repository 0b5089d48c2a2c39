"""Determination records in the released-dataset column layout, plus a tolerant loader."""

from __future__ import annotations

import ast
import csv
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Iterator

from .corpus import dump_record, format_timestamp, parse_timestamp
from .llm_stages.parsing import ParseError, normalize_aspect, normalize_sentiment, parse_bool

logger = logging.getLogger(__name__)

DATASET_COLUMNS = (
    "company",
    "url",
    "published_at",
    "summary",
    "summary_en",
    "sentiment",
    "aspect",
    "relevance_score",
    "keywords",
)

# Accepted source column names per field, first match wins.
COLUMN_ALIASES = {
    "company": ("company", "company_name", "company_id", "unternehmen", "target_company"),
    "url": ("url", "link", "article_url"),
    "published_at": ("published_at", "date", "published", "publish_date", "timestamp", "datetime", "time"),
    "summary": ("summary", "summary_de", "zusammenfassung"),
    "summary_en": ("summary_en", "summary_english", "english_summary", "translation"),
    "sentiment": ("sentiment", "esg_sentiment"),
    "aspect": ("aspect", "esg_aspect", "esg_category"),
    "relevance_score": ("relevance_score", "relevancy_score", "relevance", "score"),
    "keywords": ("keywords", "keyword_list"),
    "relevant": ("relevant", "is_relevant", "relevancy"),
    "record_id": ("id", "record_id", "article_id"),
}


class DataValidationError(ValueError):
    pass


@dataclass
class DatasetRecord:
    company: str
    published_at: datetime
    sentiment: str | None
    aspect: str | None
    relevance_score: int | None
    url: str = ""
    summary: str = ""
    summary_en: str | None = None
    keywords: list[str] = field(default_factory=list)
    record_id: str = ""

    def to_record(self) -> dict:
        return {
            "company": self.company,
            "url": self.url,
            "published_at": format_timestamp(self.published_at),
            "summary": self.summary,
            "summary_en": self.summary_en,
            "sentiment": self.sentiment,
            "aspect": self.aspect,
            "relevance_score": self.relevance_score,
            "keywords": list(self.keywords),
        }


def _pick(row: dict, name: str):
    lowered = {str(k).strip().lower(): v for k, v in row.items()}
    for alias in COLUMN_ALIASES[name]:
        if alias in lowered:
            value = lowered[alias]
            if value is None or (isinstance(value, float) and value != value):
                return None
            if isinstance(value, str) and not value.strip():
                return None
            return value
    return None


def _keywords(value) -> list[str]:
    if value is None:
        return []
    if isinstance(value, list):
        items = value
    else:
        text = str(value).strip()
        items = None
        if text.startswith("["):
            for loader in (json.loads, ast.literal_eval):
                try:
                    items = list(loader(text))
                    break
                except (ValueError, SyntaxError):
                    continue
        if items is None:
            items = text.split(",")
    out: list[str] = []
    for item in items:
        kw = str(item).strip()
        if kw and kw not in out:
            out.append(kw)
    return out


def _score(value) -> int | None:
    if value is None:
        return None
    try:
        number = float(value)
    except (TypeError, ValueError) as exc:
        raise DataValidationError(f"relevance score {value!r} is not a number") from exc
    if number != int(number):
        raise DataValidationError(f"relevance score {value!r} is not an integer")
    return int(number)


def record_from_row(row: dict) -> DatasetRecord | None:
    """Normalise one source row; returns None for rows flagged as not relevant."""
    relevant = _pick(row, "relevant")
    if relevant is not None and not isinstance(relevant, bool):
        try:
            relevant = parse_bool(str(relevant))
        except ParseError:
            relevant = None
    if relevant is False:
        return None
    company = _pick(row, "company")
    ts = _pick(row, "published_at")
    if company is None or ts is None:
        raise DataValidationError("row lacks company or publication date")
    sentiment = _pick(row, "sentiment")
    aspect = _pick(row, "aspect")
    try:
        sentiment = normalize_sentiment(str(sentiment)) if sentiment is not None else None
        aspect = normalize_aspect(str(aspect)) if aspect is not None else None
    except ParseError as exc:
        raise DataValidationError(str(exc)) from exc
    summary_en = _pick(row, "summary_en")
    return DatasetRecord(
        company=str(company).strip(),
        published_at=parse_timestamp(str(ts).strip().replace(" ", "T", 1)),
        sentiment=sentiment,
        aspect=aspect,
        relevance_score=_score(_pick(row, "relevance_score")),
        url=str(_pick(row, "url") or ""),
        summary=str(_pick(row, "summary") or ""),
        summary_en=str(summary_en) if summary_en is not None else None,
        keywords=_keywords(_pick(row, "keywords")),
        record_id=str(_pick(row, "record_id") or ""),
    )


def _rows(path: Path) -> Iterator[dict]:
    suffix = path.suffix.lower()
    if suffix in (".jsonl", ".ndjson"):
        with path.open(encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    yield json.loads(line)
    elif suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        if isinstance(data, dict):
            data = data.get("data") or data.get("records") or next(iter(data.values()))
        yield from data
    elif suffix in (".csv", ".tsv"):
        with path.open(encoding="utf-8-sig", newline="") as fh:
            yield from csv.DictReader(fh, delimiter="\t" if suffix == ".tsv" else ",")
    else:
        raise DataValidationError(f"unsupported dataset format {path.suffix!r}")


def load_dataset(path: str | Path) -> list[DatasetRecord]:
    """Load determinations from CSV/TSV/JSON/JSONL; a directory loads every such file in it."""
    path = Path(path)
    if path.is_dir():
        files = sorted(
            p for p in path.iterdir() if p.suffix.lower() in (".csv", ".tsv", ".json", ".jsonl", ".ndjson")
        )
    else:
        files = [path]
    records = []
    for f in files:
        for row in _rows(f):
            rec = record_from_row(row)
            if rec is not None:
                records.append(rec)
    return records


def write_dataset(records: Iterable[DatasetRecord], path: str | Path) -> int:
    n = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dump_record(rec.to_record()) + "\n")
            n += 1
    return n
