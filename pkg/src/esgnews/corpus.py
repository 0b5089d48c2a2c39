"""Raw corpus ingestion: article records, company keyword specs and keyword matching."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Iterator

import yaml

logger = logging.getLogger(__name__)

KEPT_LANGUAGES = frozenset({"en", "de"})
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"
_RECORD_FIELDS = ("id", "url", "title", "paragraphs", "published_at", "language")


class CorpusError(Exception):
    """Raised when a corpus or company file cannot be read at all."""


@dataclass(frozen=True)
class Article:
    article_id: str
    url: str
    title: str
    paragraphs: tuple[str, ...]
    published_at: datetime
    language: str
    company_id: str = ""

    def __post_init__(self) -> None:
        if not self.article_id:
            raise ValueError("article id must be non-empty")
        if not self.paragraphs:
            raise ValueError("article has no paragraphs")
        if any(not isinstance(p, str) or not p.strip() for p in self.paragraphs):
            raise ValueError("paragraphs must be non-empty strings")
        if self.published_at.tzinfo is None:
            raise ValueError("published_at must be timezone-aware")

    @property
    def record_id(self) -> str:
        """Identifier of the (article, company) record flowing through the pipeline."""
        return f"{self.article_id}::{self.company_id}" if self.company_id else self.article_id

    def for_company(self, company_id: str) -> Article:
        return replace(self, company_id=company_id)

    def to_record(self) -> dict:
        record = {
            "id": self.article_id,
            "url": self.url,
            "title": self.title,
            "paragraphs": list(self.paragraphs),
            "published_at": format_timestamp(self.published_at),
            "language": self.language,
        }
        if self.company_id:
            record["company_id"] = self.company_id
        return record

    @classmethod
    def from_record(cls, record: dict) -> Article:
        if not isinstance(record, dict):
            raise ValueError("record is not an object")
        missing = [k for k in _RECORD_FIELDS if k not in record]
        if missing:
            raise ValueError(f"missing fields: {', '.join(missing)}")
        paragraphs = record["paragraphs"]
        if not isinstance(paragraphs, list):
            raise ValueError("paragraphs must be a list")
        language = record["language"]
        if not isinstance(language, str) or not language:
            raise ValueError("language must be a non-empty string")
        return cls(
            article_id=str(record["id"]),
            url=str(record["url"]),
            title=str(record["title"]),
            paragraphs=tuple(paragraphs),
            published_at=parse_timestamp(record["published_at"]),
            language=language.lower(),
            company_id=str(record.get("company_id", "")),
        )


@dataclass(frozen=True)
class CompanySpec:
    company_id: str
    display_name: str
    keywords: tuple[str, ...]
    related_company_ids: tuple[str, ...] = ()
    # Keywords matched regardless of case (lowercase brand names).
    case_insensitive_keywords: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.keywords:
            raise ValueError(f"{self.company_id}: keywords must be non-empty")
        if any(not k or not k.strip() for k in self.keywords):
            raise ValueError(f"{self.company_id}: empty keyword")
        if len(set(self.keywords)) != len(self.keywords):
            raise ValueError(f"{self.company_id}: duplicate keywords")
        if self.company_id in self.related_company_ids:
            raise ValueError(f"{self.company_id}: company listed as related to itself")
        unknown = self.case_insensitive_keywords - set(self.keywords)
        if unknown:
            raise ValueError(f"{self.company_id}: case flag on unknown keywords {sorted(unknown)}")


@dataclass(frozen=True)
class KeywordMatch:
    article_id: str
    paragraph_index: int
    keyword: str
    char_span: tuple[int, int]


@dataclass(frozen=True)
class MatchPolicy:
    word_boundary: bool = True
    case_sensitive: bool = True

    def is_case_sensitive(self, keyword: str, spec: CompanySpec) -> bool:
        return self.case_sensitive and keyword not in spec.case_insensitive_keywords


@dataclass
class RecordError:
    line_no: int
    message: str


def parse_timestamp(value: str) -> datetime:
    """Parse an RFC 3339 timestamp; naive values are taken as UTC. Truncates to seconds."""
    if not isinstance(value, str) or not value:
        raise ValueError("published_at must be a non-empty string")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError as exc:
        raise ValueError(f"invalid timestamp {value!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(TIMESTAMP_FORMAT)


def dump_record(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def load_corpus(
    path: str | Path,
    errors: list[RecordError] | None = None,
    date_range: tuple[datetime, datetime] | None = None,
) -> Iterator[Article]:
    """Yield validated articles from a JSON-lines file in file order.

    Malformed records are appended to ``errors`` (with their 1-based line
    number) instead of stopping the stream. Blank lines are ignored.
    """
    path = Path(path)
    try:
        handle = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc}") from exc
    bad = 0
    with handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                article = Article.from_record(json.loads(line))
                if date_range is not None and not (
                    date_range[0] <= article.published_at <= date_range[1]
                ):
                    raise ValueError("published_at outside corpus date range")
            except (ValueError, TypeError) as exc:
                bad += 1
                logger.warning("%s:%d: %s", path, line_no, exc)
                if errors is not None:
                    errors.append(RecordError(line_no, str(exc)))
                continue
            yield article
    if bad:
        logger.info("%s: %d malformed records skipped", path, bad)


def write_corpus(articles: Iterable[Article], out: str | Path | IO[str]) -> int:
    """Write articles as JSON lines; returns the number written."""
    if isinstance(out, (str, Path)):
        with Path(out).open("w", encoding="utf-8") as fh:
            return write_corpus(articles, fh)
    n = 0
    for article in articles:
        out.write(dump_record(article.to_record()) + "\n")
        n += 1
    return n


def load_company_specs(path: str | Path) -> list[CompanySpec]:
    """Read company specs from a YAML or JSON file.

    Expected layout: ``{"companies": [{"id", "name", "keywords", "related"}]}``.
    A keyword may be a plain string or ``{"keyword": str, "case_insensitive": bool}``.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise CorpusError(f"cannot read company specs {path}: {exc}") from exc
    entries = raw.get("companies", []) if isinstance(raw, dict) else raw
    specs = [company_spec_from_dict(entry) for entry in entries or []]
    ids = [s.company_id for s in specs]
    if len(set(ids)) != len(ids):
        raise CorpusError("duplicate company ids in company specs")
    return specs


def company_spec_from_dict(entry: dict) -> CompanySpec:
    keywords: list[str] = []
    insensitive: set[str] = set()
    for kw in entry.get("keywords", []):
        if isinstance(kw, dict):
            keywords.append(kw["keyword"])
            if kw.get("case_insensitive"):
                insensitive.add(kw["keyword"])
        else:
            keywords.append(str(kw))
    company_id = str(entry["id"])
    return CompanySpec(
        company_id=company_id,
        display_name=str(entry.get("name", company_id)),
        keywords=tuple(keywords),
        related_company_ids=tuple(entry.get("related", ())),
        case_insensitive_keywords=frozenset(insensitive),
    )


def company_spec_to_dict(spec: CompanySpec) -> dict:
    keywords: list = [
        {"keyword": k, "case_insensitive": True} if k in spec.case_insensitive_keywords else k
        for k in spec.keywords
    ]
    return {
        "id": spec.company_id,
        "name": spec.display_name,
        "keywords": keywords,
        "related": list(spec.related_company_ids),
    }


def filter_language(article: Article) -> bool:
    return article.language in KEPT_LANGUAGES


def _keyword_pattern(keyword: str, policy: MatchPolicy, case_sensitive: bool) -> re.Pattern:
    body = re.escape(keyword)
    if policy.word_boundary:
        body = rf"(?<!\w){body}(?!\w)"
    # Lookahead wrapper so overlapping occurrences are all reported.
    return re.compile(rf"(?=({body}))", 0 if case_sensitive else re.IGNORECASE)


def match_keywords(
    article: Article, spec: CompanySpec, policy: MatchPolicy = MatchPolicy()
) -> list[KeywordMatch]:
    """Every occurrence of every keyword of ``spec`` in the article's paragraphs.

    Results are sorted by (paragraph, start, end, keyword), so they do not
    depend on the order of the keyword list.
    """
    matches = []
    for keyword in spec.keywords:
        pattern = _keyword_pattern(keyword, policy, policy.is_case_sensitive(keyword, spec))
        for idx, paragraph in enumerate(article.paragraphs):
            for m in pattern.finditer(paragraph):
                matches.append(
                    KeywordMatch(article.article_id, idx, keyword, (m.start(1), m.end(1)))
                )
    matches.sort(key=lambda m: (m.paragraph_index, m.char_span, m.keyword))
    return matches


def span_matches_keyword(
    article: Article, match: KeywordMatch, spec: CompanySpec, policy: MatchPolicy = MatchPolicy()
) -> bool:
    start, end = match.char_span
    text = article.paragraphs[match.paragraph_index][start:end]
    if policy.is_case_sensitive(match.keyword, spec):
        return text == match.keyword
    return text.lower() == match.keyword.lower()


@dataclass
class CompanyStream:
    """One (article, company) record with the keyword matches that selected it."""

    article: Article
    matches: list[KeywordMatch] = field(default_factory=list)

    @property
    def record_id(self) -> str:
        return self.article.record_id


def assign_companies(
    article: Article, specs: Iterable[CompanySpec], policy: MatchPolicy = MatchPolicy()
) -> list[CompanyStream]:
    """Split an article into one record per company whose keywords it contains."""
    streams = []
    for spec in specs:
        found = match_keywords(article, spec, policy)
        if found:
            streams.append(CompanyStream(article.for_company(spec.company_id), found))
    return streams
