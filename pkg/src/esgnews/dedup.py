"""Near-duplicate removal over embeddings inside a sliding publication window."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Iterable, Sequence

import numpy as np

from .corpus import CompanyStream
from .providers import EmbeddingVector

logger = logging.getLogger(__name__)


class DedupConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DedupConfig:
    similarity_threshold: float = 0.8
    window: timedelta = timedelta(days=7)
    aggregation: str = "max"

    def __post_init__(self) -> None:
        if self.similarity_threshold < 0:
            raise DedupConfigError("similarity_threshold must be >= 0")
        if self.window < timedelta(0):
            raise DedupConfigError("window must be non-negative")
        if self.aggregation not in ("max", "mean"):
            raise DedupConfigError(f"unknown aggregation {self.aggregation!r}")


@dataclass
class DedupOutcome:
    kept_ids: list[str] = field(default_factory=list)
    discarded: dict[str, str] = field(default_factory=dict)
    # Inputs that could not be compared at all (no keyword paragraph, empty summary).
    excluded: list[str] = field(default_factory=list)

    def check_partition(self, input_ids: Iterable[str]) -> None:
        kept = set(self.kept_ids)
        gone = set(self.discarded)
        excluded = set(self.excluded)
        if kept & gone or kept & excluded or gone & excluded:
            raise AssertionError("dedup outcome sets overlap")
        if kept | gone | excluded != set(input_ids):
            raise AssertionError("dedup outcome does not cover the input")
        if not set(self.discarded.values()) <= kept:
            raise AssertionError("representative not among kept ids")

    def merge(self, other: DedupOutcome) -> None:
        self.kept_ids.extend(other.kept_ids)
        self.discarded.update(other.discarded)
        self.excluded.extend(other.excluded)


def _as_array(v: EmbeddingVector | Sequence[float] | np.ndarray) -> np.ndarray:
    values = v.values if isinstance(v, EmbeddingVector) else v
    return np.asarray(values, dtype=float)


def cosine_similarity(a, b) -> float:
    x, y = _as_array(a), _as_array(b)
    if x.shape != y.shape:
        raise DedupConfigError(f"dimension mismatch {x.shape} vs {y.shape}")
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise ValueError("zero-norm embedding")
    return float(np.clip(np.dot(x, y) / (nx * ny), -1.0, 1.0))


def _unit_rows(vectors: Sequence) -> np.ndarray:
    m = np.vstack([_as_array(v) for v in vectors])
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("zero-norm embedding")
    return m / norms


def dedup_stream(
    items: Iterable[tuple[str, datetime, Sequence]],
    cfg: DedupConfig = DedupConfig(),
) -> DedupOutcome:
    """Greedy keep-first sweep in (timestamp, id) order.

    An item is discarded when an already kept item published at most
    ``cfg.window`` earlier reaches ``cfg.similarity_threshold`` under the
    configured aggregation of pairwise cosines; it maps to the earliest such
    kept item. Discarded items are never compared against.
    """
    ordered = sorted(items, key=lambda it: (it[1], it[0]))
    ids = [it[0] for it in ordered]
    if len(set(ids)) != len(ids):
        raise DedupConfigError("duplicate ids in dedup input")
    outcome = DedupOutcome()
    kept: list[tuple[str, datetime, np.ndarray]] = []
    start = 0  # first kept index still inside the window
    dim = None
    for item_id, ts, vectors in ordered:
        if not vectors:
            raise DedupConfigError(f"{item_id}: no vectors")
        mat = _unit_rows(vectors)
        if dim is None:
            dim = mat.shape[1]
        elif mat.shape[1] != dim:
            raise DedupConfigError(f"{item_id}: dimension {mat.shape[1]} != {dim}")
        while start < len(kept) and ts - kept[start][1] > cfg.window:
            start += 1
        rep = None
        for kept_id, _, kept_mat in kept[start:]:
            sims = mat @ kept_mat.T
            score = sims.max() if cfg.aggregation == "max" else sims.mean()
            if score >= cfg.similarity_threshold:
                rep = kept_id
                break
        if rep is None:
            kept.append((item_id, ts, mat))
            outcome.kept_ids.append(item_id)
        else:
            outcome.discarded[item_id] = rep
    return outcome


def _embed_distinct(texts: Iterable[str], embedder, batch_size: int = 64) -> dict[str, np.ndarray]:
    distinct = sorted(set(texts))
    table: dict[str, np.ndarray] = {}
    for i in range(0, len(distinct), batch_size):
        batch = distinct[i : i + batch_size]
        for text, vec in zip(batch, embedder.embed_texts(batch)):
            table[text] = _as_array(vec)
    return table


def keyword_paragraphs(stream: CompanyStream) -> list[str]:
    """Distinct keyword-bearing paragraphs in article order."""
    seen = sorted({m.paragraph_index for m in stream.matches})
    out: list[str] = []
    for idx in seen:
        text = stream.article.paragraphs[idx]
        if text not in out:
            out.append(text)
    return out


def dedup_paragraph_stage(
    streams: Sequence[CompanyStream], embedder, cfg: DedupConfig = DedupConfig()
) -> DedupOutcome:
    """Deduplicate (article, company) records per company on keyword-paragraph embeddings."""
    by_company: dict[str, list[CompanyStream]] = defaultdict(list)
    outcome = DedupOutcome()
    for s in streams:
        if not s.matches:
            logger.warning("%s: no keyword paragraph, excluded from dedup", s.record_id)
            outcome.excluded.append(s.record_id)
            continue
        by_company[s.article.company_id].append(s)
    for company in sorted(by_company):
        group = by_company[company]
        paragraphs = {s.record_id: keyword_paragraphs(s) for s in group}
        table = _embed_distinct((p for ps in paragraphs.values() for p in ps), embedder)
        items = [
            (s.record_id, s.article.published_at, [table[p] for p in paragraphs[s.record_id]])
            for s in group
        ]
        outcome.merge(dedup_stream(items, cfg))
    return outcome


@dataclass(frozen=True)
class SummaryItem:
    record_id: str
    company_id: str
    published_at: datetime
    summary: str


def dedup_summary_stage(
    records: Sequence[SummaryItem], embedder, cfg: DedupConfig = DedupConfig()
) -> DedupOutcome:
    """Same sweep as the paragraph stage with one summary embedding per record."""
    by_company: dict[str, list[SummaryItem]] = defaultdict(list)
    outcome = DedupOutcome()
    for r in records:
        if not r.summary or not r.summary.strip():
            logger.warning("%s: empty summary, quarantined", r.record_id)
            outcome.excluded.append(r.record_id)
            continue
        by_company[r.company_id].append(r)
    for company in sorted(by_company):
        group = by_company[company]
        table = _embed_distinct((r.summary for r in group), embedder)
        items = [(r.record_id, r.published_at, [table[r.summary]]) for r in group]
        outcome.merge(dedup_stream(items, cfg))
    return outcome
