"""Entity gate: keep an article only if a keyword mention is tagged as an organization."""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Article, KeywordMatch

DEFAULT_ORG_LABELS = frozenset({"organization", "company"})

# Lowercased tokens that end with a period without ending the sentence.
ABBREVIATIONS = frozenset(
    """
    abs abt bzw ca co corp dr etc evtl ggf inc jr jan feb mar apr jun jul aug sep sept okt oct
    nov dez dec ltd mio mr mrs ms mrd nr prof sr st str tel usw vgl vs zb z.b u.a d.h
    bspw inkl mind s.a e.v
    """.split()
)

_BOUNDARY = re.compile(r"[.!?…]+[\"'»«“”)\]]*(?=\s+|$)")


def split_sentences(text: str, protected: Sequence[tuple[int, int]] = ()) -> list[tuple[int, int]]:
    """Rule-based sentence spans ``[start, end)`` covering ``text``.

    A boundary is terminal punctuation followed by whitespace, except after a
    known abbreviation, a single capital initial or a bare number (German
    ordinals like "16. September"). Boundaries inside a ``protected`` span are
    ignored so keyword matches are never split.
    """
    spans = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        end = m.end()
        if any(s < end < e for s, e in protected):
            continue
        if m.group(0).startswith("."):
            before = text[start : m.start()].split()
            word = before[-1].lower() if before else ""
            word = word.lstrip("(\"'„»«")
            if word in ABBREVIATIONS or re.fullmatch(r"[a-zäöü]", word) or word.isdigit():
                continue
        rest = text[end:].lstrip()
        if rest and not (rest[0].isupper() or rest[0].isdigit() or rest[0] in "\"'„»«“("):
            continue
        spans.append((start, end))
        start = end
        while start < len(text) and text[start].isspace():
            start += 1
    if start < len(text) and text[start:].strip():
        spans.append((start, len(text.rstrip())))
    return spans


@dataclass(frozen=True)
class KeywordSentence:
    paragraph_index: int
    start: int
    end: int
    text: str
    keywords: tuple[str, ...]
    # Keyword occurrences as (keyword, start, end) relative to ``text``.
    occurrences: tuple[tuple[str, int, int], ...]


def keyword_sentences(article: Article, matches: Sequence[KeywordMatch]) -> list[KeywordSentence]:
    """Sentences containing at least one keyword match, each returned once."""
    by_paragraph: dict[int, list[KeywordMatch]] = defaultdict(list)
    for m in matches:
        by_paragraph[m.paragraph_index].append(m)
    out = []
    for idx in sorted(by_paragraph):
        paragraph = article.paragraphs[idx]
        found = by_paragraph[idx]
        for s, e in split_sentences(paragraph, [m.char_span for m in found]):
            inside = sorted(
                (m for m in found if s <= m.char_span[0] and m.char_span[1] <= e),
                key=lambda m: (m.char_span, m.keyword),
            )
            if not inside:
                continue
            keywords = tuple(dict.fromkeys(m.keyword for m in inside))
            occ = tuple((m.keyword, m.char_span[0] - s, m.char_span[1] - s) for m in inside)
            out.append(KeywordSentence(idx, s, e, paragraph[s:e], keywords, occ))
    return out


@dataclass
class GateResult:
    keep: bool
    labels: list[tuple[str, str | None]]


def entity_gate(
    sentences: Iterable[KeywordSentence],
    ner,
    org_labels: Iterable[str] = DEFAULT_ORG_LABELS,
    candidate_labels: Sequence[str] | None = None,
) -> GateResult:
    """Keep iff some keyword occurrence overlaps an entity labelled with an org label.

    Entities elsewhere in the sentence are ignored. ``labels`` records, per
    keyword occurrence, the org label that matched, else any overlapping
    label, else ``None``. Provider errors propagate to the caller.
    """
    org = set(org_labels)
    labels_to_ask = list(candidate_labels) if candidate_labels is not None else sorted(org)
    keep = False
    labels: list[tuple[str, str | None]] = []
    for sentence in sentences:
        spans = ner.ner_entities(sentence.text, labels_to_ask)
        for keyword, s, e in sentence.occurrences:
            hits = [span.label for span in spans if span.overlaps(s, e)]
            org_hits = [lab for lab in hits if lab in org]
            label = org_hits[0] if org_hits else (hits[0] if hits else None)
            keep = keep or bool(org_hits)
            labels.append((keyword, label))
    return GateResult(keep, labels)
