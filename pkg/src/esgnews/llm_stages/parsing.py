"""Parsing of fielded plain-text model answers with label/value alias normalisation."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

SENTIMENTS = ("negative", "neutral", "positive")
ASPECTS = ("E", "S", "G")

SENTIMENT_ALIASES: dict[str, tuple[str, ...]] = {
    "negative": ("negative", "negativ", "neg", "-1", "negatively", "negativer"),
    "neutral": ("neutral", "neu", "0", "neutrale", "neutraler"),
    "positive": ("positive", "positiv", "pos", "+1", "1", "positively", "positiver"),
}

ASPECT_ALIASES: dict[str, tuple[str, ...]] = {
    "E": ("e", "environmental", "environment", "umwelt", "ökologisch", "ecological", "env"),
    "S": ("s", "social", "sozial", "soziales", "gesellschaft", "society", "soc"),
    "G": (
        "g",
        "governance",
        "corporate governance",
        "unternehmensführung",
        "führung",
        "gov",
    ),
}

_TRUE = ("yes", "ja", "true", "relevant", "y", "j", "1", "wahr", "zutreffend")
_FALSE = (
    "no",
    "nein",
    "false",
    "irrelevant",
    "not relevant",
    "nicht relevant",
    "n",
    "0",
    "falsch",
    "none",
)
_ABSENT = ("-", "", "n/a", "na", "none", "keine", "kein", "nicht zutreffend", "not applicable")

# Field label -> accepted label spellings (compared lowercased, without markup).
FIELD_LABELS: dict[str, tuple[str, ...]] = {
    "relevant": ("relevant", "relevanz", "relevancy", "relevance", "is relevant"),
    "explanation": ("explanation", "erklärung", "begründung", "reasoning"),
    "summary": ("summary", "zusammenfassung"),
    "direct_esg": (
        "direct esg",
        "direct esg connection",
        "directly addresses esg",
        "direkter esg-bezug",
        "direkter esg bezug",
        "direct_esg",
    ),
    "sentiment": ("sentiment", "esg-sentiment", "esg sentiment", "stimmung"),
    "aspect": ("aspect", "aspekt", "esg-aspect", "esg aspect", "esg-aspekt"),
    "score": ("score", "relevance score", "relevanzwert", "relevanzbewertung", "bewertung"),
    "keywords": ("keywords", "schlüsselwörter", "schlagwörter", "stichwörter"),
    "translation": ("translation", "übersetzung", "english summary"),
}

# Canonical spelling used when asking for a field.
CANONICAL_LABEL = {
    "relevant": "Relevant",
    "explanation": "Explanation",
    "summary": "Summary",
    "direct_esg": "Direct ESG",
    "sentiment": "Sentiment",
    "aspect": "Aspect",
    "score": "Score",
    "keywords": "Keywords",
    "translation": "Translation",
}


class ParseError(ValueError):
    pass


def _inverse(table: Mapping[str, tuple[str, ...]]) -> dict[str, str]:
    inv: dict[str, str] = {}
    for canonical, aliases in table.items():
        for alias in aliases:
            key = alias.casefold()
            if key in inv and inv[key] != canonical:
                raise ValueError(f"alias {alias!r} maps to {inv[key]!r} and {canonical!r}")
            inv[key] = canonical
    return inv


_SENTIMENT_INV = _inverse(SENTIMENT_ALIASES)
_ASPECT_INV = _inverse(ASPECT_ALIASES)
_LABEL_INV = _inverse(FIELD_LABELS)
_LABEL_LINE = re.compile(
    r"^\s*(?:[-*#>]+\s*)?\**\s*([^:*\n]{1,40}?)\s*\**\s*:\s*\**\s*(.*)$"
)


def _clean(value: str) -> str:
    return value.strip().strip("*_`\"'„“”").strip().rstrip(".").strip()


def _lookup(value: str, inverse: Mapping[str, str]) -> str | None:
    text = _clean(value).casefold()
    if text in inverse:
        return inverse[text]
    head = re.split(r"[\s(/,;]+", text, maxsplit=1)[0].strip(".:")
    if head in inverse:
        return inverse[head]
    inner = re.search(r"\(([^)]*)\)", text)
    if inner and inner.group(1).strip() in inverse:
        return inverse[inner.group(1).strip()]
    return None


def normalize_sentiment(value: str) -> str:
    found = _lookup(value, _SENTIMENT_INV)
    if found is None:
        raise ParseError(f"unknown sentiment {value!r}")
    return found


def normalize_aspect(value: str) -> str:
    found = _lookup(value, _ASPECT_INV)
    if found is None:
        raise ParseError(f"unknown aspect {value!r}")
    return found


def parse_bool(value: str) -> bool:
    text = _clean(value).casefold()
    for phrase in _FALSE:
        if text == phrase or text.startswith(phrase + " ") or text.startswith(phrase + ","):
            return False
    for phrase in _TRUE:
        if text == phrase or text.startswith(phrase + " ") or text.startswith(phrase + ","):
            return True
    raise ParseError(f"expected yes/no, got {value!r}")


def parse_score(value: str, low: int = 1, high: int = 10) -> int:
    m = re.search(r"-?\d+", value)
    if not m:
        raise ParseError(f"no score in {value!r}")
    score = int(m.group(0))
    if not low <= score <= high:
        raise ParseError(f"score {score} outside [{low}, {high}]")
    return score


def parse_keywords(value: str) -> list[str]:
    parts = re.split(r"[,;\n]|\s+-\s+", value)
    out: list[str] = []
    for part in parts:
        kw = _clean(part.lstrip("-*• "))
        if kw and kw.casefold() not in {k.casefold() for k in out}:
            out.append(kw)
    return out


def is_absent(value: str) -> bool:
    return _clean(value).casefold() in _ABSENT


def split_fields(raw: str) -> dict[str, str]:
    """Collect ``Label: value`` blocks; a value runs until the next known label.

    Unknown ``Something:`` lines and surrounding prose are kept as value text
    of the preceding field (or dropped before the first field). When a label
    repeats, the last occurrence wins.
    """
    fields: dict[str, list[str]] = {}
    current: str | None = None
    for line in raw.replace("\r\n", "\n").split("\n"):
        m = _LABEL_LINE.match(line)
        if m:
            name = _LABEL_INV.get(m.group(1).strip().casefold())
            if name is not None:
                current = name
                fields[current] = [m.group(2)]
                continue
        if current is not None:
            fields[current].append(line)
    return {k: "\n".join(v).strip() for k, v in fields.items()}


@dataclass(frozen=True)
class FieldSpec:
    name: str
    kind: str  # text | bool | sentiment | aspect | score | keywords
    required: bool = True


_CONVERTERS = {
    "text": lambda v: v.strip().strip("*").strip() or None,
    "bool": parse_bool,
    "sentiment": normalize_sentiment,
    "aspect": normalize_aspect,
    "score": parse_score,
    "keywords": parse_keywords,
}


def parse_structured_response(raw: str, schema: list[FieldSpec]) -> dict:
    """Extract and normalise the schema's fields from a model answer.

    Missing required fields or invalid values raise ``ParseError``; optional
    fields that are missing or explicitly absent ("-", "n/a") come back as None.
    """
    found = split_fields(raw)
    out: dict = {}
    for spec in schema:
        value = found.get(spec.name)
        if value is None or (spec.kind != "text" and is_absent(value)):
            if spec.required:
                raise ParseError(f"missing field {CANONICAL_LABEL.get(spec.name, spec.name)}")
            out[spec.name] = None
            continue
        converted = _CONVERTERS[spec.kind](value)
        if converted is None and spec.required:
            raise ParseError(f"empty field {spec.name}")
        out[spec.name] = converted
    return out
