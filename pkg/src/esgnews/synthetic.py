"""Deterministic synthetic corpus for exercising the pipeline with mock providers.

Articles carry the marker tokens understood by the mock chat rules, so every
stage outcome is known in advance. The generated mix contains reprints (near
duplicates at the paragraph level), articles sharing a long lead paragraph
(duplicates only at the summary level), non-organization mentions of a
company keyword, foreign-language and company-free articles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .corpus import Article, CompanySpec, company_spec_to_dict, write_corpus

SYNTHETIC_COMPANIES = (
    CompanySpec("volkswagen", "Volkswagen", ("Volkswagen", "VW"), ("porsche",)),
    CompanySpec("porsche", "Porsche", ("Porsche",), ("volkswagen",)),
    CompanySpec("allianz", "Allianz", ("Allianz",)),
    CompanySpec("siemens", "Siemens", ("Siemens",)),
    CompanySpec("hannover_re", "Hannover Rück", ("Hannover Rück", "Hannover Re")),
)

# Phrases containing a company keyword that do not denote the company.
NON_ORG_PHRASES = {"Allianz der Staaten": "other"}

_SYLLABLES = (
    "ka", "lo", "mi", "ne", "ru", "ta", "ber", "gen", "stadt", "werk", "feld", "haus", "bau",
    "strom", "wind", "land", "markt", "netz", "plan", "rat", "zeit", "kraft", "wert", "stoff",
)


def mock_ner_table(specs=SYNTHETIC_COMPANIES) -> dict[str, str]:
    """Every company keyword is an organization; known non-org phrases shadow them."""
    table = {kw: "organization" for spec in specs for kw in spec.keywords}
    table.update(NON_ORG_PHRASES)
    return table


@dataclass
class SyntheticCorpus:
    articles: list[Article]
    companies: tuple[CompanySpec, ...]
    non_org_record_ids: set[str] = field(default_factory=set)
    reprint_ids: set[str] = field(default_factory=set)
    summary_duplicate_ids: set[str] = field(default_factory=set)
    # record id -> whether the mock filter conversation should pass it
    expected_filter_pass: dict[str, bool] = field(default_factory=dict)


def _vocabulary(rng: np.random.Generator, size: int = 400) -> list[str]:
    words: set[str] = set()
    while len(words) < size:
        n = int(rng.integers(2, 4))
        words.add("".join(rng.choice(_SYLLABLES, size=n)))
    return sorted(words)


def _filler(rng: np.random.Generator, vocab: list[str], n: int) -> str:
    return " ".join(rng.choice(vocab, size=n))


def _filter_markers(rng: np.random.Generator) -> tuple[list[str], bool]:
    roll = rng.random()
    if roll < 0.55:
        return ["RELEVANT", "ESG_DIRECT"], True
    if roll < 0.65:
        return ["INITIAL_NO", "RELEVANT", "ESG_DIRECT"], True
    if roll < 0.78:
        return ["RELEVANT"], False
    if roll < 0.88:
        return ["FILTER_IRRELEVANT", "ESG_DIRECT"], False
    return [], False


def _determination_markers(rng: np.random.Generator) -> list[str]:
    if rng.random() < 0.06:
        return ["IRRELEVANT"]
    marks = [
        str(rng.choice(["ESG_POS", "ESG_NEG", "ESG_NEU"])),
        str(rng.choice(["ASPECT_E", "ASPECT_S", "ASPECT_G"])),
        f"SCORE_{int(rng.integers(1, 11))}",
    ]
    if rng.random() < 0.05:
        marks.append("GARBLE_ONCE")
    return marks


def synthetic_corpus(n_articles: int = 200, seed: int = 0) -> SyntheticCorpus:
    rng = np.random.default_rng(seed)
    vocab = _vocabulary(rng)
    start = datetime(2023, 1, 1, tzinfo=timezone.utc)
    corpus = SyntheticCorpus([], SYNTHETIC_COMPANIES)
    names = [spec.keywords[0] for spec in SYNTHETIC_COMPANIES]
    ids = {spec.keywords[0]: spec.company_id for spec in SYNTHETIC_COMPANIES}
    base: list[Article] = []
    article_pass: dict[str, bool] = {}

    kinds = (
        ["foreign"] * (n_articles // 20)
        + ["no_company"] * (n_articles // 20)
        + ["non_org"] * (n_articles // 20)
        + ["reprint"] * (n_articles // 10)
        + ["lead_copy"] * (n_articles // 40)
        + ["garble"] * 1
    )
    kinds += ["base"] * (n_articles - len(kinds))
    # Base articles come first so that copies always have an original.
    order = ["base"] * kinds.count("base") + [k for k in kinds if k != "base"]
    tail = order[kinds.count("base") :]
    rng.shuffle(tail)
    order = order[: kinds.count("base")] + tail

    for i, kind in enumerate(order):
        aid = f"a{i:04d}"
        published = start + timedelta(days=int(rng.integers(0, 700)), hours=int(rng.integers(0, 24)))
        language = "de"
        if kind in ("reprint", "lead_copy"):
            original = base[int(rng.integers(len(base)))]
            published = original.published_at + timedelta(days=int(rng.integers(0, 5)), hours=3)
            if kind == "reprint":
                paragraphs = original.paragraphs
                corpus.reprint_ids.add(aid)
            else:
                # Same long lead, different company paragraph: only the summaries coincide.
                company = next(n for n in names if any(n in p for p in original.paragraphs))
                paragraphs = (
                    original.paragraphs[0],
                    f"{company} {_filler(rng, vocab, 25)}.",
                )
                corpus.summary_duplicate_ids.add(f"{aid}::{ids[company]}")
                corpus.expected_filter_pass[f"{aid}::{ids[company]}"] = article_pass[original.article_id]
            article = Article(aid, f"https://news.example/{aid}", f"Kopie {i}", paragraphs, published, language)
            corpus.articles.append(article)
            continue

        filter_marks, passes = _filter_markers(rng)
        det_marks = _determination_markers(rng)
        if kind == "garble":
            filter_marks, passes = ["GARBLE"], False
        lead = f"{_filler(rng, vocab, 45)} {' '.join(filter_marks + det_marks)}."
        if kind == "foreign":
            language = "fr"
            mentioned = [str(rng.choice(names))]
        elif kind == "no_company":
            mentioned = []
        elif kind == "non_org":
            mentioned = []
        else:
            k = 1 if rng.random() < 0.8 else 2
            mentioned = [str(n) for n in rng.choice(names, size=k, replace=False)]
        paragraphs = [lead]
        for name in mentioned:
            paragraphs.append(f"{name} {_filler(rng, vocab, 20)}. {_filler(rng, vocab, 10)}.")
        if kind == "non_org":
            paragraphs.append(f"Die Allianz der Staaten {_filler(rng, vocab, 20)}.")
            corpus.non_org_record_ids.add(f"{aid}::allianz")
        article = Article(
            aid, f"https://news.example/{aid}", f"Meldung {i}", tuple(paragraphs), published, language
        )
        corpus.articles.append(article)
        article_pass[aid] = passes
        if kind == "base":
            base.append(article)
        for name in mentioned:
            corpus.expected_filter_pass[f"{aid}::{ids[name]}"] = passes
        if kind == "non_org":
            corpus.expected_filter_pass[f"{aid}::allianz"] = passes
    return corpus


def write_synthetic(directory: str | Path, n_articles: int = 200, seed: int = 0) -> tuple[Path, Path]:
    """Write ``synthetic_corpus.jsonl`` and ``synthetic_companies.json``; returns both paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    corpus = synthetic_corpus(n_articles, seed)
    corpus_path = directory / "synthetic_corpus.jsonl"
    companies_path = directory / "synthetic_companies.json"
    write_corpus(corpus.articles, corpus_path)
    companies_path.write_text(
        json.dumps({"companies": [company_spec_to_dict(s) for s in corpus.companies]}, ensure_ascii=False, indent=2),
        encoding="utf-8",
    )
    return corpus_path, companies_path
