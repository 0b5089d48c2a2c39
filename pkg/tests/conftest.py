from __future__ import annotations

import sys
from datetime import datetime, timedelta, timezone

import pytest

from esgnews.corpus import Article
from esgnews.records import DatasetRecord

T0 = datetime(2023, 1, 2, 9, 0, tzinfo=timezone.utc)


def make_article(aid="a1", paragraphs=("Volkswagen announces a new plant.",), days=0, language="de", company_id=""):
    return Article(
        article_id=aid,
        url=f"https://example.org/{aid}",
        title=f"Title {aid}",
        paragraphs=tuple(paragraphs),
        published_at=T0 + timedelta(days=days),
        language=language,
        company_id=company_id,
    )


def make_record(company="Volkswagen", sentiment="positive", aspect="E", score=7, days=0, summary="s", keywords=()):
    return DatasetRecord(
        company=company,
        published_at=T0 + timedelta(days=days),
        sentiment=sentiment,
        aspect=aspect,
        relevance_score=score,
        url=f"https://example.org/{company}/{days}",
        summary=summary,
        keywords=list(keywords),
    )


@pytest.fixture
def article_factory():
    return make_article


@pytest.fixture
def record_factory():
    return make_record


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance verdicts, one line per criterion."""
    module = sys.modules.get("test_acceptance")
    verdicts = getattr(module, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for line in sorted(verdicts, key=lambda v: int(v.split()[1])):
            terminalreporter.write_line(line)
