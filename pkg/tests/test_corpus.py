from __future__ import annotations

import json
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_article
from esgnews.corpus import (
    Article,
    CompanySpec,
    CorpusError,
    MatchPolicy,
    assign_companies,
    filter_language,
    format_timestamp,
    load_company_specs,
    load_corpus,
    match_keywords,
    parse_timestamp,
    write_corpus,
)


def _spec(keywords, cid="vw", insensitive=()):
    return CompanySpec(cid, cid.upper(), tuple(keywords), case_insensitive_keywords=frozenset(insensitive))


def test_empty_file_gives_empty_stream(tmp_path):
    f = tmp_path / "c.jsonl"
    f.write_text("")
    errors = []
    assert list(load_corpus(f, errors)) == []
    assert errors == []


def test_malformed_record_is_reported_not_fatal(tmp_path):
    f = tmp_path / "c.jsonl"
    good = [make_article(f"a{i}").to_record() for i in range(3)]
    lines = [json.dumps(good[0]), json.dumps(good[1]), "{not json", json.dumps(good[2])]
    f.write_text("\n".join(lines) + "\n")
    errors = []
    articles = list(load_corpus(f, errors))
    assert [a.article_id for a in articles] == ["a0", "a1", "a2"]
    assert len(errors) == 1 and errors[0].line_no == 3


def test_missing_field_and_empty_paragraph_rejected(tmp_path):
    rec = make_article().to_record()
    no_title = {k: v for k, v in rec.items() if k != "title"}
    blank = dict(rec, paragraphs=["  "])
    f = tmp_path / "c.jsonl"
    f.write_text(json.dumps(no_title) + "\n" + json.dumps(blank) + "\n")
    errors = []
    assert list(load_corpus(f, errors)) == []
    assert len(errors) == 2


def test_unreadable_corpus_raises(tmp_path):
    with pytest.raises(CorpusError):
        list(load_corpus(tmp_path / "missing.jsonl"))


def test_date_range_filter(tmp_path):
    f = tmp_path / "c.jsonl"
    write_corpus([make_article("a", days=0), make_article("b", days=400)], f)
    lo = datetime(2023, 1, 1, tzinfo=timezone.utc)
    hi = datetime(2023, 12, 31, tzinfo=timezone.utc)
    errors = []
    assert [a.article_id for a in load_corpus(f, errors, (lo, hi))] == ["a"]
    assert len(errors) == 1


_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",), blacklist_characters="\r\n\x0b\x0c\x1c\x1d\x1e\x85  "),
    min_size=1,
    max_size=30,
).filter(lambda s: s.strip())


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(_text, st.lists(_text, min_size=1, max_size=3), st.integers(0, 10**6)), max_size=8))
def test_round_trip_is_byte_identical(tmp_path_factory, items):
    d = tmp_path_factory.mktemp("rt")
    articles = [
        Article(f"id{i}", f"u{i}", title, tuple(paras), datetime.fromtimestamp(1.6e9 + secs, timezone.utc), "de")
        for i, (title, paras, secs) in enumerate(items)
    ]
    first = d / "a.jsonl"
    second = d / "b.jsonl"
    write_corpus(articles, first)
    write_corpus(load_corpus(first), second)
    assert first.read_bytes() == second.read_bytes()


def test_timestamp_parsing():
    assert format_timestamp(parse_timestamp("2023-05-01T10:00:00+02:00")) == "2023-05-01T08:00:00Z"
    assert format_timestamp(parse_timestamp("2023-05-01T10:00:00")) == "2023-05-01T10:00:00Z"
    with pytest.raises(ValueError):
        parse_timestamp("yesterday")


@pytest.mark.parametrize("lang,keep", [("de", True), ("en", True), ("fr", False)])
def test_filter_language(lang, keep):
    assert filter_language(make_article(language=lang)) is keep


def test_single_match():
    m = match_keywords(make_article(paragraphs=["Volkswagen announces..."]), _spec(["Volkswagen"]))
    assert len(m) == 1 and m[0].paragraph_index == 0 and m[0].char_span == (0, 10)


def test_no_match():
    assert match_keywords(make_article(paragraphs=["No relevant content"]), _spec(["Allianz"])) == []


def test_overlapping_keywords_both_reported():
    m = match_keywords(make_article(paragraphs=["VW Group said"]), _spec(["VW", "VW Group"]))
    assert sorted((x.keyword, x.char_span) for x in m) == [("VW", (0, 2)), ("VW Group", (0, 8))]


def test_word_boundary_and_case():
    art = make_article(paragraphs=["Die VWler und vw sowie Allianzen"])
    assert match_keywords(art, _spec(["VW"])) == []
    assert len(match_keywords(art, _spec(["VW"], insensitive=["VW"]))) == 1
    assert len(match_keywords(art, _spec(["VW"]), MatchPolicy(word_boundary=False))) == 1


def _brute_force(paragraphs, keywords):
    out = set()
    for pi, p in enumerate(paragraphs):
        for kw in keywords:
            for i in range(len(p) - len(kw) + 1):
                if p[i : i + len(kw)] != kw:
                    continue
                before = p[i - 1] if i else " "
                after = p[i + len(kw)] if i + len(kw) < len(p) else " "
                if not (before.isalnum() or before == "_") and not (after.isalnum() or after == "_"):
                    out.add((pi, kw, i, i + len(kw)))
    return out


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.text(alphabet="ab ", min_size=1, max_size=25).filter(lambda s: s.strip()), min_size=1, max_size=3),
    st.lists(st.text(alphabet="ab", min_size=1, max_size=3), min_size=1, max_size=3, unique=True),
)
def test_match_keywords_equals_brute_force_scan(paragraphs, keywords):
    art = make_article(paragraphs=paragraphs)
    got = {(m.paragraph_index, m.keyword, *m.char_span) for m in match_keywords(art, _spec(keywords))}
    assert got == _brute_force(paragraphs, keywords)
    # Order of the keyword list never changes the result.
    again = match_keywords(art, _spec(list(reversed(keywords))))
    assert again == match_keywords(art, _spec(keywords))


def test_assign_companies_splits_per_company():
    art = make_article(paragraphs=["Allianz and Siemens agree."])
    specs = [_spec(["Allianz"], "allianz"), _spec(["Siemens"], "siemens"), _spec(["BASF"], "basf")]
    streams = assign_companies(art, specs)
    assert [s.record_id for s in streams] == ["a1::allianz", "a1::siemens"]


def test_company_specs_file(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text(
        "companies:\n"
        "  - {id: vw, name: Volkswagen, keywords: [Volkswagen, {keyword: vw, case_insensitive: true}], related: [porsche]}\n"
        "  - {id: porsche, name: Porsche, keywords: [Porsche]}\n"
    )
    specs = load_company_specs(f)
    assert specs[0].related_company_ids == ("porsche",)
    assert specs[0].case_insensitive_keywords == frozenset({"vw"})
    f.write_text("companies:\n  - {id: a, keywords: [x]}\n  - {id: a, keywords: [y]}\n")
    with pytest.raises(CorpusError):
        load_company_specs(f)
