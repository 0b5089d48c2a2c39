from __future__ import annotations

import csv
from datetime import date, timedelta

import numpy as np
import pytest

from conftest import T0, make_record
from esgnews.analytics import (
    aggregate_counts,
    aspect_mean_sentiment,
    company_totals,
    extreme_companies,
    iso_week_start,
    relevance_histogram,
    sentiment_moving_average,
    weekly_counts,
    write_company_csv,
    write_moving_average_csv,
    write_relevance_csv,
    write_stats_csv,
    write_weekly_csv,
)
from esgnews.records import DataValidationError, load_dataset, write_dataset
from oracles import weekly_bruteforce


def test_single_company_ratios():
    recs = [make_record(sentiment="positive"), make_record(sentiment="positive"), make_record(sentiment="negative")]
    stats = aggregate_counts(recs)
    r = stats.per_company["Volkswagen"].sentiment_ratios
    assert (r["positive"], r["neutral"], r["negative"]) == pytest.approx((2 / 3, 0, 1 / 3))
    assert stats.sentiment_totals == {"negative": 1, "neutral": 0, "positive": 2}


def test_macro_average_is_unweighted_over_companies():
    recs = [make_record("A", "positive")] * 9 + [make_record("A", "negative")] + [make_record("B", "negative")]
    stats = aggregate_counts(recs)
    assert stats.macro_sentiment["positive"] == pytest.approx((0.9 + 0.0) / 2)
    assert stats.macro_sentiment["negative"] == pytest.approx((0.1 + 1.0) / 2)
    assert sum(stats.macro_sentiment.values()) == pytest.approx(1.0)


def test_unlabelled_record_rejected():
    with pytest.raises(DataValidationError):
        aggregate_counts([make_record(sentiment=None)])


def test_company_totals_and_extremes():
    assert company_totals([]) == {}
    recs = [make_record("A")] * 3 + [make_record("B")] + [make_record("C")] * 5
    (lo, lo_n), (hi, hi_n) = extreme_companies(company_totals(recs))
    assert (lo, lo_n, hi, hi_n) == ("B", 1, "C", 5)


def test_single_week_bucket():
    recs = [make_record(days=d, aspect=a) for d, a in [(0, "E"), (1, "S"), (4, "G")]]  # Mon..Fri
    weeks = weekly_counts(recs)
    assert len(weeks) == 1 and weeks[0].total == 3


def test_weekly_against_bruteforce_bucketer():
    rng = np.random.default_rng(0)
    aspects = ["E", "S", "G"]
    recs = [
        make_record(days=int(rng.integers(0, 400)), aspect=aspects[int(rng.integers(3))]) for _ in range(1000)
    ]
    weeks = weekly_counts(recs)
    first = iso_week_start(min(r.published_at.date() for r in recs))
    for a in aspects:
        days = [r.published_at.date() for r in recs if r.aspect == a]
        assert [w.counts[a] for w in weeks] == weekly_bruteforce(days, first, len(weeks))
    assert all(w.total == sum(w.counts.values()) for w in weeks)
    assert sum(w.total for w in weeks) == 1000
    assert all(w.week_start.weekday() == 0 for w in weeks)


def test_weekly_fills_empty_weeks():
    weeks = weekly_counts([make_record(days=0), make_record(days=21)])
    assert [w.total for w in weeks] == [1, 0, 0, 1]


def test_iso_week_label_across_year_end():
    weeks = weekly_counts([make_record(days=-2)])  # Saturday 31 Dec 2022
    assert weeks[0].label == "2022-W52" and weeks[0].week_start == date(2022, 12, 26)


def test_constant_positive_moving_average():
    recs = [make_record(days=d, sentiment="positive") for d in range(0, 60, 3)]
    series = sentiment_moving_average(recs)["E"]
    assert series and all(v == 1.0 for _, v in series)


def test_three_day_moving_average_by_hand():
    recs = [
        make_record(days=0, sentiment="positive"),
        make_record(days=1, sentiment="negative"),
        make_record(days=1, sentiment="neutral"),
        make_record(days=2, sentiment="negative"),
    ]
    series = dict(sentiment_moving_average(recs, window_days=2)["E"])
    d0 = T0.date()
    # Daily means: +1, -0.5, -1. Trailing two-day window.
    assert series[d0] == pytest.approx(1.0)
    assert series[d0 + timedelta(days=1)] == pytest.approx((1.0 - 0.5) / 2)
    assert series[d0 + timedelta(days=2)] == pytest.approx((-0.5 - 1.0) / 2)


def test_aspect_mean_sentiment_methods():
    recs = [
        make_record(aspect="E", sentiment="positive", days=0),
        make_record(aspect="E", sentiment="positive", days=0),
        make_record(aspect="E", sentiment="negative", days=1),
        make_record(aspect="G", sentiment="negative", days=1),
    ]
    assert aspect_mean_sentiment(recs) == pytest.approx({"E": 1 / 3, "G": -1.0})
    assert aspect_mean_sentiment(recs, "daily") == pytest.approx({"E": 0.0, "G": -1.0})
    with pytest.raises(ValueError):
        aspect_mean_sentiment(recs, "median")


def test_relevance_histogram():
    hist = relevance_histogram([make_record(score=7)] * 4)
    assert hist.mean == 7 and hist.counts[7] == 4 and hist.counts[1] == 0
    with pytest.raises(DataValidationError):
        relevance_histogram([make_record(score=11)])


def test_empty_dataset_writes_header_only_csvs(tmp_path):
    write_stats_csv(aggregate_counts([]), tmp_path / "s.csv")
    write_company_csv(company_totals([]), tmp_path / "c.csv")
    write_weekly_csv(weekly_counts([]), tmp_path / "w.csv")
    write_moving_average_csv(sentiment_moving_average([]), tmp_path / "m.csv")
    write_relevance_csv(relevance_histogram([]), tmp_path / "r.csv")
    for name in "scwmr":
        rows = list(csv.reader((tmp_path / f"{name}.csv").open()))
        assert len(rows) == 1


def test_dataset_loader_aliases_and_roundtrip(tmp_path):
    src = tmp_path / "d.csv"
    src.write_text(
        "company_name,date,summary,sentiment,esg_category,relevancy_score,keywords,relevant\n"
        'VW,2023-04-01,S1,positiv,Umwelt,8,"[\'a\', \'b\']",true\n'
        "VW,2023-04-02 10:00:00,S2,negative,G,6.0,x,false\n"
    )
    recs = load_dataset(src)
    assert len(recs) == 1
    r = recs[0]
    assert (r.company, r.sentiment, r.aspect, r.relevance_score, r.keywords) == ("VW", "positive", "E", 8, ["a", "b"])
    out = tmp_path / "d.jsonl"
    write_dataset(recs, out)
    again = load_dataset(out)
    assert again[0].to_record() == r.to_record()
