"""Dataset statistics: sentiment/aspect totals, per-company ratios, weekly counts,
moving-average sentiment and relevance-score distribution."""

from __future__ import annotations

import csv
from collections import Counter, defaultdict, deque
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Sequence

from .llm_stages.parsing import ASPECTS, SENTIMENTS
from .records import DatasetRecord, DataValidationError

SENTIMENT_VALUE = {"negative": -1.0, "neutral": 0.0, "positive": 1.0}


def sentiment_value(sentiment: str) -> float:
    return SENTIMENT_VALUE[sentiment]


def _require_labels(records: Iterable[DatasetRecord]) -> list[DatasetRecord]:
    out = list(records)
    for r in out:
        if r.sentiment not in SENTIMENT_VALUE or r.aspect not in ASPECTS:
            raise DataValidationError(f"{r.company} {r.url}: record lacks sentiment or aspect")
    return out


@dataclass
class CompanyStats:
    count: int
    sentiment_counts: dict[str, int]
    aspect_counts: dict[str, int]

    @property
    def sentiment_ratios(self) -> dict[str, float]:
        return {s: self.sentiment_counts[s] / self.count for s in SENTIMENTS}

    @property
    def aspect_ratios(self) -> dict[str, float]:
        return {a: self.aspect_counts[a] / self.count for a in ASPECTS}


@dataclass
class DatasetStats:
    sentiment_totals: dict[str, int]
    aspect_totals: dict[str, int]
    per_company: dict[str, CompanyStats]
    macro_sentiment: dict[str, float]
    macro_aspect: dict[str, float]

    @property
    def size(self) -> int:
        return sum(self.sentiment_totals.values())


def company_stats(records: Iterable[DatasetRecord]) -> dict[str, CompanyStats]:
    sent: dict[str, Counter] = defaultdict(Counter)
    asp: dict[str, Counter] = defaultdict(Counter)
    for r in records:
        sent[r.company][r.sentiment] += 1
        asp[r.company][r.aspect] += 1
    return {
        c: CompanyStats(
            count=sum(sent[c].values()),
            sentiment_counts={s: sent[c][s] for s in SENTIMENTS},
            aspect_counts={a: asp[c][a] for a in ASPECTS},
        )
        for c in sorted(sent)
    }


def aggregate_counts(records: Iterable[DatasetRecord]) -> DatasetStats:
    """Raw totals plus the unweighted mean over companies of each company's ratio."""
    records = _require_labels(records)
    per_company = company_stats(records)
    n = len(per_company)
    macro_s = {
        s: (sum(c.sentiment_ratios[s] for c in per_company.values()) / n if n else 0.0)
        for s in SENTIMENTS
    }
    macro_a = {
        a: (sum(c.aspect_ratios[a] for c in per_company.values()) / n if n else 0.0)
        for a in ASPECTS
    }
    sentiment_totals = Counter(r.sentiment for r in records)
    aspect_totals = Counter(r.aspect for r in records)
    return DatasetStats(
        sentiment_totals={s: sentiment_totals[s] for s in SENTIMENTS},
        aspect_totals={a: aspect_totals[a] for a in ASPECTS},
        per_company=per_company,
        macro_sentiment=macro_s,
        macro_aspect=macro_a,
    )


@dataclass
class CompanyTotals:
    count: int
    aspect_counts: dict[str, int]

    @property
    def aspect_ratios(self) -> dict[str, float]:
        return {a: self.aspect_counts[a] / self.count for a in ASPECTS}


def company_totals(records: Iterable[DatasetRecord]) -> dict[str, CompanyTotals]:
    counts: dict[str, Counter] = defaultdict(Counter)
    for r in records:
        counts[r.company][r.aspect] += 1
    return {
        c: CompanyTotals(sum(counts[c].values()), {a: counts[c][a] for a in ASPECTS})
        for c in sorted(counts)
    }


def extreme_companies(totals: dict[str, CompanyTotals]) -> tuple[tuple[str, int], tuple[str, int]]:
    """(company, count) with the fewest and with the most records."""
    if not totals:
        raise ValueError("no companies")
    ranked = sorted(totals.items(), key=lambda kv: (kv[1].count, kv[0]))
    lo, hi = ranked[0], ranked[-1]
    return (lo[0], lo[1].count), (hi[0], hi[1].count)


def iso_week_start(day: date) -> date:
    return day - timedelta(days=day.weekday())


@dataclass
class WeekCount:
    week_start: date
    counts: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def label(self) -> str:
        year, week, _ = self.week_start.isocalendar()
        return f"{year}-W{week:02d}"


def weekly_counts(records: Iterable[DatasetRecord]) -> list[WeekCount]:
    """ISO-week buckets covering the data span, empty weeks included with zero counts."""
    buckets: dict[date, Counter] = defaultdict(Counter)
    for r in records:
        buckets[iso_week_start(r.published_at.date())][r.aspect] += 1
    if not buckets:
        return []
    week = min(buckets)
    last = max(buckets)
    out = []
    while week <= last:
        c = buckets.get(week, Counter())
        out.append(WeekCount(week, {a: c[a] for a in ASPECTS}))
        week += timedelta(days=7)
    return out


def daily_mean_sentiment(records: Iterable[DatasetRecord]) -> dict[str, dict[date, float]]:
    sums: dict[str, dict[date, list[float]]] = {a: defaultdict(lambda: [0.0, 0]) for a in ASPECTS}
    for r in _require_labels(records):
        acc = sums[r.aspect][r.published_at.date()]
        acc[0] += SENTIMENT_VALUE[r.sentiment]
        acc[1] += 1
    return {a: {d: s / n for d, (s, n) in sorted(days.items())} for a, days in sums.items()}


def sentiment_moving_average(
    records: Iterable[DatasetRecord], window_days: int = 30
) -> dict[str, list[tuple[date, float]]]:
    """Trailing moving average of the daily mean sentiment, per aspect.

    The value for day ``t`` averages the daily means of days ``t-window+1 .. t``
    that have articles of that aspect. Points are emitted for every calendar
    day of the data span on which the window holds at least one such day.
    """
    daily = daily_mean_sentiment(records)
    all_days = [d for days in daily.values() for d in days]
    if not all_days:
        return {a: [] for a in ASPECTS}
    first, last = min(all_days), max(all_days)
    out: dict[str, list[tuple[date, float]]] = {}
    for aspect in ASPECTS:
        queue = sorted(daily[aspect].items())
        window: deque[tuple[date, float]] = deque()
        series = []
        qi = 0
        day = first
        while day <= last:
            while qi < len(queue) and queue[qi][0] <= day:
                window.append(queue[qi])
                qi += 1
            while window and (day - window[0][0]).days >= window_days:
                window.popleft()
            if window:
                series.append((day, sum(v for _, v in window) / len(window)))
            day += timedelta(days=1)
        out[aspect] = series
    return out


def aspect_mean_sentiment(records: Iterable[DatasetRecord], method: str = "records") -> dict[str, float]:
    """Overall mean sentiment per aspect.

    ``records`` averages all records, ``daily`` averages the daily means,
    ``moving_average`` averages the 30-day moving-average series.
    """
    records = _require_labels(records)
    if method == "records":
        acc: dict[str, list[float]] = defaultdict(list)
        for r in records:
            acc[r.aspect].append(SENTIMENT_VALUE[r.sentiment])
        return {a: sum(v) / len(v) for a, v in acc.items() if v}
    if method == "daily":
        daily = daily_mean_sentiment(records)
        return {a: sum(d.values()) / len(d) for a, d in daily.items() if d}
    if method == "moving_average":
        ma = sentiment_moving_average(records)
        return {a: sum(v for _, v in s) / len(s) for a, s in ma.items() if s}
    raise ValueError(f"unknown method {method!r}")


@dataclass
class RelevanceHistogram:
    counts: dict[int, int]
    mean: float

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def relevance_histogram(records: Iterable[DatasetRecord]) -> RelevanceHistogram:
    counts = Counter()
    for r in records:
        score = r.relevance_score
        if score is None or not 1 <= score <= 10:
            raise DataValidationError(f"relevance score {score!r} outside 1..10")
        counts[score] += 1
    total = sum(counts.values())
    mean = sum(s * c for s, c in counts.items()) / total if total else float("nan")
    return RelevanceHistogram({s: counts[s] for s in range(1, 11)}, mean)


def _write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_stats_csv(stats: DatasetStats, path: str | Path) -> None:
    rows = []
    if stats.per_company:
        rows.append(
            ["Total"]
            + [stats.sentiment_totals[s] for s in SENTIMENTS]
            + [stats.aspect_totals[a] for a in ASPECTS]
        )
        rows.append(
            ["Avg. Perc. per Company"]
            + [f"{stats.macro_sentiment[s]:.4f}" for s in SENTIMENTS]
            + [f"{stats.macro_aspect[a]:.4f}" for a in ASPECTS]
        )
    _write_csv(path, ["row", *SENTIMENTS, *ASPECTS], rows)


def write_company_csv(totals: dict[str, CompanyTotals], path: str | Path) -> None:
    rows = [
        [c, t.count, *(t.aspect_counts[a] for a in ASPECTS), *(f"{t.aspect_ratios[a]:.4f}" for a in ASPECTS)]
        for c, t in sorted(totals.items(), key=lambda kv: (-kv[1].count, kv[0]))
    ]
    _write_csv(path, ["company", "count", *ASPECTS, *(f"{a}_ratio" for a in ASPECTS)], rows)


def write_weekly_csv(weeks: list[WeekCount], path: str | Path) -> None:
    rows = [[w.label, w.week_start.isoformat(), w.total, *(w.counts[a] for a in ASPECTS)] for w in weeks]
    _write_csv(path, ["iso_week", "week_start", "total", *ASPECTS], rows)


def write_moving_average_csv(series: dict[str, list[tuple[date, float]]], path: str | Path) -> None:
    days = sorted({d for s in series.values() for d, _ in s})
    lookup = {a: dict(s) for a, s in series.items()}
    rows = [
        [d.isoformat(), *(f"{lookup[a][d]:.6f}" if d in lookup[a] else "" for a in ASPECTS)]
        for d in days
    ]
    _write_csv(path, ["date", *ASPECTS], rows)


def write_relevance_csv(hist: RelevanceHistogram, path: str | Path) -> None:
    rows = [[s, hist.counts[s]] for s in range(1, 11)] if hist.total else []
    if hist.total:
        rows.append(["mean", f"{hist.mean:.4f}"])
    _write_csv(path, ["relevance_score", "count"], rows)


def plot_panels(records: Sequence[DatasetRecord], out_dir: str | Path) -> list[Path]:
    """Company aspect bars and weekly/moving-average panels as PNG files (needs matplotlib)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    totals = company_totals(records)
    names = sorted(totals, key=lambda c: -totals[c].count)
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(14, 8), sharex=True)
    base = [0.0] * len(names)
    base_r = [0.0] * len(names)
    for a in ASPECTS:
        vals = [totals[c].aspect_counts[a] for c in names]
        ratios = [totals[c].aspect_ratios[a] for c in names]
        top.bar(names, vals, bottom=base, label=a)
        bottom.bar(names, ratios, bottom=base_r, label=a)
        base = [b + v for b, v in zip(base, vals)]
        base_r = [b + v for b, v in zip(base_r, ratios)]
    top.legend()
    bottom.tick_params(axis="x", rotation=90)
    fig.tight_layout()
    path = out_dir / "company_aspects.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    weeks = weekly_counts(records)
    ma = sentiment_moving_average(records)
    fig, (left, right) = plt.subplots(1, 2, figsize=(14, 5))
    left.plot([w.week_start for w in weeks], [w.total for w in weeks], label="total")
    for a in ASPECTS:
        left.plot([w.week_start for w in weeks], [w.counts[a] for w in weeks], label=a)
        right.plot([d for d, _ in ma[a]], [v for _, v in ma[a]], label=a)
    left.legend()
    right.legend()
    fig.tight_layout()
    path = out_dir / "timeseries.png"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)
    return written
