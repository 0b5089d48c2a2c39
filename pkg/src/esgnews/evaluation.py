"""Human-evaluation methodology: sampling, annotation aggregation and agreement metrics."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .clustering import kmeans
from .llm_stages.parsing import (
    ASPECTS,
    SENTIMENTS,
    ParseError,
    normalize_aspect,
    normalize_sentiment,
    parse_bool,
)
from .records import DatasetRecord


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotationRecord:
    annotator_id: str
    sample_id: str
    summary_correct: bool | None = None
    relevant: bool | None = None
    sentiments_selected: frozenset[str] = frozenset()
    not_sure: bool = False
    aspects_selected: frozenset[str] = frozenset()
    most_relevant_aspect: str | None = None

    def __post_init__(self) -> None:
        if not self.sentiments_selected <= set(SENTIMENTS):
            raise AnnotationError(f"unknown sentiments {set(self.sentiments_selected)}")
        if not self.aspects_selected <= set(ASPECTS):
            raise AnnotationError(f"unknown aspects {set(self.aspects_selected)}")
        if (
            self.most_relevant_aspect is not None
            and self.aspects_selected
            and self.most_relevant_aspect not in self.aspects_selected
        ):
            raise AnnotationError("most relevant aspect is not among the selected aspects")


# ---------------------------------------------------------------- sampling


def _groups(records: Sequence[DatasetRecord]) -> dict[tuple[str, str], list[int]]:
    groups: dict[tuple[str, str], list[int]] = defaultdict(list)
    for i, r in enumerate(records):
        groups[(r.company, r.sentiment)].append(i)
    return {k: groups[k] for k in sorted(groups)}


def sample_summary_eval(records: Sequence[DatasetRecord], rng_seed: int) -> list[int]:
    """One random record index per (company, sentiment) group."""
    rng = np.random.default_rng(rng_seed)
    return [members[int(rng.integers(len(members)))] for members in _groups(records).values()]


def nearest_to_centroids(x: np.ndarray, centroids: np.ndarray) -> list[int]:
    """Per centroid, the row with the highest cosine similarity; repeats collapsed."""
    xn = x / np.linalg.norm(x, axis=1, keepdims=True)
    cn = centroids / np.linalg.norm(centroids, axis=1, keepdims=True)
    picks: list[int] = []
    for j in range(len(cn)):
        idx = int(np.argmax(xn @ cn[j]))
        if idx not in picks:
            picks.append(idx)
    return picks


def sample_classification_eval(
    records: Sequence[DatasetRecord],
    embeddings: Sequence,
    rng_seed: int,
    n_clusters: int = 3,
) -> list[int]:
    """k-means (k = min(3, group size)) per (company, sentiment) group; closest record to each centre."""
    if len(embeddings) != len(records):
        raise ValueError("one embedding per record required")
    x_all = np.vstack([np.asarray(getattr(v, "values", v), dtype=float) for v in embeddings])
    picks: list[int] = []
    for gi, members in enumerate(_groups(records).values()):
        x = x_all[members]
        k = min(n_clusters, len(members))
        _, centroids = kmeans(x, k, seed=rng_seed * 100_003 + gi)
        picks.extend(members[i] for i in nearest_to_centroids(x, centroids))
    return picks


# ------------------------------------------------------- label aggregation


def simplify_sentiment(record: AnnotationRecord) -> str:
    """Collapse an annotator's sentiment selection to one value.

    not sure -> neutral; positive with negative -> neutral; neutral with one
    polar value -> that value; a single selection maps to itself.
    """
    selected = set(record.sentiments_selected)
    if record.not_sure:
        return "neutral"
    if not selected:
        raise AnnotationError(f"{record.annotator_id}/{record.sample_id}: no sentiment selected")
    if {"positive", "negative"} <= selected:
        return "neutral"
    polar = selected - {"neutral"}
    return polar.pop() if polar else "neutral"


def majority_sentiment(votes: Sequence[str]) -> str:
    """Plurality vote; a tie is resolved with the same rules as ``simplify_sentiment``."""
    if not votes:
        raise AnnotationError("no votes")
    counts = Counter(votes)
    top = max(counts.values())
    tied = {s for s, c in counts.items() if c == top}
    if len(tied) == 1:
        return tied.pop()
    return simplify_sentiment(AnnotationRecord("majority", "tie", sentiments_selected=frozenset(tied)))


@dataclass(frozen=True)
class AspectVerdict:
    aspect: str
    tie_broken_by_order: bool = False


def aggregate_aspect(records: Sequence[AnnotationRecord]) -> AspectVerdict:
    """Most selected aspect; on a draw the most-relevant votes decide among the drawn aspects.

    A remaining draw falls back to the order E, S, G and is flagged.
    """
    counts = Counter(a for r in records for a in r.aspects_selected)
    if not counts:
        raise AnnotationError("no aspects selected")
    top = max(counts.values())
    drawn = sorted((a for a, c in counts.items() if c == top), key=ASPECTS.index)
    if len(drawn) == 1:
        return AspectVerdict(drawn[0])
    relevant_votes = Counter(
        r.most_relevant_aspect for r in records if r.most_relevant_aspect in drawn
    )
    if relevant_votes:
        best = max(relevant_votes.values())
        finalists = [a for a in drawn if relevant_votes.get(a, 0) == best]
    else:
        finalists = drawn
    if len(finalists) == 1:
        return AspectVerdict(finalists[0])
    return AspectVerdict(finalists[0], tie_broken_by_order=True)


def annotator_aspect(record: AnnotationRecord) -> str | None:
    """Single aspect for agreement statistics: the most relevant one, else a sole selection."""
    if record.most_relevant_aspect:
        return record.most_relevant_aspect
    if len(record.aspects_selected) == 1:
        return next(iter(record.aspects_selected))
    return None


# ------------------------------------------------------------ Fleiss kappa


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    p_bar: float
    p_e: float
    degenerate: bool = False


@dataclass(frozen=True)
class AgreementMatrix:
    """Subjects x categories vote counts; every row sums to the same rater count."""

    counts: np.ndarray
    categories: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        m = np.asarray(self.counts)
        if m.ndim != 2 or m.shape[0] < 1:
            raise ValueError("need a non-empty subjects x categories matrix")
        if self.categories and len(self.categories) != m.shape[1]:
            raise ValueError("one category name per column required")
        sums = m.sum(axis=1)
        if np.any(sums != sums[0]):
            raise ValueError("rows must sum to a constant number of raters")

    @property
    def n_raters(self) -> int:
        return int(np.asarray(self.counts)[0].sum())

    @classmethod
    def from_ratings(cls, ratings: Sequence[Sequence[str]], categories: Sequence[str]) -> AgreementMatrix:
        return cls(agreement_matrix(ratings, categories), tuple(categories))


def agreement_matrix(ratings: Sequence[Sequence[str]], categories: Sequence[str]) -> np.ndarray:
    """Subjects x categories vote counts from per-subject rater labels."""
    index = {c: j for j, c in enumerate(categories)}
    m = np.zeros((len(ratings), len(categories)), dtype=int)
    for i, labels in enumerate(ratings):
        for lab in labels:
            m[i, index[lab]] += 1
    return m


def fleiss_kappa(matrix) -> KappaResult:
    """Fleiss' kappa for an N x k matrix of vote counts with a constant number of raters.

    When all votes fall into a single category the expected agreement is 1
    and kappa is undefined: the result is flagged ``degenerate`` with NaN.
    """
    if isinstance(matrix, AgreementMatrix):
        matrix = matrix.counts
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] < 1:
        raise ValueError("need a non-empty subjects x categories matrix")
    if np.any(m < 0) or np.any(m != np.round(m)):
        raise ValueError("vote counts must be non-negative integers")
    raters = m.sum(axis=1)
    n = raters[0]
    if n < 2 or np.any(raters != n):
        raise ValueError("every subject needs the same number (>= 2) of ratings")
    n_subjects = m.shape[0]
    p_j = m.sum(axis=0) / (n_subjects * n)
    p_i = ((m * m).sum(axis=1) - n) / (n * (n - 1))
    p_bar = float(p_i.mean())
    p_e = float((p_j * p_j).sum())
    if math.isclose(p_e, 1.0, rel_tol=0, abs_tol=1e-15):
        return KappaResult(float("nan"), p_bar, p_e, degenerate=True)
    return KappaResult((p_bar - p_e) / (1 - p_e), p_bar, p_e)


# ---------------------------------------------------------- accuracy etc.


@dataclass(frozen=True)
class AccuracyResult:
    accuracy: float
    n: int
    excluded: int


def accuracy(llm_labels: Mapping[str, str | None], gold_labels: Mapping[str, str | None]) -> AccuracyResult:
    """Exact-match rate over samples labelled on both sides; others are counted as excluded."""
    ids = set(llm_labels) | set(gold_labels)
    usable = [i for i in ids if llm_labels.get(i) is not None and gold_labels.get(i) is not None]
    hits = sum(1 for i in usable if llm_labels[i] == gold_labels[i])
    return AccuracyResult(hits / len(usable) if usable else float("nan"), len(usable), len(ids) - len(usable))


def by_sample(annotations: Iterable[AnnotationRecord]) -> dict[str, list[AnnotationRecord]]:
    grouped: dict[str, list[AnnotationRecord]] = defaultdict(list)
    for a in annotations:
        grouped[a.sample_id].append(a)
    return {k: sorted(v, key=lambda a: a.annotator_id) for k, v in sorted(grouped.items())}


def shared_samples(annotations: Iterable[AnnotationRecord]) -> dict[str, list[AnnotationRecord]]:
    """Samples judged by every annotator present in the data."""
    grouped = by_sample(annotations)
    annotators = {a.annotator_id for recs in grouped.values() for a in recs}
    return {s: recs for s, recs in grouped.items() if {r.annotator_id for r in recs} == annotators}


@dataclass(frozen=True)
class RelevancyAgreement:
    all_relevant: float
    majority_relevant: float
    any_relevant: float
    n: int


def relevancy_agreement(samples: Mapping[str, Sequence[AnnotationRecord]]) -> RelevancyAgreement:
    """Shares of samples judged relevant by all / a strict majority / at least one annotator."""
    all_, maj, any_, n = 0, 0, 0, 0
    for recs in samples.values():
        votes = [r.relevant for r in recs if r.relevant is not None]
        if not votes:
            continue
        n += 1
        yes = sum(votes)
        all_ += yes == len(votes)
        maj += yes > len(votes) / 2
        any_ += yes >= 1
    if not n:
        return RelevancyAgreement(float("nan"), float("nan"), float("nan"), 0)
    return RelevancyAgreement(all_ / n, maj / n, any_ / n, n)


def _relevant_by_all(samples: Mapping[str, Sequence[AnnotationRecord]]) -> dict[str, Sequence[AnnotationRecord]]:
    return {s: recs for s, recs in samples.items() if recs and all(r.relevant for r in recs)}


def sentiment_kappa(samples: Mapping[str, Sequence[AnnotationRecord]]) -> KappaResult:
    """Kappa over simplified sentiments of samples every annotator found relevant."""
    ratings = []
    for recs in _relevant_by_all(samples).values():
        try:
            ratings.append([simplify_sentiment(r) for r in recs])
        except AnnotationError:
            continue
    return fleiss_kappa(_uniform(agreement_matrix(ratings, SENTIMENTS)))


def aspect_kappa(samples: Mapping[str, Sequence[AnnotationRecord]]) -> KappaResult:
    ratings = []
    for recs in _relevant_by_all(samples).values():
        labels = [annotator_aspect(r) for r in recs]
        if all(labels):
            ratings.append(labels)
    return fleiss_kappa(_uniform(agreement_matrix(ratings, ASPECTS)))


def _uniform(matrix: np.ndarray) -> np.ndarray:
    """Keep only rows with the modal rater count (kappa needs a constant n)."""
    if len(matrix) == 0:
        raise AnnotationError("no subjects left for kappa")
    sums = matrix.sum(axis=1)
    n = Counter(sums.tolist()).most_common(1)[0][0]
    return matrix[sums == n]


def gold_sentiments(samples: Mapping[str, Sequence[AnnotationRecord]]) -> dict[str, str | None]:
    gold: dict[str, str | None] = {}
    for sid, recs in samples.items():
        votes = []
        for r in recs:
            try:
                votes.append(simplify_sentiment(r))
            except AnnotationError:
                continue
        gold[sid] = majority_sentiment(votes) if votes else None
    return gold


def gold_aspects(samples: Mapping[str, Sequence[AnnotationRecord]]) -> dict[str, str | None]:
    gold: dict[str, str | None] = {}
    for sid, recs in samples.items():
        with_aspects = [r for r in recs if r.aspects_selected]
        gold[sid] = aggregate_aspect(with_aspects).aspect if with_aspects else None
    return gold


@dataclass(frozen=True)
class ScoreBucket:
    irrelevant: int
    total: int

    @property
    def ratio(self) -> float:
        return self.irrelevant / self.total


def relevance_agreement_table(
    samples: Mapping[str, Sequence[AnnotationRecord]], llm_scores: Mapping[str, int]
) -> dict[int, ScoreBucket]:
    """Per LLM relevance score: samples marked irrelevant by at least one annotator / all samples.

    Scores without any evaluated sample are omitted.
    """
    irrelevant: Counter = Counter()
    total: Counter = Counter()
    for sid, recs in samples.items():
        if sid not in llm_scores:
            continue
        score = int(llm_scores[sid])
        total[score] += 1
        irrelevant[score] += any(r.relevant is False for r in recs)
    return {s: ScoreBucket(irrelevant[s], total[s]) for s in sorted(total)}


def render_relevance_table(table: Mapping[int, ScoreBucket], scores: Iterable[int] = range(1, 11)) -> list[tuple[int, str, str]]:
    """Rows (score, "irrelevant/total", ratio) with "-" for scores without samples."""
    rows = []
    for s in scores:
        bucket = table.get(s)
        if bucket is None:
            rows.append((s, "-", "-"))
        else:
            rows.append((s, f"{bucket.irrelevant}/{bucket.total}", f"{bucket.ratio:.2f}"))
    return rows


@dataclass
class LlmLabel:
    sample_id: str
    sentiment: str | None = None
    aspect: str | None = None
    relevance_score: int | None = None
    company: str = ""


@dataclass
class EvaluationReport:
    relevancy: RelevancyAgreement
    sentiment_kappa: KappaResult
    aspect_kappa: KappaResult
    sentiment_accuracy: AccuracyResult
    aspect_accuracy: AccuracyResult
    relevance_table: dict[int, ScoreBucket]
    summary_all_correct: float | None = None
    notes: list[str] = field(default_factory=list)

    def rows(self) -> list[tuple[str, str]]:
        def fmt(x: float) -> str:
            return "nan" if x != x else f"{x:.4f}"

        rows = [
            ("relevancy_all", fmt(self.relevancy.all_relevant)),
            ("relevancy_majority", fmt(self.relevancy.majority_relevant)),
            ("relevancy_any", fmt(self.relevancy.any_relevant)),
            ("relevancy_n", str(self.relevancy.n)),
            ("kappa_sentiment", fmt(self.sentiment_kappa.kappa)),
            ("kappa_aspect", fmt(self.aspect_kappa.kappa)),
            ("accuracy_sentiment", fmt(self.sentiment_accuracy.accuracy)),
            ("accuracy_sentiment_n", str(self.sentiment_accuracy.n)),
            ("accuracy_aspect", fmt(self.aspect_accuracy.accuracy)),
            ("accuracy_aspect_n", str(self.aspect_accuracy.n)),
        ]
        if self.summary_all_correct is not None:
            rows.append(("summary_all_correct", fmt(self.summary_all_correct)))
        for score, bucket in self.relevance_table.items():
            rows.append((f"score_{score}_irrelevant", f"{bucket.irrelevant}/{bucket.total}"))
            rows.append((f"score_{score}_ratio", f"{bucket.ratio:.2f}"))
        return rows

    def text(self) -> str:
        return "\n".join(f"{k:28s} {v}" for k, v in self.rows())


def summary_all_correct(annotations: Iterable[AnnotationRecord]) -> float | None:
    """Share of samples whose summary every annotator judged correct."""
    grouped = by_sample(a for a in annotations if a.summary_correct is not None)
    if not grouped:
        return None
    return sum(all(r.summary_correct for r in recs) for recs in grouped.values()) / len(grouped)


def evaluate(
    annotations: Sequence[AnnotationRecord],
    llm_labels: Mapping[str, LlmLabel],
    summary_annotations: Sequence[AnnotationRecord] = (),
) -> EvaluationReport:
    """All classification-task metrics for one annotation export."""
    grouped = by_sample(annotations)
    shared = shared_samples(annotations)
    gold_s = gold_sentiments(grouped)
    gold_a = gold_aspects(grouped)
    notes = []
    try:
        kappa_s = sentiment_kappa(shared)
    except (AnnotationError, ValueError) as exc:
        kappa_s = KappaResult(float("nan"), float("nan"), float("nan"), True)
        notes.append(f"sentiment kappa unavailable: {exc}")
    try:
        kappa_a = aspect_kappa(shared)
    except (AnnotationError, ValueError) as exc:
        kappa_a = KappaResult(float("nan"), float("nan"), float("nan"), True)
        notes.append(f"aspect kappa unavailable: {exc}")
    return EvaluationReport(
        relevancy=relevancy_agreement(shared),
        sentiment_kappa=kappa_s,
        aspect_kappa=kappa_a,
        sentiment_accuracy=accuracy({s: l.sentiment for s, l in llm_labels.items()}, gold_s),
        aspect_accuracy=accuracy({s: l.aspect for s, l in llm_labels.items()}, gold_a),
        relevance_table=relevance_agreement_table(
            grouped,
            {s: l.relevance_score for s, l in llm_labels.items() if l.relevance_score is not None},
        ),
        summary_all_correct=summary_all_correct(summary_annotations),
        notes=notes,
    )


# ------------------------------------------------------------------- I/O

_ANNOTATION_ALIASES = {
    "annotator_id": ("annotator_id", "annotator", "user_id", "user"),
    "sample_id": ("sample_id", "id", "record_id", "external_id"),
    "summary_correct": ("summary_correct", "correct", "summary_is_correct"),
    "relevant": ("relevant", "relevancy", "is_relevant"),
    "sentiments_selected": ("sentiments_selected", "sentiments", "sentiment"),
    "not_sure": ("not_sure", "unsure"),
    "aspects_selected": ("aspects_selected", "aspects", "aspect"),
    "most_relevant_aspect": ("most_relevant_aspect", "main_aspect", "most_relevant"),
}


def _get(row: Mapping, name: str):
    lowered = {str(k).strip().lower(): v for k, v in row.items()}
    for alias in _ANNOTATION_ALIASES[name]:
        value = lowered.get(alias)
        if value is not None and not (isinstance(value, str) and not value.strip()):
            return value
    return None


def _split(value) -> list[str]:
    if value is None:
        return []
    if isinstance(value, (list, tuple, set, frozenset)):
        return [str(v) for v in value]
    text = str(value).strip()
    if text.startswith("["):
        try:
            return [str(v) for v in json.loads(text)]
        except ValueError:
            text = text.strip("[]")
    return [p.strip().strip("'\"") for p in text.replace(";", ",").replace("|", ",").split(",") if p.strip()]


def _opt_bool(value) -> bool | None:
    if value is None or isinstance(value, bool):
        return value
    try:
        return parse_bool(str(value))
    except ParseError as exc:
        raise AnnotationError(str(exc)) from exc


def annotation_from_row(row: Mapping) -> AnnotationRecord:
    sentiments = []
    not_sure = bool(_opt_bool(_get(row, "not_sure")))
    for s in _split(_get(row, "sentiments_selected")):
        if s.strip().lower().replace("_", " ") in ("not sure", "unsure", "nicht sicher"):
            not_sure = True
            continue
        sentiments.append(normalize_sentiment(s))
    most = _get(row, "most_relevant_aspect")
    try:
        return AnnotationRecord(
            annotator_id=str(_get(row, "annotator_id")),
            sample_id=str(_get(row, "sample_id")),
            summary_correct=_opt_bool(_get(row, "summary_correct")),
            relevant=_opt_bool(_get(row, "relevant")),
            sentiments_selected=frozenset(sentiments),
            not_sure=not_sure,
            aspects_selected=frozenset(normalize_aspect(a) for a in _split(_get(row, "aspects_selected"))),
            most_relevant_aspect=normalize_aspect(str(most)) if most is not None else None,
        )
    except ParseError as exc:
        raise AnnotationError(str(exc)) from exc


def _table_rows(path: Path) -> list[dict]:
    if path.suffix.lower() in (".jsonl", ".ndjson"):
        return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        return data if isinstance(data, list) else data.get("records", [])
    with path.open(encoding="utf-8-sig", newline="") as fh:
        return list(csv.DictReader(fh))


def load_annotations(path: str | Path) -> list[AnnotationRecord]:
    return [annotation_from_row(row) for row in _table_rows(Path(path))]


def load_llm_labels(path: str | Path) -> dict[str, LlmLabel]:
    """Per-sample LLM labels: columns sample_id, sentiment, aspect, relevance_score[, company]."""
    labels = {}
    for row in _table_rows(Path(path)):
        lowered = {str(k).strip().lower(): v for k, v in row.items()}
        sid = str(lowered.get("sample_id") or lowered.get("id"))
        sent = lowered.get("sentiment")
        asp = lowered.get("aspect")
        score = lowered.get("relevance_score") or lowered.get("score")
        labels[sid] = LlmLabel(
            sample_id=sid,
            sentiment=normalize_sentiment(str(sent)) if sent not in (None, "") else None,
            aspect=normalize_aspect(str(asp)) if asp not in (None, "") else None,
            relevance_score=int(float(score)) if score not in (None, "") else None,
            company=str(lowered.get("company") or ""),
        )
    return labels


def write_annotations(records: Iterable[AnnotationRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "annotator_id": r.annotator_id,
                        "sample_id": r.sample_id,
                        "summary_correct": r.summary_correct,
                        "relevant": r.relevant,
                        "sentiments_selected": sorted(r.sentiments_selected),
                        "not_sure": r.not_sure,
                        "aspects_selected": sorted(r.aspects_selected, key=ASPECTS.index),
                        "most_relevant_aspect": r.most_relevant_aspect,
                    }
                )
                + "\n"
            )


def write_report(report: EvaluationReport, csv_path: str | Path, text_path: str | Path | None = None) -> None:
    with Path(csv_path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        writer.writerows(report.rows())
    if text_path is not None:
        body = report.text()
        if report.notes:
            body += "\n\n" + "\n".join(report.notes)
        Path(text_path).write_text(body + "\n", encoding="utf-8")
