"""Per-company topic detection: keyword-augmented embeddings, clustering, class-based TF-IDF."""

from __future__ import annotations

import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .analytics import SENTIMENT_VALUE
from .clustering import kmeans
from .llm_stages.parsing import ASPECTS
from .records import DatasetRecord

STOPWORDS_EN = frozenset(
    """
    a about above after again against all also am an and any are as at be because been before
    being below between both but by can could did do does doing down during each few for from
    further had has have having he her here hers herself him himself his how i if in into is it
    its itself just me more most my myself no nor not now of off on once only or other our ours
    ourselves out over own same she should so some such than that the their theirs them
    themselves then there these they this those through to too under until up very was we were
    what when where which while who whom why will with would you your yours yourself yourselves
    said says new one two also however according company companies year years
    """.split()
)

STOPWORDS_DE = frozenset(
    """
    aber alle allem allen aller alles als also am an ander andere anderem anderen anderer
    anderes auch auf aus bei bin bis bist da damit dann das dass dein deine dem den denn der
    des dessen deshalb die dies diese diesem diesen dieser dieses doch dort du durch ein eine
    einem einen einer eines einige einigen er es etwas euch euer eure für gegen gewesen hab habe
    haben hat hatte hatten hier hin hinter ich ihm ihn ihnen ihr ihre ihrem ihren ihrer ihres im
    in indem ins ist jede jedem jeden jeder jedes jene jetzt kann kein keine keinem keinen keiner
    können könnte machen man manche mehr mein meine mit muss musste nach nicht nichts noch nun nur
    ob oder ohne sehr sein seine seinem seinen seiner seit sich sie sind so solche soll sollte
    sondern sowie über um und uns unser unsere unter vom von vor war waren warum was weg weil
    weiter welche welchem welchen welcher wenn wer werde werden wie wieder will wir wird wirst wo
    wollen wurde wurden zu zum zur zwar zwischen sei seien laut bereits rund sowie gibt geht
    unternehmen konzern jahr jahre jahren prozent millionen milliarden euro
    """.split()
)

STOPWORDS = STOPWORDS_EN | STOPWORDS_DE

_WORD = re.compile(r"[^\W\d_]+(?:-[^\W\d_]+)*", re.UNICODE)


def tokenize(text: str, stopwords: frozenset[str] = STOPWORDS, min_len: int = 2) -> list[str]:
    return [
        t for t in (w.lower() for w in _WORD.findall(text)) if len(t) >= min_len and t not in stopwords
    ]


def augment_text(summary: str, keywords: Sequence[str], company_names: Sequence[str]) -> str:
    """Append keywords to the summary, dropping any keyword that contains a company name."""
    if not summary or not summary.strip():
        raise ValueError("summary must be non-empty")
    names = [n.casefold() for n in company_names if n]
    kept = [kw for kw in keywords if kw and not any(n in kw.casefold() for n in names)]
    return f"{summary} {' '.join(kept)}" if kept else summary


@dataclass(frozen=True)
class ClusterConfig:
    k: int | None = None
    max_k: int = 30
    min_docs: int = 4
    min_cluster_size: int = 1
    seed: int = 0
    n_init: int = 4
    max_iter: int = 100

    def choose_k(self, n: int) -> int:
        if self.k is not None:
            return self.k
        return max(1, min(self.max_k, math.ceil(math.sqrt(n / 2))))


def cluster_documents(vectors: Sequence, cfg: ClusterConfig = ClusterConfig()) -> list[int]:
    """Spherical k-means labels, renumbered by descending cluster size.

    Clusters smaller than ``cfg.min_cluster_size`` become outliers (-1). With
    fewer than ``cfg.min_docs`` documents everything lands in cluster 0.
    """
    n = len(vectors)
    if n == 0:
        return []
    if n < cfg.min_docs:
        return [0] * n
    x = np.vstack([np.asarray(getattr(v, "values", v), dtype=float) for v in vectors])
    labels, _ = kmeans(
        x, cfg.choose_k(n), seed=cfg.seed, n_init=cfg.n_init, max_iter=cfg.max_iter, spherical=True
    )
    sizes = Counter(labels.tolist())
    first = {}
    for i, lab in enumerate(labels.tolist()):
        first.setdefault(lab, i)
    order = sorted(sizes, key=lambda lab: (-sizes[lab], first[lab]))
    survivors = [lab for lab in order if sizes[lab] >= cfg.min_cluster_size]
    mapping = {lab: -1 for lab in order}
    mapping.update({lab: i for i, lab in enumerate(survivors)})
    return [mapping[lab] for lab in labels.tolist()]


def class_tfidf_weights(
    class_tokens: Mapping[int, Sequence[str]],
) -> dict[int, dict[str, float]]:
    """weight(t, c) = tf(t, c) * log(1 + A / tf(t)).

    ``tf(t, c)`` counts t in the concatenated documents of class c, ``tf(t)``
    counts it over all classes and ``A`` is the mean token count per class.
    Empty classes are skipped.
    """
    counts = {c: Counter(toks) for c, toks in class_tokens.items() if toks}
    if not counts:
        return {}
    overall: Counter = Counter()
    for cnt in counts.values():
        overall.update(cnt)
    avg_words = sum(sum(cnt.values()) for cnt in counts.values()) / len(counts)
    return {
        c: {t: f * math.log(1 + avg_words / overall[t]) for t, f in cnt.items()}
        for c, cnt in counts.items()
    }


def class_tfidf(
    clusters: Mapping[int, Sequence[str]],
    top_k: int = 10,
    tokenizer: Callable[[str], list[str]] = tokenize,
) -> dict[int, list[tuple[str, float]]]:
    """Top ``top_k`` terms per class; ties broken alphabetically."""
    tokens = {c: [t for doc in docs for t in tokenizer(doc)] for c, docs in clusters.items()}
    weights = class_tfidf_weights(tokens)
    return {
        c: sorted(w.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k] for c, w in weights.items()
    }


@dataclass
class TopicSummary:
    topic_id: int
    members: list[int]
    top_terms: list[tuple[str, float]]
    mean_relevance: float
    mean_sentiment: float
    # month "YYYY-MM" -> aspect -> (positive count, negative count)
    monthly: dict[str, dict[str, tuple[int, int]]] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.members)


def monthly_aspect_series(records: Iterable[DatasetRecord]) -> dict[str, dict[str, tuple[int, int]]]:
    counts: dict[str, dict[str, list[int]]] = defaultdict(lambda: {a: [0, 0] for a in ASPECTS})
    for r in records:
        month = r.published_at.strftime("%Y-%m")
        slot = counts[month][r.aspect]
        if r.sentiment == "positive":
            slot[0] += 1
        elif r.sentiment == "negative":
            slot[1] += 1
    return {m: {a: tuple(v) for a, v in counts[m].items()} for m in sorted(counts)}


def topic_report(
    records: Sequence[DatasetRecord],
    labels: Sequence[int],
    texts: Sequence[str] | None = None,
    top_k: int = 10,
) -> list[TopicSummary]:
    """One summary per non-outlier cluster, sorted by mean relevance (desc), then topic id."""
    if len(records) != len(labels):
        raise ValueError("records and labels differ in length")
    texts = list(texts) if texts is not None else [r.summary for r in records]
    members: dict[int, list[int]] = defaultdict(list)
    for i, lab in enumerate(labels):
        if lab >= 0:
            members[lab].append(i)
    terms = class_tfidf({lab: [texts[i] for i in idx] for lab, idx in members.items()}, top_k)
    topics = []
    for lab, idx in members.items():
        group = [records[i] for i in idx]
        scores = [r.relevance_score for r in group if r.relevance_score is not None]
        sentiments = [SENTIMENT_VALUE[r.sentiment] for r in group if r.sentiment in SENTIMENT_VALUE]
        topics.append(
            TopicSummary(
                topic_id=lab,
                members=idx,
                top_terms=terms.get(lab, []),
                mean_relevance=sum(scores) / len(scores) if scores else float("nan"),
                mean_sentiment=sum(sentiments) / len(sentiments) if sentiments else 0.0,
                monthly=monthly_aspect_series(group),
            )
        )
    topics.sort(
        key=lambda t: (math.inf if math.isnan(t.mean_relevance) else -t.mean_relevance, t.topic_id)
    )
    return topics


def detect_topics(
    records: Sequence[DatasetRecord],
    embedder,
    company_names: Sequence[str],
    cfg: ClusterConfig = ClusterConfig(),
    top_k: int = 10,
) -> list[TopicSummary]:
    """Augment, embed, cluster and summarise one company's records."""
    texts = [augment_text(r.summary or r.summary_en or "-", r.keywords, company_names) for r in records]
    vectors = []
    for i in range(0, len(texts), 64):
        vectors.extend(embedder.embed_texts(texts[i : i + 64]))
    labels = cluster_documents(vectors, cfg)
    return topic_report(records, labels, texts, top_k)
