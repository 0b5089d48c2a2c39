"""Independent reference implementations used as test oracles."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from datetime import datetime, timedelta, timezone

import numpy as np

from esgnews.dedup import DedupConfig

ASPS = ("E", "S", "G")


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.dot(a, b) / (math.sqrt(np.dot(a, a)) * math.sqrt(np.dot(b, b))))


def greedy_dedup_oracle(items, cfg: DedupConfig):
    """Quadratic greedy rule: each item checks every earlier item that was kept."""
    ordered = sorted(items, key=lambda it: (it[1], it[0]))
    kept: list[int] = []
    discarded: dict[str, str] = {}
    for i, (iid, ts, vecs) in enumerate(ordered):
        rep = None
        for j in range(i):
            jid, jts, jvecs = ordered[j]
            if jid in discarded:
                continue
            if ts - jts > cfg.window:
                continue
            sims = [cosine(a, b) for a in vecs for b in jvecs]
            score = max(sims) if cfg.aggregation == "max" else sum(sims) / len(sims)
            if score >= cfg.similarity_threshold:
                rep = jid
                break
        if rep is None:
            kept.append(i)
        else:
            discarded[iid] = rep
    return [ordered[i][0] for i in kept], discarded


def random_dedup_instance(rng: np.random.Generator, n: int, dim: int = 6):
    """Items near a few prototypes, on whole-day (and some exactly 7-day) offsets."""
    base = datetime(2023, 3, 1, tzinfo=timezone.utc)
    prototypes = rng.standard_normal((3, dim))
    items = []
    for i in range(n):
        k = int(rng.integers(1, 3))
        vecs = []
        for _ in range(k):
            p = prototypes[int(rng.integers(3))]
            vecs.append(p + rng.normal(scale=float(rng.choice([0.05, 0.4, 1.0])), size=dim))
        day = int(rng.integers(0, 22))
        if rng.random() < 0.3 and items:
            # Exactly one window after an earlier item.
            day = (items[int(rng.integers(len(items)))][1] - base).days + 7
        items.append((f"x{i:02d}", base + timedelta(days=day), vecs))
    return items


def fleiss_kappa_bruteforce(ratings: list[list[int]], k: int) -> float:
    """Kappa from per-subject rater labels by explicit pair counting."""
    n_subjects = len(ratings)
    n = len(ratings[0])
    agree_total = 0.0
    for labels in ratings:
        pairs = sum(1 for a in range(n) for b in range(n) if a != b and labels[a] == labels[b])
        agree_total += pairs / (n * (n - 1))
    p_bar = agree_total / n_subjects
    totals = [0] * k
    for labels in ratings:
        for lab in labels:
            totals[lab] += 1
    p_e = sum((t / (n_subjects * n)) ** 2 for t in totals)
    return (p_bar - p_e) / (1 - p_e)


def weekly_bruteforce(days, n_weeks_start, n_weeks):
    """Count dates per ISO week by testing every (date, week) pair."""
    counts = []
    for w in range(n_weeks):
        start = n_weeks_start + timedelta(days=7 * w)
        counts.append(sum(1 for d in days if start <= d < start + timedelta(days=7)))
    return counts


# Rule table for simplification, written out by hand for every selection.
SIMPLIFY_TABLE = {
    frozenset({"negative"}): "negative",
    frozenset({"neutral"}): "neutral",
    frozenset({"positive"}): "positive",
    frozenset({"neutral", "positive"}): "positive",
    frozenset({"neutral", "negative"}): "negative",
    frozenset({"positive", "negative"}): "neutral",
    frozenset({"positive", "negative", "neutral"}): "neutral",
}


def majority_oracle(votes):
    c = Counter(votes)
    top = max(c.values())
    tied = frozenset(s for s in c if c[s] == top)
    return next(iter(tied)) if len(tied) == 1 else SIMPLIFY_TABLE[tied]


def annotator_options():
    for size in (1, 2, 3):
        for sel in itertools.combinations(ASPS, size):
            yield frozenset(sel), None
            for m in sel:
                yield frozenset(sel), m


def aspect_oracle(annots):
    counts = {a: sum(a in sel for sel, _ in annots) for a in ASPS}
    top = max(counts.values())
    drawn = [a for a in ASPS if counts[a] == top]
    if len(drawn) == 1:
        return drawn[0], False
    votes = {a: sum(m == a for _, m in annots) for a in drawn}
    best = max(votes.values())
    finalists = [a for a in drawn if votes[a] == best]
    return finalists[0], len(finalists) > 1


def random_ratings(rng):
    n_subjects = int(rng.integers(1, 30))
    n_raters = int(rng.integers(2, 7))
    k = int(rng.integers(2, 5))
    ratings = rng.integers(0, k, size=(n_subjects, n_raters)).tolist()
    return ratings, k
