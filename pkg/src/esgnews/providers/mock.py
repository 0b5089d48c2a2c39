"""Deterministic offline providers.

Every mock is a pure function of (seed, input), which makes whole pipeline
runs bit-reproducible without network access.
"""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from typing import Callable, Mapping, Sequence

import numpy as np

from .base import EmbeddingVector, EntitySpan, Message

_TOKEN = re.compile(r"\w+")


def tokenize(text: str) -> list[str]:
    return [t.casefold() for t in _TOKEN.findall(text)]


def token_vector(token: str, seed: int, dim: int) -> np.ndarray:
    """Standard-normal vector seeded by sha256 of ``"{seed}:{token}"``."""
    digest = hashlib.sha256(f"{seed}:{token}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    return rng.standard_normal(dim)


class MockEmbedder:
    """Bag-of-tokens embedding: sum of per-token seeded vectors, unit-normalised.

    Texts with the same token multiset embed identically; texts sharing most
    tokens land close together, so reprints behave like near-duplicates.
    """

    def __init__(self, dim: int = 64, seed: int = 0, provider_id: str = "mock-embedder"):
        self.dim = dim
        self.seed = seed
        self.provider_id = provider_id
        self._cache: dict[str, np.ndarray] = {}

    def _token(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            vec = self._cache[token] = token_vector(token, self.seed, self.dim)
        return vec

    def embed_one(self, text: str) -> np.ndarray:
        counts = Counter(tokenize(text))
        if not counts:
            counts = Counter({"": 1})
        total = np.zeros(self.dim)
        for token in sorted(counts):
            total += counts[token] * self._token(token)
        return total / np.linalg.norm(total)

    def embed_texts(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return [EmbeddingVector(tuple(float(x) for x in self.embed_one(t))) for t in texts]


class MockNer:
    """Table-driven NER: leftmost-longest, case-sensitive phrase lookup.

    ``table`` maps surface phrases to labels. A longer phrase shadows the
    shorter ones it contains, so ``"Allianz der Staaten" -> "other"`` keeps the
    word Allianz in that phrase from being tagged as an organization.
    """

    def __init__(self, table: Mapping[str, str], provider_id: str = "mock-ner"):
        self.table = dict(table)
        self.provider_id = provider_id
        phrases = sorted(self.table, key=lambda p: (-len(p), p))
        self._pattern = (
            re.compile("|".join(rf"(?<!\w){re.escape(p)}(?!\w)" for p in phrases))
            if phrases
            else None
        )

    def ner_entities(self, sentence: str, candidate_labels: Sequence[str]) -> list[EntitySpan]:
        if self._pattern is None:
            return []
        labels = set(candidate_labels)
        spans = []
        for m in self._pattern.finditer(sentence):
            label = self.table[m.group(0)]
            if label in labels:
                spans.append(EntitySpan(m.group(0), label, m.start(), m.end()))
        return spans


Responder = Callable[[Sequence[Message], int], str]


class MockChat:
    """Chat backend delegating to a rule function ``responder(messages, seed)``."""

    def __init__(self, responder: Responder, seed: int = 0, provider_id: str = "mock-chat"):
        self.responder = responder
        self.seed = seed
        self.provider_id = provider_id

    def complete(self, messages: Sequence[Message]) -> str:
        return self.responder(messages, self.seed)
