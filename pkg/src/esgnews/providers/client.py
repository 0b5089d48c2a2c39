"""Client wrappers adding retries, rate limiting, caching and counters to providers."""

from __future__ import annotations

import threading
import time
from typing import Callable, Sequence

from .base import (
    ChatBackend,
    ChatExchange,
    Embedder,
    EmbeddingVector,
    EntityRecognizer,
    EntitySpan,
    Message,
    ProviderError,
    RateLimiter,
    RetryPolicy,
    call_with_retry,
    validate_embeddings,
    validate_messages,
)
from .cache import MemoryCache, ResponseCache, content_key


class _Guarded:
    def __init__(
        self,
        retry: RetryPolicy = RetryPolicy(),
        rate_per_second: float | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.retry = retry
        self.sleep = sleep
        self.limiter = RateLimiter(rate_per_second, sleep=sleep)
        self._lock = threading.Lock()
        self.calls = 0

    def _run(self, fn, what: str):
        def attempt():
            self.limiter.acquire()
            with self._lock:
                self.calls += 1
            return fn()

        return call_with_retry(attempt, self.retry, self.sleep, what)


class EmbeddingClient(_Guarded):
    def __init__(self, backend: Embedder, **kwargs):
        super().__init__(**kwargs)
        self.backend = backend
        self.provider_id = backend.provider_id
        self._dim: int | None = None

    def embed_texts(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        texts = list(texts)
        if not texts:
            return []
        if any(not isinstance(t, str) or not t.strip() for t in texts):
            raise ValueError("texts must be non-empty strings")
        vectors = self._run(lambda: self.backend.embed_texts(texts), f"{self.provider_id} embed")
        validate_embeddings(vectors, len(texts))
        dim = vectors[0].dim
        if self._dim is None:
            self._dim = dim
        elif dim != self._dim:
            raise ProviderError(f"embedding dimension changed from {self._dim} to {dim}")
        return vectors


class NerClient(_Guarded):
    def __init__(self, backend: EntityRecognizer, **kwargs):
        super().__init__(**kwargs)
        self.backend = backend
        self.provider_id = backend.provider_id

    def ner_entities(self, sentence: str, candidate_labels: Sequence[str]) -> list[EntitySpan]:
        if not sentence.strip():
            raise ValueError("sentence must be non-empty")
        labels = list(candidate_labels)
        if not labels:
            return []
        spans = self._run(
            lambda: self.backend.ner_entities(sentence, labels), f"{self.provider_id} ner"
        )
        allowed = set(labels)
        out = []
        for span in spans:
            if not span.label or span.label not in allowed:
                continue
            if not 0 <= span.start < span.end <= len(sentence):
                raise ProviderError(f"entity span {span} out of bounds")
            out.append(span)
        return sorted(out, key=lambda s: (s.start, s.end, s.label))


class ChatClient(_Guarded):
    """Chat access with a content-addressed response cache."""

    def __init__(
        self,
        backend: ChatBackend,
        cache: ResponseCache | MemoryCache | None = None,
        **kwargs,
    ):
        super().__init__(**kwargs)
        self.backend = backend
        self.provider_id = backend.provider_id
        self.cache = cache if cache is not None else MemoryCache()
        self.cache_hits = 0
        self.tokens = 0

    def exchange(self, messages: Sequence[Message]) -> ChatExchange:
        msgs = validate_messages(messages)
        key = content_key(self.provider_id, msgs)
        cached = self.cache.get(key)
        if cached is not None:
            with self._lock:
                self.cache_hits += 1
            return ChatExchange(msgs, cached, self.provider_id, True)
        response = self._run(lambda: self.backend.complete(msgs), f"{self.provider_id} chat")
        if not isinstance(response, str) or not response.strip():
            raise ProviderError("empty chat response")
        with self._lock:
            # Whitespace word count; a rough per-run volume figure, not billing.
            self.tokens += sum(len(c.split()) for _, c in msgs) + len(response.split())
        self.cache.put(key, response, {"provider": self.provider_id})
        return ChatExchange(msgs, response, self.provider_id, False)

    def chat(self, messages: Sequence[Message]) -> str:
        return self.exchange(messages).response

    def stats(self) -> dict:
        return {
            "provider": self.provider_id,
            "calls": self.calls,
            "cache_hits": self.cache_hits,
            "tokens": self.tokens,
        }
