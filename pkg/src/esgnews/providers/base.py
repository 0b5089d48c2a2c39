"""Provider contracts shared by the embedding, NER and chat back ends."""

from __future__ import annotations

import logging
import math
import threading
import time
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence, TypeVar, runtime_checkable

logger = logging.getLogger(__name__)

T = TypeVar("T")

ROLES = ("system", "user", "assistant")

Message = tuple[str, str]


class ProviderError(Exception):
    """Non-retryable provider failure (bad request, invalid payload)."""


class TransportError(ProviderError):
    """Retryable failure: network error, timeout, 5xx or rate-limit response."""


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding contains non-finite values")

    @property
    def dim(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class EntitySpan:
    text: str
    label: str
    start: int
    end: int

    def overlaps(self, start: int, end: int) -> bool:
        return self.start < end and start < self.end


@dataclass(frozen=True)
class ChatExchange:
    messages: tuple[Message, ...]
    response: str
    provider_id: str
    cache_hit: bool


@runtime_checkable
class Embedder(Protocol):
    provider_id: str

    def embed_texts(self, texts: Sequence[str]) -> list[EmbeddingVector]: ...


@runtime_checkable
class EntityRecognizer(Protocol):
    provider_id: str

    def ner_entities(self, sentence: str, candidate_labels: Sequence[str]) -> list[EntitySpan]: ...


@runtime_checkable
class ChatBackend(Protocol):
    """Raw chat completion; caching and retries are layered on by ``ChatClient``."""

    provider_id: str

    def complete(self, messages: Sequence[Message]) -> str: ...


def validate_messages(messages: Sequence[Message]) -> tuple[Message, ...]:
    msgs = tuple((str(role), str(content)) for role, content in messages)
    if not msgs:
        raise ValueError("empty message list")
    for i, (role, _) in enumerate(msgs):
        if role not in ROLES:
            raise ValueError(f"unknown role {role!r}")
        if i and role == "assistant" and msgs[i - 1][0] == "assistant":
            raise ValueError("two consecutive assistant turns")
    if msgs[-1][0] != "user":
        raise ValueError("conversation must end with a user turn")
    return msgs


def validate_embeddings(vectors: Sequence[EmbeddingVector], n_inputs: int) -> None:
    if len(vectors) != n_inputs:
        raise ProviderError(f"expected {n_inputs} embeddings, got {len(vectors)}")
    dims = {v.dim for v in vectors}
    if len(dims) > 1:
        raise ProviderError(f"mixed embedding dimensions {sorted(dims)}")


@dataclass(frozen=True)
class RetryPolicy:
    attempts: int = 3
    initial_delay: float = 1.0
    multiplier: float = 2.0

    def delays(self) -> list[float]:
        return [self.initial_delay * self.multiplier**i for i in range(self.attempts - 1)]


def call_with_retry(
    fn: Callable[[], T],
    policy: RetryPolicy = RetryPolicy(),
    sleep: Callable[[float], None] = time.sleep,
    what: str = "provider call",
) -> T:
    """Run ``fn`` retrying ``TransportError`` with exponential backoff.

    The last ``TransportError`` is re-raised once attempts are exhausted;
    other exceptions propagate immediately.
    """
    delays = policy.delays()
    for attempt in range(policy.attempts):
        try:
            return fn()
        except TransportError as exc:
            if attempt == policy.attempts - 1:
                raise
            logger.warning("%s failed (attempt %d/%d): %s", what, attempt + 1, policy.attempts, exc)
            sleep(delays[attempt])
    raise AssertionError("unreachable")


class RateLimiter:
    """Spaces calls at least ``1 / rate`` seconds apart across threads."""

    def __init__(
        self,
        rate: float | None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.interval = 0.0 if not rate else 1.0 / rate
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next = 0.0

    def acquire(self) -> None:
        if not self.interval:
            return
        with self._lock:
            now = self._clock()
            slot = max(now, self._next)
            self._next = slot + self.interval
        if slot > now:
            self._sleep(slot - now)
