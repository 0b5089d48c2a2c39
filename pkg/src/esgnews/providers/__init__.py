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
    TransportError,
    call_with_retry,
    validate_messages,
)
from .cache import MemoryCache, ResponseCache, content_key
from .client import ChatClient, EmbeddingClient, NerClient
from .http import HttpChat, HttpEmbedder, HttpNer
from .mock import MockChat, MockEmbedder, MockNer, token_vector, tokenize

__all__ = [
    "ChatBackend",
    "ChatClient",
    "ChatExchange",
    "Embedder",
    "EmbeddingClient",
    "EmbeddingVector",
    "EntityRecognizer",
    "EntitySpan",
    "HttpChat",
    "HttpEmbedder",
    "HttpNer",
    "MemoryCache",
    "Message",
    "MockChat",
    "MockEmbedder",
    "MockNer",
    "NerClient",
    "ProviderError",
    "RateLimiter",
    "ResponseCache",
    "RetryPolicy",
    "TransportError",
    "call_with_retry",
    "content_key",
    "token_vector",
    "tokenize",
    "validate_messages",
]
