"""HTTP back ends for OpenAI-compatible chat/embedding APIs and a GLiNER-style NER service."""

from __future__ import annotations

import os
from typing import Any, Sequence

import httpx

from .base import EmbeddingVector, EntitySpan, Message, ProviderError, TransportError


def _api_key(env_var: str | None) -> str | None:
    if not env_var:
        return None
    key = os.environ.get(env_var)
    if not key:
        raise ProviderError(f"environment variable {env_var} is not set")
    return key


class _HttpBackend:
    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str | None = None,
        timeout: float = 60.0,
        provider_id: str | None = None,
        client: httpx.Client | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.provider_id = provider_id or model
        self.api_key_env = api_key_env
        self._client = client or httpx.Client(timeout=timeout)

    def _post(self, path: str, payload: dict[str, Any]) -> Any:
        headers = {}
        key = _api_key(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = self._client.post(f"{self.base_url}{path}", json=payload, headers=headers)
        except httpx.HTTPError as exc:
            raise TransportError(f"{self.provider_id}: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"{self.provider_id}: HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderError(f"{self.provider_id}: HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise ProviderError(f"{self.provider_id}: invalid JSON body") from exc


class HttpChat(_HttpBackend):
    def __init__(self, *args, temperature: float = 0.0, **kwargs):
        super().__init__(*args, **kwargs)
        self.temperature = temperature

    def complete(self, messages: Sequence[Message]) -> str:
        body = self._post(
            "/chat/completions",
            {
                "model": self.model,
                "temperature": self.temperature,
                "messages": [{"role": r, "content": c} for r, c in messages],
            },
        )
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"{self.provider_id}: unexpected chat payload") from exc


class HttpEmbedder(_HttpBackend):
    def embed_texts(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        body = self._post("/embeddings", {"model": self.model, "input": list(texts)})
        try:
            rows = sorted(body["data"], key=lambda d: d["index"])
            return [EmbeddingVector(tuple(float(x) for x in d["embedding"])) for d in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"{self.provider_id}: unexpected embedding payload") from exc


class HttpNer(_HttpBackend):
    """POST ``{text, labels, threshold}`` to ``/ner``; expects ``{"entities": [...]}``."""

    def __init__(self, *args, threshold: float = 0.5, **kwargs):
        super().__init__(*args, **kwargs)
        self.threshold = threshold

    def ner_entities(self, sentence: str, candidate_labels: Sequence[str]) -> list[EntitySpan]:
        body = self._post(
            "/ner",
            {
                "model": self.model,
                "text": sentence,
                "labels": list(candidate_labels),
                "threshold": self.threshold,
            },
        )
        try:
            return [
                EntitySpan(str(e["text"]), str(e["label"]), int(e["start"]), int(e["end"]))
                for e in body["entities"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"{self.provider_id}: unexpected NER payload") from exc
