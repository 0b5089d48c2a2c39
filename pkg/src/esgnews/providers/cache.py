"""On-disk response cache, one JSON file per content hash."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Sequence

from .base import Message


def content_key(provider_id: str, messages: Sequence[Message]) -> str:
    payload = json.dumps(
        {"provider": provider_id, "messages": [list(m) for m in messages]},
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """Maps a content hash to a stored response.

    Writes go through a temp file and ``os.replace``, so concurrent writers
    never expose a partial file; readers either see nothing or a full entry.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path_for(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> str | None:
        try:
            data = json.loads(self.path_for(key).read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        except (OSError, json.JSONDecodeError):
            return None
        return data.get("response")

    def put(self, key: str, response: str, meta: dict | None = None) -> None:
        entry = {"key": key, "response": response, **(meta or {})}
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(entry, fh, ensure_ascii=False)
            os.replace(tmp, self.path_for(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def __len__(self) -> int:
        return sum(1 for _ in self.directory.glob("*.json"))


class MemoryCache:
    def __init__(self) -> None:
        self._entries: dict[str, str] = {}

    def get(self, key: str) -> str | None:
        return self._entries.get(key)

    def put(self, key: str, response: str, meta: dict | None = None) -> None:
        self._entries[key] = response

    def __len__(self) -> int:
        return len(self._entries)
