"""Rule table for the mock chat backend.

The responder answers whatever fields the last user turn asks for, driven by
marker tokens embedded in the article text:

==================  =====================================================
FILTER_IRRELEVANT   filter stage answers "no" to relevance
RELEVANT            filter stage answers "yes" to relevance
INITIAL_NO          first filter relevance answer is "no" (final unaffected)
ESG_DIRECT          filter stage: ESG issues directly addressed
IRRELEVANT          determination answers "not relevant"
ESG_POS/NEG/NEU     determination sentiment
ASPECT_E/S/G        determination aspect
SCORE_<n>           determination relevance score (may be out of range)
KW_<word>           determination keyword
GARBLE              every answer is unparseable
GARBLE_ONCE         unparseable until the model has been reminded once
TRANSPORT_FAIL      every call raises a transport error
==================  =====================================================

Articles without a relevance marker are not relevant to the filter stage.
"""

from __future__ import annotations

import hashlib
import re
from typing import Sequence

from ..providers import Message, TransportError
from .parsing import FIELD_LABELS
from .prompts import ARTICLE_END, FORMAT_HEADER

_MARKER = re.compile(r"\b(?:[A-Z]+_[A-Z0-9_]+|RELEVANT|IRRELEVANT|GARBLE)\b")
_LABELS = {alias: name for name, aliases in FIELD_LABELS.items() for alias in aliases}
_SENTIMENT_OUT = {"ESG_POS": "positiv", "ESG_NEG": "negativ", "ESG_NEU": "neutral"}
_ASPECT_OUT = {"ASPECT_E": "Umwelt", "ASPECT_S": "Soziales", "ASPECT_G": "Governance"}


def markers(text: str) -> list[str]:
    return _MARKER.findall(text)


def requested_fields(prompt: str) -> list[str]:
    if FORMAT_HEADER not in prompt:
        return []
    block = prompt.split(FORMAT_HEADER, 1)[1]
    fields = []
    for line in block.strip().splitlines():
        label = line.split(":", 1)[0].strip().casefold()
        if label in _LABELS:
            fields.append(_LABELS[label])
    return fields


def _article_text(prompt: str) -> str:
    if "ARTICLE:\n" not in prompt:
        return prompt
    return prompt.split("ARTICLE:\n", 1)[1].split("\n" + ARTICLE_END, 1)[0]


def _plain(text: str) -> str:
    words = [w for w in text.split() if not _MARKER.fullmatch(w.strip(".,;:!?"))]
    return " ".join(words)


def _summary(article: str, company: str) -> str:
    words = _plain(article).split()
    return f"{company}: " + " ".join(words[:40])


def _company(prompt: str) -> str:
    m = re.search(r"Target company: (.+?)\.(?:\s|$)", prompt)
    return m.group(1) if m else "Unternehmen"


def _default_score(article: str, seed: int) -> int:
    digest = hashlib.sha256(f"{seed}:{article}".encode("utf-8")).digest()
    return 5 + digest[0] % 5


def _keywords(article: str, marks: list[str]) -> list[str]:
    explicit = [m[3:].replace("_", " ").lower() for m in marks if m.startswith("KW_")]
    if explicit:
        return explicit
    words = re.findall(r"[A-Za-zÄÖÜäöüß]{6,}", _plain(article))
    seen: list[str] = []
    for w in sorted(set(words), key=lambda w: (-len(w), w)):
        seen.append(w)
        if len(seen) == 3:
            break
    return seen


def esg_mock_responder(messages: Sequence[Message], seed: int) -> str:
    first_user = next(c for r, c in messages if r == "user")
    last_user = messages[-1][1]
    article = _article_text(first_user)
    marks = markers(article if "ARTICLE:\n" in first_user else first_user)
    if "TRANSPORT_FAIL" in marks:
        raise TransportError("mock transport failure")
    reminded = any(r == "assistant" for r, _ in messages) and "could not be processed" in last_user
    if "GARBLE" in marks or ("GARBLE_ONCE" in marks and not reminded):
        return "I am not able to answer in that format."

    fields = requested_fields(last_user)
    determination = "sentiment" in fields
    company = _company(first_user)
    assistant_turns = sum(1 for r, _ in messages if r == "assistant")
    lines = []
    for field in fields:
        if field == "relevant":
            if determination:
                value = "nein" if "IRRELEVANT" in marks else "ja"
            elif assistant_turns == 0 and "INITIAL_NO" in marks:
                value = "no"
            else:
                value = "yes" if "RELEVANT" in marks and "FILTER_IRRELEVANT" not in marks else "no"
            lines.append(f"Relevant: {value}")
        elif field == "explanation":
            lines.append("Explanation: The article mentions the target company.")
        elif field == "summary":
            lines.append(f"Summary: {_summary(article, company)}")
        elif field == "direct_esg":
            lines.append(f"Direct ESG: {'yes' if 'ESG_DIRECT' in marks else 'no'}")
        elif field == "sentiment":
            if "IRRELEVANT" in marks:
                lines.append("Sentiment: -")
            else:
                found = [_SENTIMENT_OUT[m] for m in marks if m in _SENTIMENT_OUT]
                lines.append(f"Sentiment: {found[0] if found else 'neutral'}")
        elif field == "aspect":
            if "IRRELEVANT" in marks:
                lines.append("Aspekt: -")
            else:
                found = [_ASPECT_OUT[m] for m in marks if m in _ASPECT_OUT]
                lines.append(f"Aspekt: {found[0] if found else 'Umwelt'}")
        elif field == "score":
            explicit = [m for m in marks if re.fullmatch(r"SCORE_\d+", m)]
            score = int(explicit[0][6:]) if explicit else _default_score(article, seed)
            lines.append(f"Score: {score}")
        elif field == "keywords":
            lines.append(f"Keywords: {', '.join(_keywords(article, marks))}")
        elif field == "translation":
            summary = last_user.split("SUMMARY:\n", 1)[1].split("\n\n" + FORMAT_HEADER, 1)[0]
            lines.append(f"Translation: [EN] {summary}")
    return "\n".join(lines)
