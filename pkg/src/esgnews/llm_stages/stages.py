"""The two chat protocols (relevance filter, final determination) and summary translation."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

from ..corpus import Article, CompanySpec
from ..providers import Message, ProviderError
from . import prompts
from .parsing import FieldSpec, ParseError, parse_structured_response

logger = logging.getLogger(__name__)

REPROMPT_BUDGET = 2


@dataclass
class FilterVerdict:
    initial_relevant: bool
    explanation: str
    summary: str
    direct_esg: bool
    final_relevant: bool

    @property
    def passes(self) -> bool:
        return self.final_relevant and self.direct_esg


@dataclass
class Determination:
    summary: str
    relevant: bool
    relevance_score: int
    sentiment: str | None = None
    aspect: str | None = None
    keywords: list[str] = field(default_factory=list)
    summary_en: str | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.relevance_score <= 10:
            raise ValueError(f"relevance_score {self.relevance_score} outside 1..10")
        if len({k.casefold() for k in self.keywords}) != len(self.keywords):
            raise ValueError("keywords must be distinct")
        if not self.relevant:
            self.sentiment = None
            self.aspect = None
        elif self.sentiment is None or self.aspect is None:
            raise ValueError("relevant determination needs sentiment and aspect")


@dataclass
class QuarantineRecord:
    article_id: str
    stage: str
    attempts: int
    last_error: str
    raw_response: str = ""

    def to_record(self) -> dict:
        return asdict(self)


class StageFailure(Exception):
    """Raised when a protocol cannot complete; carries the quarantine record."""

    def __init__(self, record: QuarantineRecord):
        super().__init__(f"{record.article_id} quarantined in {record.stage}: {record.last_error}")
        self.record = record


class _Conversation:
    def __init__(self, chat, article_id: str, stage: str, system: str):
        self.chat = chat
        self.article_id = article_id
        self.stage = stage
        self.messages: list[Message] = [("system", system)]

    def ask(self, prompt: str, fields: Sequence[str], schema: list[FieldSpec]) -> dict:
        """Send one turn; re-prompt with a format reminder on parse errors."""
        turn: list[Message] = [("user", prompt)]
        raw = ""
        error = ""
        for _ in range(REPROMPT_BUDGET + 1):
            try:
                raw = self.chat.chat(self.messages + turn)
            except ProviderError as exc:
                raise StageFailure(
                    QuarantineRecord(
                        self.article_id, self.stage, REPROMPT_BUDGET + 1, f"provider: {exc}", raw
                    )
                ) from exc
            try:
                parsed = parse_structured_response(raw, schema)
            except ParseError as exc:
                logger.info("%s/%s: unparseable answer (%s)", self.article_id, self.stage, exc)
                error = str(exc)
                turn = turn + [("assistant", raw), ("user", prompts.reminder(fields, error))]
                continue
            # Only the accepted answer stays in the history for later turns.
            self.messages += [turn[0], ("assistant", raw)]
            return parsed
        raise StageFailure(
            QuarantineRecord(self.article_id, self.stage, REPROMPT_BUDGET + 1, error, raw)
        )


def _names(company: CompanySpec, company_names: Mapping[str, str] | None) -> list[str]:
    names = company_names or {}
    return [names.get(cid, cid) for cid in company.related_company_ids]


def run_filter_stage(
    article: Article,
    company: CompanySpec,
    chat,
    company_names: Mapping[str, str] | None = None,
) -> FilterVerdict:
    """Relevance -> explanation and summary -> direct ESG -> relevance again.

    The last turn quotes the model's own explanation, summary and direct-ESG
    answer back to it. Raises ``StageFailure`` when a turn stays unparseable.
    """
    conv = _Conversation(chat, article.record_id, "llm-filter", prompts.FILTER_SYSTEM)
    name = company.display_name
    first = conv.ask(
        prompts.filter_initial(article, name, _names(company, company_names)),
        ["relevant"],
        [FieldSpec("relevant", "bool")],
    )
    explained = conv.ask(
        prompts.filter_explain(name),
        ["explanation", "summary"],
        [FieldSpec("explanation", "text"), FieldSpec("summary", "text")],
    )
    direct = conv.ask(prompts.filter_direct(name), ["direct_esg"], [FieldSpec("direct_esg", "bool")])
    final = conv.ask(
        prompts.filter_final(name, explained["explanation"], explained["summary"], direct["direct_esg"]),
        ["relevant"],
        [FieldSpec("relevant", "bool")],
    )
    return FilterVerdict(
        initial_relevant=first["relevant"],
        explanation=explained["explanation"],
        summary=explained["summary"],
        direct_esg=direct["direct_esg"],
        final_relevant=final["relevant"],
    )


DETERMINATION_SCHEMA = [
    FieldSpec("summary", "text"),
    FieldSpec("relevant", "bool"),
    FieldSpec("sentiment", "sentiment", required=False),
    FieldSpec("aspect", "aspect", required=False),
    FieldSpec("score", "score"),
    FieldSpec("keywords", "keywords", required=False),
]


def parse_determination(raw: str) -> Determination:
    fields = parse_structured_response(raw, DETERMINATION_SCHEMA)
    if fields["relevant"] and (fields["sentiment"] is None or fields["aspect"] is None):
        raise ParseError("relevant article without sentiment or aspect")
    return Determination(
        summary=fields["summary"],
        relevant=fields["relevant"],
        relevance_score=fields["score"],
        sentiment=fields["sentiment"],
        aspect=fields["aspect"],
        keywords=fields["keywords"] or [],
    )


def run_determination(
    article: Article,
    company: CompanySpec,
    chat,
    company_names: Mapping[str, str] | None = None,
) -> Determination:
    """Single-turn final verdict; English prompt, German answer, related companies named."""
    conv = _Conversation(chat, article.record_id, "determine", prompts.DETERMINATION_SYSTEM)
    prompt = prompts.determination(article, company.display_name, _names(company, company_names))
    turn: list[Message] = [("user", prompt)]
    raw = ""
    error = ""
    for _ in range(REPROMPT_BUDGET + 1):
        try:
            raw = chat.chat(conv.messages + turn)
        except ProviderError as exc:
            raise StageFailure(
                QuarantineRecord(
                    article.record_id, "determine", REPROMPT_BUDGET + 1, f"provider: {exc}", raw
                )
            ) from exc
        try:
            return parse_determination(raw)
        except (ParseError, ValueError) as exc:
            error = str(exc)
            turn = turn + [
                ("assistant", raw),
                ("user", prompts.reminder(prompts.DETERMINATION_FIELDS, error)),
            ]
    raise StageFailure(
        QuarantineRecord(article.record_id, "determine", REPROMPT_BUDGET + 1, error, raw)
    )


def translate_summary(summary_de: str, chat) -> str | None:
    """English version of a German summary; ``None`` when the provider or parsing fails."""
    if not summary_de or not summary_de.strip():
        raise ValueError("summary must be non-empty")
    messages: list[Message] = [
        ("system", prompts.TRANSLATION_SYSTEM),
        ("user", prompts.translation(summary_de)),
    ]
    try:
        raw = chat.chat(messages)
        parsed = parse_structured_response(raw, [FieldSpec("translation", "text")])
    except (ProviderError, ParseError) as exc:
        logger.warning("translation failed: %s", exc)
        return None
    return parsed["translation"]


def apply_translation(det: Determination, chat) -> Determination:
    """Store (or overwrite) ``summary_en``; a failed translation leaves it unset."""
    det.summary_en = translate_summary(det.summary, chat)
    return det
