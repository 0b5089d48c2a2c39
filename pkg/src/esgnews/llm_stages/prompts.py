"""Prompt builders for the filter, determination and translation conversations."""

from __future__ import annotations

from typing import Sequence

from ..corpus import Article
from .parsing import CANONICAL_LABEL

FORMAT_HEADER = "Answer using exactly these lines:"
ARTICLE_END = "END OF ARTICLE"

FILTER_SYSTEM = (
    "You screen news articles for a sustainability analyst. An article is relevant if it "
    "contains information about the environmental, social or governance (ESG) conduct of "
    "the target company itself. Answer tersely and always in the requested line format."
)

DETERMINATION_SYSTEM = (
    "You are an ESG analyst. You read news articles and extract the ESG information they "
    "contain about one target company. Write all free text (summary, keywords) in German, "
    "even though these instructions are in English. Always use the requested line format."
)

TRANSLATION_SYSTEM = "You translate German business text into fluent English."

FIELD_HINTS = {
    "relevant": "<yes|no>",
    "explanation": "<one or two sentences>",
    "summary": "<summary>",
    "direct_esg": "<yes|no>",
    "sentiment": "<positive|neutral|negative, or - if not relevant>",
    "aspect": "<E|S|G, or - if not relevant>",
    "score": "<integer from 1 to 10>",
    "keywords": "<comma-separated keywords>",
    "translation": "<English text>",
}


def format_block(fields: Sequence[str]) -> str:
    lines = [f"{CANONICAL_LABEL[f]}: {FIELD_HINTS[f]}" for f in fields]
    return FORMAT_HEADER + "\n" + "\n".join(lines)


def reminder(fields: Sequence[str], error: str) -> str:
    return (
        f"Your previous answer could not be processed ({error}). "
        "Reply again, without any other text.\n" + format_block(fields)
    )


def article_block(article: Article) -> str:
    body = "\n\n".join(article.paragraphs)
    return (
        f"TITLE: {article.title}\nPUBLISHED: {article.published_at:%Y-%m-%d}\n"
        f"ARTICLE:\n{body}\n{ARTICLE_END}"
    )


def _company_line(company_name: str, related_names: Sequence[str]) -> str:
    line = f"Target company: {company_name}."
    if related_names:
        line += (
            " Related companies (only count information about them if it concerns the target "
            f"company directly): {', '.join(related_names)}."
        )
    return line


def filter_initial(article: Article, company_name: str, related_names: Sequence[str] = ()) -> str:
    return (
        f"{_company_line(company_name, related_names)}\n\n{article_block(article)}\n\n"
        f"Is this article relevant for the ESG assessment of {company_name}?\n"
        + format_block(["relevant"])
    )


def filter_explain(company_name: str) -> str:
    return (
        "Explain your answer. Then summarize the article with respect to ESG topics "
        f"concerning {company_name} in at most five sentences.\n"
        + format_block(["explanation", "summary"])
    )


def filter_direct(company_name: str) -> str:
    return (
        f"Does the article directly address ESG issues of {company_name}? Indirect effects, "
        "such as stock price movements that might eventually affect governance, do not count.\n"
        + format_block(["direct_esg"])
    )


def filter_final(company_name: str, explanation: str, summary: str, direct_esg: bool) -> str:
    return (
        "Now decide again whether the article is relevant. Base your decision on your own "
        "previous answers:\n"
        f"- your explanation: {explanation}\n"
        f"- your summary: {summary}\n"
        f"- ESG issues of {company_name} directly addressed: {'yes' if direct_esg else 'no'}\n"
        + format_block(["relevant"])
    )


DETERMINATION_FIELDS = ["summary", "relevant", "sentiment", "aspect", "score", "keywords"]


def determination(article: Article, company_name: str, related_names: Sequence[str] = ()) -> str:
    return (
        f"{_company_line(company_name, related_names)}\n\n{article_block(article)}\n\n"
        f"Summarize the article regarding ESG topics about {company_name} and decide whether "
        "it is relevant. If it is relevant, give the ESG sentiment, i.e. the sentiment of the "
        f"ESG information for {company_name} (not the general tone of the article), and the "
        "ESG aspect: E (environmental), S (social) or G (governance). Rate the ESG relevance "
        "from 1 to 10 and list the most important keywords. Reply in German.\n"
        + format_block(DETERMINATION_FIELDS)
    )


def translation(summary_de: str) -> str:
    return (
        "Translate the following German summary into English.\n"
        f"SUMMARY:\n{summary_de}\n\n" + format_block(["translation"])
    )
