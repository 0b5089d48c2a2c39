from .mock_rules import esg_mock_responder
from .parsing import (
    ASPECT_ALIASES,
    ASPECTS,
    SENTIMENT_ALIASES,
    SENTIMENTS,
    FieldSpec,
    ParseError,
    normalize_aspect,
    normalize_sentiment,
    parse_structured_response,
)
from .stages import (
    Determination,
    FilterVerdict,
    QuarantineRecord,
    StageFailure,
    apply_translation,
    parse_determination,
    run_determination,
    run_filter_stage,
    translate_summary,
)

__all__ = [
    "ASPECTS",
    "ASPECT_ALIASES",
    "Determination",
    "FieldSpec",
    "FilterVerdict",
    "ParseError",
    "QuarantineRecord",
    "SENTIMENTS",
    "SENTIMENT_ALIASES",
    "StageFailure",
    "apply_translation",
    "esg_mock_responder",
    "normalize_aspect",
    "normalize_sentiment",
    "parse_determination",
    "parse_structured_response",
    "run_determination",
    "run_filter_stage",
    "translate_summary",
]
