"""Read, check, convert and write quiz question banks in Aiken, GIFT and Moodle XML."""

from .aiken import AikenError, emit_aiken, parse_aiken
from .convert import ConversionError, ConversionPolicy, ConversionReport, convert
from .gift import emit_gift, parse_gift, strip_formatting, tokenize_gift
from .mediapack import MediaError, bundle_gift_media, collect_media_refs, unbundle_gift_media
from .model import (
    CAPABILITIES,
    Answer,
    CapabilityError,
    Diagnostic,
    Essay,
    Exact,
    Format,
    Matching,
    MatchPair,
    MediaRef,
    MultipleChoice,
    Numerical,
    Question,
    QuestionBank,
    Range,
    Severity,
    ShortAnswer,
    TextFormat,
    Tolerance,
    TrueFalse,
    capability_check,
    equivalent,
    validate,
)
from .moodlexml import emit_moodlexml, parse_moodlexml

__version__ = "0.1.0"

__all__ = [
    "AikenError", "Answer", "CAPABILITIES", "CapabilityError", "ConversionError",
    "ConversionPolicy", "ConversionReport", "Diagnostic", "Essay", "Exact", "Format",
    "Matching", "MatchPair", "MediaError", "MediaRef", "MultipleChoice", "Numerical",
    "Question", "QuestionBank", "Range", "Severity", "ShortAnswer", "TextFormat",
    "Tolerance", "TrueFalse", "bundle_gift_media", "capability_check", "collect_media_refs",
    "convert", "emit_aiken", "emit_gift", "emit_moodlexml", "equivalent", "parse_aiken",
    "parse_gift", "parse_moodlexml", "strip_formatting", "tokenize_gift",
    "unbundle_gift_media", "validate",
]
