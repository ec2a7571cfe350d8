"""Format-neutral question model shared by every parser, emitter and converter.

All types are frozen dataclasses. Sequence fields accept lists on construction
and are stored as tuples; numeric fields accept ``int``/``float``/``str`` and
are stored as :class:`~decimal.Decimal` so that percentages such as ``33.333``
survive every format round trip exactly.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from decimal import Decimal, InvalidOperation
from typing import ClassVar, Iterable, Iterator, Optional, Sequence, Union

DecimalLike = Union[Decimal, int, float, str]

DEFAULT_PENALTY = Decimal("0.1")
FRACTION_SUM_TOLERANCE = Decimal("0.1")
AIKEN_MAX_OPTIONS = 10

# Moodle's grade menu; fractions off this list only produce a warning.
CONVENTIONAL_FRACTIONS = tuple(
    Decimal(v)
    for v in (
        "100", "90", "83.33333", "80", "75", "70", "66.66667", "60", "50",
        "40", "33.33333", "30", "25", "20", "16.66667", "14.28571", "12.5",
        "11.11111", "10", "5", "0",
    )
)
_FRACTION_STEP_TOLERANCE = Decimal("0.01")


def to_decimal(value: DecimalLike) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, float):
        return Decimal(repr(value))
    try:
        return Decimal(str(value).strip())
    except InvalidOperation:
        raise ValueError(f"not a decimal number: {value!r}") from None


def format_decimal(value: Decimal) -> str:
    """Render a decimal without exponent or trailing zeros (``Decimal('1E+2')`` -> ``'100'``)."""
    if value == 0:
        return "0"
    return format(value.normalize(), "f")


class Severity(str, enum.Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


class TextFormat(str, enum.Enum):
    PLAIN = "plain"
    HTML = "html"


class Format(str, enum.Enum):
    AIKEN = "aiken"
    GIFT = "gift"
    MOODLEXML = "moodlexml"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    line: int
    column: int
    code: str
    message: str
    question: Optional[int] = None

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def format(self, filename: str = "<input>") -> str:
        return f"{self.severity.value.upper()} {filename}:{self.line}:{self.column} {self.code} {self.message}"

    def __str__(self) -> str:
        return self.format()


def error(line: int, column: int, code: str, message: str, question: Optional[int] = None) -> Diagnostic:
    return Diagnostic(Severity.ERROR, max(line, 1), max(column, 1), code, message, question)


def warning(line: int, column: int, code: str, message: str, question: Optional[int] = None) -> Diagnostic:
    return Diagnostic(Severity.WARNING, max(line, 1), max(column, 1), code, message, question)


def info(line: int, column: int, code: str, message: str, question: Optional[int] = None) -> Diagnostic:
    return Diagnostic(Severity.INFO, max(line, 1), max(column, 1), code, message, question)


# --------------------------------------------------------------------------- media

_IMG_SRC_RE = re.compile(
    r"""<img\b[^>]*?\bsrc\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s>]+))""",
    re.IGNORECASE,
)
_PLUGINFILE_PREFIX = "@@PLUGINFILE@@/"


@dataclass(frozen=True)
class MediaLocation:
    """Where a media reference occurs: question index (None inside a lone Question) and field."""

    question: Optional[int]
    field: str


@dataclass(frozen=True)
class MediaRef:
    name: str
    payload: Optional[bytes] = None
    referenced_from: tuple[MediaLocation, ...] = ()

    def __post_init__(self) -> None:
        if not is_relative_media_name(self.name):
            raise ValueError(f"media name must be a relative path without '..': {self.name!r}")
        object.__setattr__(self, "referenced_from", tuple(self.referenced_from))


def is_relative_media_name(name: str) -> bool:
    if not name or name.startswith(("/", "\\")) or "://" in name or name.lower().startswith("data:"):
        return False
    parts = re.split(r"[\\/]", name)
    return ".." not in parts and not re.match(r"^[A-Za-z]:$", parts[0])


def find_image_names(text: Optional[str]) -> list[str]:
    """Return local image names referenced by ``<img src=...>`` tags, in order of appearance."""
    if not text:
        return []
    names = []
    for match in _IMG_SRC_RE.finditer(text):
        src = next(g for g in match.groups() if g is not None).strip()
        if src.startswith(_PLUGINFILE_PREFIX):
            src = src[len(_PLUGINFILE_PREFIX):]
        if is_relative_media_name(src):
            names.append(src)
    return names


# --------------------------------------------------------------------------- bodies


@dataclass(frozen=True)
class Answer:
    text: str
    fraction: Decimal = Decimal(100)
    feedback: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "fraction", to_decimal(self.fraction))


@dataclass(frozen=True)
class Exact:
    value: Decimal

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", to_decimal(self.value))

    def interval(self) -> tuple[Decimal, Decimal]:
        return self.value, Decimal(0)


@dataclass(frozen=True)
class Range:
    min: Decimal
    max: Decimal

    def __post_init__(self) -> None:
        object.__setattr__(self, "min", to_decimal(self.min))
        object.__setattr__(self, "max", to_decimal(self.max))

    def interval(self) -> tuple[Decimal, Decimal]:
        return (self.min + self.max) / 2, (self.max - self.min) / 2


@dataclass(frozen=True)
class Tolerance:
    value: Decimal
    tol: Decimal

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", to_decimal(self.value))
        object.__setattr__(self, "tol", to_decimal(self.tol))

    def interval(self) -> tuple[Decimal, Decimal]:
        return self.value, self.tol


NumericSpec = Union[Exact, Range, Tolerance]


@dataclass(frozen=True)
class MatchPair:
    premise: str
    response: str


@dataclass(frozen=True)
class TrueFalse:
    kind: ClassVar[str] = "truefalse"
    answer: bool


@dataclass(frozen=True)
class MultipleChoice:
    kind: ClassVar[str] = "multichoice"
    single: bool
    answers: tuple[Answer, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "answers", tuple(self.answers))


@dataclass(frozen=True)
class Matching:
    kind: ClassVar[str] = "matching"
    pairs: tuple[MatchPair, ...]
    extra_responses: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        pairs = tuple(p if isinstance(p, MatchPair) else MatchPair(*p) for p in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "extra_responses", tuple(self.extra_responses))


@dataclass(frozen=True)
class Numerical:
    kind: ClassVar[str] = "numerical"
    specs: tuple[NumericSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "specs", tuple(self.specs))


@dataclass(frozen=True)
class ShortAnswer:
    kind: ClassVar[str] = "shortanswer"
    answers: tuple[Answer, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "answers", tuple(self.answers))


@dataclass(frozen=True)
class Essay:
    kind: ClassVar[str] = "essay"


QuestionBody = Union[TrueFalse, MultipleChoice, Matching, Numerical, ShortAnswer, Essay]
BODY_KINDS = ("truefalse", "multichoice", "matching", "numerical", "shortanswer", "essay")

KIND_LABELS = {
    "truefalse": "True/False",
    "multichoice": "Multiple Choice",
    "matching": "Matching",
    "numerical": "Numerical",
    "shortanswer": "Short Answer",
    "essay": "Essay",
}


# --------------------------------------------------------------------------- question


@dataclass(frozen=True)
class Question:
    stem: str
    body: QuestionBody
    title: Optional[str] = None
    stem_format: TextFormat = TextFormat.PLAIN
    general_feedback: Optional[str] = None
    penalty: Decimal = DEFAULT_PENALTY
    hidden: bool = False
    # (name, payload) pairs for media whose bytes are known; see ``media``.
    attachments: tuple[tuple[str, bytes], ...] = ()
    line: int = field(default=1, compare=False, repr=False)
    column: int = field(default=1, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "penalty", to_decimal(self.penalty))
        object.__setattr__(self, "stem_format", TextFormat(self.stem_format))
        attachments = self.attachments
        if isinstance(attachments, dict):
            attachments = attachments.items()
        object.__setattr__(self, "attachments", tuple(sorted((str(n), bytes(p)) for n, p in attachments)))

    @property
    def kind(self) -> str:
        return self.body.kind

    def text_fields(self) -> Iterator[tuple[str, str]]:
        """Yield ``(field name, text)`` for every free-text field, stem first."""
        yield "stem", self.stem
        if self.general_feedback:
            yield "general_feedback", self.general_feedback
        body = self.body
        if isinstance(body, (MultipleChoice, ShortAnswer)):
            for i, ans in enumerate(body.answers):
                yield f"answer:{i}", ans.text
                if ans.feedback:
                    yield f"answer:{i}:feedback", ans.feedback
        elif isinstance(body, Matching):
            for i, pair in enumerate(body.pairs):
                yield f"premise:{i}", pair.premise
                yield f"response:{i}", pair.response
            for i, extra in enumerate(body.extra_responses):
                yield f"extra:{i}", extra

    @property
    def media(self) -> tuple[MediaRef, ...]:
        """Media referenced by this question's text plus any attached payloads, in first-use order."""
        locations: dict[str, list[MediaLocation]] = {}
        for field_name, text in self.text_fields():
            for name in find_image_names(text):
                locations.setdefault(name, []).append(MediaLocation(None, field_name))
        payloads = dict(self.attachments)
        for name in payloads:
            locations.setdefault(name, [MediaLocation(None, "attachment")])
        return tuple(MediaRef(name, payloads.get(name), tuple(locs)) for name, locs in locations.items())

    def with_attachments(self, payloads: dict[str, bytes]) -> "Question":
        merged = dict(self.attachments)
        merged.update(payloads)
        return replace(self, attachments=merged)


@dataclass(frozen=True)
class QuestionBank:
    questions: tuple[Question, ...] = ()
    diagnostics: tuple[Diagnostic, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "questions", tuple(self.questions))
        object.__setattr__(self, "diagnostics", tuple(self.diagnostics))

    def __len__(self) -> int:
        return len(self.questions)

    def __iter__(self) -> Iterator[Question]:
        return iter(self.questions)

    @property
    def errors(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.is_error)


# --------------------------------------------------------------------------- validation


def _near(value: Decimal, target: Decimal, tolerance: Decimal) -> bool:
    return abs(value - target) <= tolerance


def _is_conventional_fraction(value: Decimal) -> bool:
    magnitude = abs(value)
    return any(_near(magnitude, step, _FRACTION_STEP_TOLERANCE) for step in CONVENTIONAL_FRACTIONS)


def check_question(q: Question, index: Optional[int] = None) -> list[Diagnostic]:
    """Return every invariant violation of a single question."""
    out: list[Diagnostic] = []

    def err(code: str, message: str) -> None:
        out.append(error(q.line, q.column, code, message, index))

    def warn(code: str, message: str) -> None:
        out.append(warning(q.line, q.column, code, message, index))

    if not q.stem.strip():
        err("stem.empty", "question text is empty")
    if not Decimal(0) <= q.penalty <= Decimal(1):
        err("penalty.range", f"penalty {format_decimal(q.penalty)} is outside [0, 1]")

    body = q.body
    if isinstance(body, (MultipleChoice, ShortAnswer)):
        if not body.answers:
            err("answers.empty", f"{KIND_LABELS[body.kind]} question has no answers")
        for i, ans in enumerate(body.answers):
            if not ans.text.strip():
                err("answer.empty", f"answer {i + 1} has empty text")
            if not Decimal(-100) <= ans.fraction <= Decimal(100):
                err("fraction.range", f"answer {i + 1} fraction {format_decimal(ans.fraction)} is outside [-100, 100]")
            elif not _is_conventional_fraction(ans.fraction):
                warn("fraction.nonstandard", f"answer {i + 1} fraction {format_decimal(ans.fraction)} is not a standard Moodle grade")

    if isinstance(body, MultipleChoice) and body.answers:
        fractions = [a.fraction for a in body.answers]
        if len(fractions) < 2:
            err("mc.too-few", "multiple choice needs at least 2 answers")
        if body.single:
            correct = sum(1 for f in fractions if f == 100)
            others_zero = all(f == 0 for f in fractions if f != 100)
            if correct != 1 or not others_zero:
                err("mc.single-correct", "single-answer multiple choice needs exactly one 100% answer and 0% for the rest")
        else:
            if any(f == 100 for f in fractions):
                err("mc.multi-has-100", "multiple-answer question has an answer weighted 100%")
            positive = sum((f for f in fractions if f > 0), Decimal(0))
            if not _near(positive, Decimal(100), FRACTION_SUM_TOLERANCE):
                err("mc.fraction-sum", f"positive answer weights sum to {format_decimal(positive)}, expected 100")
    elif isinstance(body, ShortAnswer):
        for i, ans in enumerate(body.answers):
            if ans.fraction <= 0:
                err("shortanswer.fraction", f"answer {i + 1} fraction must be in (0, 100]")
    elif isinstance(body, Matching):
        complete = [p for p in body.pairs if p.premise.strip() and p.response.strip()]
        if len(complete) != len(body.pairs):
            err("matching.incomplete-pair", "matching pair with empty premise or response")
        if len(complete) < 2:
            err("matching.too-few-pairs", "matching needs at least 2 complete pairs")
        if any(not r.strip() for r in body.extra_responses):
            err("matching.empty-response", "extra response is empty")
    elif isinstance(body, Numerical):
        if not body.specs:
            err("numerical.empty", "numerical question has no answers")
        for spec in body.specs:
            if isinstance(spec, Range) and spec.min > spec.max:
                err("numerical.range-order", f"range {format_decimal(spec.min)}..{format_decimal(spec.max)} has min > max")
            if isinstance(spec, Tolerance) and spec.tol < 0:
                err("numerical.tolerance-negative", f"tolerance {format_decimal(spec.tol)} is negative")
    return out


def validate(bank: QuestionBank) -> list[Diagnostic]:
    """Return all invariant violations in ``bank``; the bank is never modified."""
    out: list[Diagnostic] = []
    for index, q in enumerate(bank.questions):
        out.extend(check_question(q, index))
    return out


# --------------------------------------------------------------------------- capability matrix


@dataclass(frozen=True)
class FormatCapability:
    format: Format
    supports: dict
    max_options: Optional[int] = None
    media_needs_bundle: bool = False

    def can(self, key: str) -> bool:
        return bool(self.supports.get(key, False))


def _caps(kinds: Iterable[str], **features: bool) -> dict:
    table = {k: False for k in (*BODY_KINDS, "multichoice-single", "multichoice-multi")}
    table.update({k: True for k in kinds})
    table.update(features)
    return table


CAPABILITIES = {
    Format.AIKEN: FormatCapability(
        Format.AIKEN,
        _caps(["multichoice-single"], media=False, titles=False, weights=False, feedback=False, html=False),
        max_options=AIKEN_MAX_OPTIONS,
    ),
    Format.GIFT: FormatCapability(
        Format.GIFT,
        _caps([*BODY_KINDS, "multichoice-single", "multichoice-multi"], media=True, titles=True, weights=True, feedback=True, html=True),
        media_needs_bundle=True,
    ),
    Format.MOODLEXML: FormatCapability(
        Format.MOODLEXML,
        _caps([*BODY_KINDS, "multichoice-single", "multichoice-multi"], media=True, titles=True, weights=True, feedback=True, html=True),
    ),
}


@dataclass(frozen=True)
class CapabilityResult:
    supported: bool
    reason: Optional[str] = None
    code: Optional[str] = None
    requires_bundle: bool = False

    def __bool__(self) -> bool:
        return self.supported


def _kind_key(body: QuestionBody) -> str:
    if isinstance(body, MultipleChoice):
        return "multichoice-single" if body.single else "multichoice-multi"
    return body.kind


def capability_check(q: Question, target: Union[Format, str]) -> CapabilityResult:
    cap = CAPABILITIES[Format(target)]
    key = _kind_key(q.body)
    if not cap.can(key):
        label = KIND_LABELS[q.kind]
        if key == "multichoice-multi":
            label = "multiple-answer Multiple Choice"
        return CapabilityResult(False, f"{label} questions are not supported by {cap.format.value}", "kind-unsupported")
    if cap.max_options is not None and isinstance(q.body, MultipleChoice) and len(q.body.answers) > cap.max_options:
        return CapabilityResult(
            False,
            f"{len(q.body.answers)} alternatives exceed the {cap.max_options}-alternative limit of {cap.format.value}",
            "too-many-options",
        )
    media = q.media
    if media and not cap.can("media"):
        return CapabilityResult(False, f"images are not supported by {cap.format.value}", "media-unsupported")
    return CapabilityResult(True, requires_bundle=bool(media) and cap.media_needs_bundle)


class CapabilityError(ValueError):
    """Raised by emitters and converters when a question cannot be represented in the target format."""

    def __init__(self, index: int, reason: str, code: Optional[str] = None):
        super().__init__(f"question {index + 1}: {reason}")
        self.index = index
        self.reason = reason
        self.code = code


def require_capable(bank: QuestionBank, target: Format) -> None:
    for index, q in enumerate(bank.questions):
        result = capability_check(q, target)
        if not result:
            raise CapabilityError(index, result.reason or "unsupported", result.code)


# --------------------------------------------------------------------------- structural equality


def _trim(text: Optional[str]) -> Optional[str]:
    if text is None:
        return None
    text = text.strip()
    return text or None


def _normalize_answer(a: Answer) -> Answer:
    return Answer(a.text.strip(), a.fraction, _trim(a.feedback))


def _normalize_spec(spec: NumericSpec, numeric_intervals: bool) -> object:
    if numeric_intervals:
        return spec.interval()
    return spec


def normalize_question(q: Question, *, numeric_intervals: bool = False) -> tuple:
    """Comparison key: whitespace-trimmed structural content of a question.

    With ``numeric_intervals`` every numeric spec is reduced to ``(value, tolerance)``
    so a range compares equal to its midpoint-and-half-width form.
    """
    body = q.body
    if isinstance(body, (MultipleChoice, ShortAnswer)):
        body_key: tuple = (body.kind, getattr(body, "single", None), tuple(_normalize_answer(a) for a in body.answers))
    elif isinstance(body, Matching):
        body_key = (
            body.kind,
            tuple(MatchPair(p.premise.strip(), p.response.strip()) for p in body.pairs),
            tuple(r.strip() for r in body.extra_responses),
        )
    elif isinstance(body, Numerical):
        body_key = (body.kind, tuple(_normalize_spec(s, numeric_intervals) for s in body.specs))
    else:
        body_key = (body.kind, body)
    return (
        _trim(q.title),
        q.stem.strip(),
        q.stem_format,
        _trim(q.general_feedback),
        q.penalty,
        q.hidden,
        q.attachments,
        body_key,
    )


def _as_questions(x: Union[Question, QuestionBank, Sequence[Question]]) -> tuple:
    if isinstance(x, Question):
        return (x,)
    return x.questions if isinstance(x, QuestionBank) else tuple(x)


def equivalent(
    a: Union[Question, QuestionBank, Sequence[Question]],
    b: Union[Question, QuestionBank, Sequence[Question]],
    *,
    numeric_intervals: bool = False,
) -> bool:
    """Whitespace-normalized structural equality of two questions or banks (diagnostics ignored)."""
    qa, qb = _as_questions(a), _as_questions(b)
    if len(qa) != len(qb):
        return False
    return all(
        normalize_question(x, numeric_intervals=numeric_intervals) == normalize_question(y, numeric_intervals=numeric_intervals)
        for x, y in zip(qa, qb)
    )


def strip_bom(text: str) -> str:
    return text[1:] if text.startswith("\ufeff") else text


def normalize_newlines(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def decode_source(data: Union[str, bytes]) -> str:
    """Decode UTF-8 input (byte-order mark optional) and normalize line endings to LF."""
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    return normalize_newlines(strip_bom(data))
