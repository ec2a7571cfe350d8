"""Bank-level conversion between Aiken, GIFT and Moodle XML."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, NamedTuple, Optional, Union

from .aiken import AikenError, emit_aiken
from .gift import emit_gift, strip_formatting
from .mediapack import DEFAULT_MEDIA_FOLDER, bundle_gift_media, collect_media_refs, resolve_media
from .model import (
    DEFAULT_PENALTY,
    Answer,
    Diagnostic,
    Format,
    MultipleChoice,
    Question,
    QuestionBank,
    TextFormat,
    capability_check,
    validate,
    warning,
)
from .moodlexml import emit_moodlexml


class Mode(str, enum.Enum):
    STRICT = "strict"
    LOSSY = "lossy"


class OnUnsupported(str, enum.Enum):
    FAIL = "fail"
    SKIP = "skip-with-warning"


@dataclass(frozen=True)
class ConversionPolicy:
    mode: Mode = Mode.STRICT
    on_unsupported: OnUnsupported = OnUnsupported.FAIL

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "on_unsupported", OnUnsupported(self.on_unsupported))
        if self.mode is Mode.STRICT and self.on_unsupported is not OnUnsupported.FAIL:
            raise ValueError("strict conversion must fail on unsupported questions")

    @classmethod
    def strict(cls) -> "ConversionPolicy":
        return cls(Mode.STRICT, OnUnsupported.FAIL)

    @classmethod
    def lossy(cls) -> "ConversionPolicy":
        return cls(Mode.LOSSY, OnUnsupported.SKIP)


@dataclass(frozen=True)
class Skipped:
    index: int
    reason: str
    message: str


@dataclass
class ConversionReport:
    converted: int = 0
    skipped: list[Skipped] = field(default_factory=list)
    warnings: list[Diagnostic] = field(default_factory=list)

    def lines(self) -> list[str]:
        out = [f"converted {self.converted} question(s), skipped {len(self.skipped)}"]
        out += [f"skipped question {s.index + 1}: {s.message}" for s in self.skipped]
        out += [str(w) for w in self.warnings]
        return out


class ConversionResult(NamedTuple):
    output: Union[str, bytes]
    report: ConversionReport


class ConversionError(Exception):
    def __init__(self, message: str, index: Optional[int] = None, reason: Optional[str] = None):
        super().__init__(message)
        self.index = index
        self.reason = reason


def _note(report: ConversionReport, q: Question, index: int, code: str, message: str) -> None:
    report.warnings.append(warning(q.line, q.column, code, f"question {index + 1}: {message}", index))


def _flatten_for_aiken(q: Question, index: int, report: ConversionReport) -> Question:
    if q.title:
        _note(report, q, index, "convert.title-dropped", "title dropped; Aiken has no title syntax")
    if q.general_feedback:
        _note(report, q, index, "convert.feedback-dropped", "general feedback dropped")
    if q.penalty != DEFAULT_PENALTY or q.hidden:
        _note(report, q, index, "convert.settings-dropped", "penalty/hidden settings dropped")
    body = q.body
    assert isinstance(body, MultipleChoice)
    if any(a.feedback for a in body.answers):
        _note(report, q, index, "convert.feedback-dropped", "answer feedback dropped")
    stem = q.stem
    answers = body.answers
    if q.stem_format is TextFormat.HTML:
        stem = strip_formatting(stem, "plain")
        answers = tuple(Answer(strip_formatting(a.text, "plain"), a.fraction) for a in answers)
        _note(report, q, index, "convert.formatting-stripped", "HTML formatting flattened to plain text")
    answers = tuple(Answer(a.text, a.fraction) for a in answers)
    return replace(
        q,
        stem=stem,
        title=None,
        stem_format=TextFormat.PLAIN,
        general_feedback=None,
        penalty=DEFAULT_PENALTY,
        hidden=False,
        body=MultipleChoice(True, answers),
    )


def _gift_losses(q: Question, index: int, report: ConversionReport) -> None:
    if q.general_feedback:
        _note(report, q, index, "convert.feedback-dropped", "general feedback dropped; GIFT output does not carry it")
    if q.penalty != DEFAULT_PENALTY or q.hidden:
        _note(report, q, index, "convert.settings-dropped", "penalty/hidden settings dropped")


def _aiken_problem(q: Question) -> Optional[str]:
    if not q.stem.strip():
        return "question text is empty once formatting is removed"
    if any(not a.text.strip() for a in q.body.answers):
        return "an answer is empty once formatting is removed"
    try:
        emit_aiken(QuestionBank([q]))
    except AikenError as exc:
        return str(exc).split(": ", 1)[-1]
    return None


def convert(
    bank: QuestionBank,
    target: Union[Format, str],
    policy: Optional[ConversionPolicy] = None,
    *,
    media_dir: Union[str, Path, None] = None,
    media_payloads: Optional[Mapping[str, bytes]] = None,
    media_folder: str = DEFAULT_MEDIA_FOLDER,
) -> ConversionResult:
    """Convert ``bank`` to ``target``.

    Strict policy raises :class:`ConversionError` on the first question the
    target cannot hold and produces nothing; lossy policy leaves such
    questions out and lists them in the report. GIFT output becomes a zip
    archive (bytes) when any question references media.
    """
    target = Format(target)
    policy = policy or ConversionPolicy.strict()
    problems = [d for d in validate(bank) if d.is_error]
    if problems:
        first = problems[0]
        raise ConversionError(f"input bank is invalid: {first.message}", first.question, first.code)

    report = ConversionReport()
    kept: list[Question] = []
    for index, q in enumerate(bank.questions):
        result = capability_check(q, target)
        reason, message = result.code, result.reason
        candidate = q
        if result and target is Format.AIKEN:
            scratch = ConversionReport()
            candidate = _flatten_for_aiken(q, index, scratch)
            message = _aiken_problem(candidate)
            if message is None:
                report.warnings.extend(scratch.warnings)
            else:
                reason = "not-representable"
        elif result and target is Format.GIFT:
            _gift_losses(q, index, report)
            message = None
        else:
            message = None if result else message
        if message is not None:
            if policy.on_unsupported is OnUnsupported.FAIL:
                raise ConversionError(f"question {index + 1}: {message}", index, reason)
            report.skipped.append(Skipped(index, reason or "unsupported", message))
            continue
        kept.append(candidate)
    report.converted = len(kept)

    out_bank = QuestionBank(kept)
    if target is Format.AIKEN:
        output: Union[str, bytes] = emit_aiken(out_bank)
    elif target is Format.GIFT:
        if collect_media_refs(out_bank):
            output = bundle_gift_media(out_bank, media_dir, payloads=media_payloads, media_folder=media_folder)
        else:
            output = emit_gift(out_bank)
    else:
        if media_dir is not None or media_payloads:
            out_bank = _embed_media(out_bank, media_dir, media_payloads, report)
        output = emit_moodlexml(out_bank)
    return ConversionResult(output, report)


def _embed_media(
    bank: QuestionBank,
    media_dir: Union[str, Path, None],
    payloads: Optional[Mapping[str, bytes]],
    report: ConversionReport,
) -> QuestionBank:
    questions = []
    for index, q in enumerate(bank.questions):
        found = resolve_media(QuestionBank([q]), media_dir, payloads, missing_ok=True)
        missing = [ref.name for ref in q.media if ref.name not in found]
        if missing:
            _note(report, q, index, "convert.media-not-embedded", f"image(s) not found, not embedded: {', '.join(missing)}")
        questions.append(q.with_attachments(found) if found else q)
    return QuestionBank(questions)


__all__ = [
    "ConversionError",
    "ConversionPolicy",
    "ConversionReport",
    "ConversionResult",
    "Mode",
    "OnUnsupported",
    "Skipped",
    "convert",
]
