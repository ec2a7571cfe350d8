"""Aiken format: single-answer multiple choice in plain text.

::

    The text of the question
    A. correct answer
    B. wrong answer 1
    ANSWER: A
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from typing import Optional

from .model import (
    AIKEN_MAX_OPTIONS,
    Answer,
    Diagnostic,
    Format,
    MultipleChoice,
    Question,
    QuestionBank,
    check_question,
    decode_source,
    error,
    require_capable,
)

OPTION_RE = re.compile(r"^([A-Z])[.)][ \t]+(.*)$")
ANSWER_RE = re.compile(r"^ANSWER:(.*)$")
LABELS = string.ascii_uppercase


class AikenError(ValueError):
    """Raised when a question's text cannot be written unambiguously as Aiken."""


@dataclass
class AikenBlock:
    """One question as read from the file, before conversion to the model."""

    line: int
    stem: list[str] = field(default_factory=list)
    options: list[tuple[str, str, int]] = field(default_factory=list)
    problem: Optional[Diagnostic] = None


def _close_block(block: AikenBlock, letter_line: int, payload: str, diagnostics: list[Diagnostic], questions: list[Question]) -> None:
    if block.problem is not None:
        diagnostics.append(block.problem)
        return
    if not block.stem:
        diagnostics.append(error(block.line, 1, "aiken.missing-stem", "question has no text before its options"))
        return
    if not block.options:
        diagnostics.append(error(letter_line, 1, "aiken.missing-options", "ANSWER line without any options"))
        return
    letter = payload.strip()
    labels = [label for label, _, _ in block.options]
    if len(letter) != 1 or letter not in LABELS:
        diagnostics.append(error(letter_line, 1, "aiken.bad-answer-letter", f"ANSWER must name one option letter, got {letter!r}"))
        return
    if letter not in labels:
        diagnostics.append(
            error(letter_line, 1, "aiken.bad-answer-letter", f"ANSWER {letter} does not match any option (A-{labels[-1]})")
        )
        return
    answers = [Answer(text, 100 if label == letter else 0) for label, text, _ in block.options]
    question = Question(
        stem=" ".join(block.stem),
        body=MultipleChoice(True, answers),
        line=block.line,
        column=1,
    )
    problems = check_question(question)
    diagnostics.extend(problems)
    if not any(d.is_error for d in problems):
        questions.append(question)


def parse_aiken(source: str) -> QuestionBank:
    """Parse Aiken text; malformed blocks are skipped with an error diagnostic."""
    lines = decode_source(source).split("\n")
    diagnostics: list[Diagnostic] = []
    questions: list[Question] = []
    block: Optional[AikenBlock] = None

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        answer = ANSWER_RE.match(line)
        if answer:
            if block is None:
                diagnostics.append(error(lineno, 1, "aiken.missing-stem", "ANSWER line without a question"))
            else:
                _close_block(block, lineno, answer.group(1), diagnostics, questions)
            block = None
            continue
        option = OPTION_RE.match(line)
        if option and block is not None and block.stem:
            label, text = option.group(1), option.group(2).strip()
            if block.problem is None:
                expected = LABELS[len(block.options)] if len(block.options) < len(LABELS) else None
                if len(block.options) >= AIKEN_MAX_OPTIONS:
                    block.problem = error(
                        lineno, 1, "aiken.too-many-options",
                        f"more than {AIKEN_MAX_OPTIONS} alternatives; Aiken allows at most {AIKEN_MAX_OPTIONS}",
                    )
                elif label != expected:
                    block.problem = error(lineno, 1, "aiken.label-order", f"option {label} found where {expected} was expected")
            block.options.append((label, text, lineno))
            continue
        if block is not None and block.options:
            diagnostics.append(error(block.line, 1, "aiken.missing-answer", "question has no ANSWER line"))
            block = None
        if block is None:
            block = AikenBlock(lineno)
        block.stem.append(line)

    if block is not None:
        if block.options:
            diagnostics.append(error(block.line, 1, "aiken.missing-answer", "question has no ANSWER line"))
        else:
            diagnostics.append(error(block.line, 1, "aiken.missing-options", "question has no options"))
    diagnostics.sort(key=lambda d: (d.line, d.column))
    return QuestionBank(questions, diagnostics)


def _single_line(text: str) -> str:
    return " ".join(part.strip() for part in text.strip().splitlines() if part.strip())


def emit_aiken(bank: QuestionBank) -> str:
    """Render Aiken-capable questions; raises :class:`CapabilityError` naming the first that is not."""
    require_capable(bank, Format.AIKEN)
    blocks = []
    for index, q in enumerate(bank.questions):
        stem_lines = [part.strip() for part in q.stem.strip().splitlines() if part.strip()]
        if any(OPTION_RE.match(s) for s in stem_lines[1:]) or any(ANSWER_RE.match(s) for s in stem_lines):
            raise AikenError(f"question {index + 1}: text would be read back as an option or ANSWER line")
        lines = list(stem_lines)
        correct = None
        for label, ans in zip(LABELS, q.body.answers):
            lines.append(f"{label}. {_single_line(ans.text)}")
            if ans.fraction == 100:
                correct = label
        lines.append(f"ANSWER: {correct}")
        blocks.append("\n".join(lines))
    if not blocks:
        return ""
    return "\n\n".join(blocks) + "\n"
