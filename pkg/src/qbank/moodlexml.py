"""Moodle XML question banks: emit and parse.

Element layout follows Moodle's export, e.g. for True/False::

    <question type="truefalse">
      <name><text>...</text></name>
      <questiontext format="html"><text>...</text></questiontext>
      <generalfeedback><text></text></generalfeedback>
      <penalty>0.1</penalty>
      <hidden>0</hidden>
      <answer fraction="100"><text>true</text>...</answer>
      <answer fraction="0"><text>false</text>...</answer>
    </question>
"""

from __future__ import annotations

import base64
import binascii
import re
import xml.etree.ElementTree as ET
from decimal import Decimal, InvalidOperation
from typing import Optional
from xml.parsers import expat

from .model import (
    DEFAULT_PENALTY,
    Answer,
    Diagnostic,
    Essay,
    Exact,
    Format,
    Matching,
    MatchPair,
    MultipleChoice,
    Numerical,
    Question,
    QuestionBank,
    Range,
    ShortAnswer,
    TextFormat,
    Tolerance,
    TrueFalse,
    check_question,
    decode_source,
    error,
    format_decimal,
    info,
    require_capable,
    warning,
)

NAME_FALLBACK_LENGTH = 40
XML_DECLARATION = '<?xml version="1.0" encoding="UTF-8"?>'
QUESTION_TYPES = ("truefalse", "multichoice", "matching", "numerical", "shortanswer", "essay")
_FORMAT_NAMES = {TextFormat.HTML: "html", TextFormat.PLAIN: "plain_text"}
# Characters XML 1.0 cannot carry at all.
_XML_ILLEGAL_RE = re.compile("[\x00-\x08\x0b\x0c\x0e-\x1f\ud800-\udfff\ufffe\uffff]")


def fallback_name(stem: str) -> str:
    return stem.strip()[:NAME_FALLBACK_LENGTH].strip()


# --------------------------------------------------------------------------- emit


def _clean(text: Optional[str]) -> str:
    return _XML_ILLEGAL_RE.sub("", (text or "").strip())


def _text_element(parent: ET.Element, tag: str, text: Optional[str], fmt: Optional[str] = None) -> ET.Element:
    el = ET.SubElement(parent, tag)
    if fmt is not None:
        el.set("format", fmt)
    ET.SubElement(el, "text").text = _clean(text)
    return el


def _answer_element(parent: ET.Element, fraction: Decimal, text: str) -> ET.Element:
    el = ET.SubElement(parent, "answer", fraction=format_decimal(fraction))
    ET.SubElement(el, "text").text = _clean(text)
    return el


def _feedback(answer: ET.Element, feedback: Optional[str]) -> None:
    _text_element(answer, "feedback", feedback)


def _numeric_payload(spec) -> tuple[Decimal, Decimal]:
    if isinstance(spec, Range):
        return spec.interval()
    if isinstance(spec, Tolerance):
        return spec.value, spec.tol
    return spec.value, Decimal(0)


def question_element(q: Question) -> ET.Element:
    body = q.body
    el = ET.Element("question", type=body.kind)
    name = q.title.strip() if q.title and q.title.strip() else fallback_name(q.stem)
    _text_element(el, "name", name)
    qtext = _text_element(el, "questiontext", q.stem, _FORMAT_NAMES[q.stem_format])
    for media_name, payload in q.attachments:
        f = ET.SubElement(qtext, "file", name=media_name, path="/", encoding="base64")
        f.text = base64.b64encode(payload).decode("ascii")
    _text_element(el, "generalfeedback", q.general_feedback)
    ET.SubElement(el, "penalty").text = format_decimal(q.penalty)
    ET.SubElement(el, "hidden").text = "1" if q.hidden else "0"

    if isinstance(body, TrueFalse):
        for value in (True, False):
            ans = _answer_element(el, Decimal(100) if body.answer == value else Decimal(0), "true" if value else "false")
            _feedback(ans, None)
    elif isinstance(body, MultipleChoice):
        ET.SubElement(el, "single").text = "true" if body.single else "false"
        for a in body.answers:
            _feedback(_answer_element(el, a.fraction, a.text), a.feedback)
    elif isinstance(body, ShortAnswer):
        ET.SubElement(el, "usecase").text = "0"
        for a in body.answers:
            _feedback(_answer_element(el, a.fraction, a.text), a.feedback)
    elif isinstance(body, Numerical):
        for spec in body.specs:
            value, tol = _numeric_payload(spec)
            ans = _answer_element(el, Decimal(100), format_decimal(value))
            ET.SubElement(ans, "tolerance").text = format_decimal(tol)
            _feedback(ans, None)
    elif isinstance(body, Matching):
        for pair in body.pairs:
            sub = _text_element(el, "subquestion", pair.premise, "html")
            _text_element(sub, "answer", pair.response)
        for extra in body.extra_responses:
            sub = _text_element(el, "subquestion", "", "html")
            _text_element(sub, "answer", extra)
    return el


def emit_moodlexml(bank: QuestionBank) -> str:
    """Render the bank as one ``<quiz>`` document, two-space indented, LF line endings."""
    require_capable(bank, Format.MOODLEXML)
    root = ET.Element("quiz")
    for q in bank.questions:
        root.append(question_element(q))
    ET.indent(root, space="  ")
    return XML_DECLARATION + "\n" + ET.tostring(root, encoding="unicode") + "\n"


# --------------------------------------------------------------------------- parse


class _PositionedTree:
    """Element tree built with expat so every element keeps its 1-based source position."""

    def __init__(self, text: str):
        self.positions: dict[ET.Element, tuple[int, int]] = {}
        self.root: Optional[ET.Element] = None
        self._stack: list[ET.Element] = []
        self._parser = expat.ParserCreate("UTF-8")
        self._parser.buffer_text = True
        self._parser.StartElementHandler = self._start
        self._parser.EndElementHandler = self._end
        self._parser.CharacterDataHandler = self._data
        self._parser.Parse(text.encode("utf-8"), True)

    def _start(self, tag: str, attrs: dict) -> None:
        el = ET.Element(tag, attrs)
        self.positions[el] = (self._parser.CurrentLineNumber, self._parser.CurrentColumnNumber + 1)
        if self._stack:
            self._stack[-1].append(el)
        else:
            self.root = el
        self._stack.append(el)

    def _end(self, tag: str) -> None:
        self._stack.pop()

    def _data(self, data: str) -> None:
        if not self._stack:
            return
        el = self._stack[-1]
        if len(el):
            el[-1].tail = (el[-1].tail or "") + data
        else:
            el.text = (el.text or "") + data


class _Skip(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _text_of(el: Optional[ET.Element], path: str = "text") -> Optional[str]:
    if el is None:
        return None
    text = el.findtext(path)
    if text is None:
        return None
    return text.strip() or None


def _decimal(raw: Optional[str], what: str) -> Decimal:
    try:
        return Decimal((raw or "").strip())
    except InvalidOperation:
        raise _Skip("xml.bad-number", f"{what} {raw!r} is not a number") from None


def _fraction(answer: ET.Element) -> Decimal:
    raw = answer.get("fraction")
    if raw is None:
        raw = answer.findtext("fraction", "0")
    return _decimal(raw, "fraction")


def _answers(el: ET.Element) -> list[Answer]:
    return [
        Answer(_text_of(a) or "", _fraction(a), _text_of(a.find("feedback")))
        for a in el.findall("answer")
    ]


def _attachments(el: ET.Element, diagnostics: list[Diagnostic], pos: tuple[int, int]) -> dict[str, bytes]:
    found: dict[str, bytes] = {}

    def decode(name: str, data: Optional[str]) -> None:
        try:
            found[name] = base64.b64decode((data or "").strip(), validate=False)
        except (binascii.Error, ValueError):
            diagnostics.append(warning(*pos, "xml.bad-base64", f"embedded file {name!r} is not valid base64; dropped"))

    for f in el.iter("file"):
        name = (f.get("name") or "").strip()
        if name:
            decode(name, f.text)
    legacy_name = (el.findtext("image") or "").strip()
    legacy_data = (el.findtext("image_base64") or "").strip()
    if legacy_name and legacy_data:
        decode(legacy_name, legacy_data)
    return found


def _body(kind: str, el: ET.Element, diagnostics: list[Diagnostic], pos: tuple[int, int]):
    if kind == "truefalse":
        for a in el.findall("answer"):
            if _fraction(a) == 100:
                word = (_text_of(a) or "").lower()
                if word in ("true", "false"):
                    return TrueFalse(word == "true")
        raise _Skip("xml.truefalse-answer", "true/false question has no 100% answer reading 'true' or 'false'")
    if kind == "multichoice":
        answers = _answers(el)
        flag = (el.findtext("single") or "").strip().lower()
        single = flag in ("true", "1") if flag else any(a.fraction == 100 for a in answers)
        return MultipleChoice(single, answers)
    if kind == "shortanswer":
        return ShortAnswer(_answers(el))
    if kind == "numerical":
        specs = []
        for a in el.findall("answer"):
            raw = _text_of(a) or ""
            try:
                value = Decimal(raw)
            except InvalidOperation:
                diagnostics.append(warning(*pos, "xml.numeric-answer-skipped", f"numerical answer {raw!r} is not a number; skipped"))
                continue
            if _fraction(a) != 100:
                diagnostics.append(warning(*pos, "xml.partial-credit-dropped", "numerical partial credit is not kept"))
            tol = _decimal(a.findtext("tolerance") or "0", "tolerance")
            specs.append(Tolerance(value, tol) if tol != 0 else Exact(value))
        return Numerical(specs)
    if kind == "matching":
        pairs, extras = [], []
        for sub in el.findall("subquestion"):
            premise = _text_of(sub) or ""
            response = _text_of(sub.find("answer")) or ""
            if premise:
                pairs.append(MatchPair(premise, response))
            elif response:
                extras.append(response)
        return Matching(pairs, extras)
    return Essay()


def _question(el: ET.Element, pos: tuple[int, int], diagnostics: list[Diagnostic]) -> Question:
    kind = el.get("type", "")
    qtext = el.find("questiontext")
    stem = _text_of(qtext) or ""
    fmt_name = (qtext.get("format", "html") if qtext is not None else "html").strip()
    if fmt_name == "html":
        stem_format = TextFormat.HTML
    else:
        stem_format = TextFormat.PLAIN
        if fmt_name not in ("plain_text", ""):
            diagnostics.append(warning(*pos, "xml.format-as-plain", f"text format {fmt_name!r} is treated as plain"))
    name = _text_of(el.find("name"))
    title = name if name and name != fallback_name(stem) else None
    penalty_raw = el.findtext("penalty")
    penalty = _decimal(penalty_raw, "penalty") if penalty_raw and penalty_raw.strip() else DEFAULT_PENALTY
    hidden = (el.findtext("hidden") or "0").strip().lower() in ("1", "true")
    return Question(
        stem=stem,
        body=_body(kind, el, diagnostics, pos),
        title=title,
        stem_format=stem_format,
        general_feedback=_text_of(el.find("generalfeedback")),
        penalty=penalty,
        hidden=hidden,
        attachments=_attachments(el, diagnostics, pos),
        line=pos[0],
        column=pos[1],
    )


def parse_moodlexml(source: str) -> QuestionBank:
    """Parse a Moodle XML document; unsupported question types are skipped with a warning."""
    text = decode_source(source)
    diagnostics: list[Diagnostic] = []
    try:
        tree = _PositionedTree(text)
    except expat.ExpatError as exc:
        return QuestionBank((), [error(exc.lineno, exc.offset + 1, "xml.malformed", expat.ErrorString(exc.code))])
    root = tree.root
    if root is None:
        return QuestionBank()
    if root.tag == "question":
        elements = [root]
    else:
        if root.tag != "quiz":
            line, col = tree.positions[root]
            diagnostics.append(warning(line, col, "xml.root", f"root element is <{root.tag}>, expected <quiz>"))
        elements = root.findall("question")

    questions: list[Question] = []
    for el in elements:
        pos = tree.positions[el]
        kind = el.get("type", "")
        if kind == "category":
            diagnostics.append(info(*pos, "xml.category-ignored", "category entries are not imported"))
            continue
        if kind not in QUESTION_TYPES:
            diagnostics.append(warning(*pos, "xml.unsupported-type", f"question type {kind!r} is not supported; skipped"))
            continue
        try:
            question = _question(el, pos, diagnostics)
        except _Skip as exc:
            diagnostics.append(error(*pos, exc.code, str(exc)))
            continue
        problems = check_question(question)
        diagnostics.extend(problems)
        if not any(d.is_error for d in problems):
            questions.append(question)
    return QuestionBank(questions, diagnostics)
