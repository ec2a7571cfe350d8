import xml.etree.ElementTree as ET
from decimal import Decimal

from qbank import (
    Answer,
    Essay,
    Matching,
    MatchPair,
    MultipleChoice,
    Numerical,
    Question,
    QuestionBank,
    Range,
    ShortAnswer,
    Tolerance,
    TrueFalse,
    emit_moodlexml,
    equivalent,
    parse_moodlexml,
)
from qbank.model import TextFormat
from qbank.moodlexml import NAME_FALLBACK_LENGTH, fallback_name


def emitted(*questions) -> ET.Element:
    return ET.fromstring(emit_moodlexml(QuestionBank(list(questions))))


def wrap(*fragments: str) -> str:
    return "<quiz>" + "".join(fragments) + "</quiz>"


class TestEmit:
    def test_empty_bank(self):
        root = emitted()
        assert root.tag == "quiz" and len(root) == 0

    def test_declaration_and_layout(self):
        text = emit_moodlexml(QuestionBank([Question("Q", Essay())]))
        assert text.startswith('<?xml version="1.0" encoding="UTF-8"?>\n<quiz>\n  <question type="essay">')
        assert text.endswith("</quiz>\n")

    def test_true_false(self):
        q = emitted(Question("Q?", TrueFalse(True), title="питання")).find("question")
        assert q.get("type") == "truefalse"
        assert [(a.get("fraction"), a.findtext("text")) for a in q.findall("answer")] == [("100", "true"), ("0", "false")]
        assert q.findtext("penalty") == "0.1" and q.findtext("hidden") == "0"
        assert q.findtext("name/text") == "питання"

    def test_name_falls_back_to_stem(self):
        stem = "x" * 60
        q = emitted(Question(stem, Essay())).find("question")
        assert q.findtext("name/text") == "x" * NAME_FALLBACK_LENGTH

    def test_multichoice_single_flag(self):
        body = MultipleChoice(False, [Answer("a", 50), Answer("b", 50)])
        q = emitted(Question("Q", body)).find("question")
        assert q.findtext("single") == "false"

    def test_range_becomes_midpoint_and_tolerance(self):
        q = emitted(Question("N", Numerical([Range(2, 6)]))).find("question")
        assert q.findtext("answer/text") == "4" and q.findtext("answer/tolerance") == "2"

    def test_matching_extra_response(self):
        q = emitted(Question("M", Matching([MatchPair("p", "r"), MatchPair("q", "s")], ["x"]))).find("question")
        subs = q.findall("subquestion")
        assert [(s.findtext("text"), s.findtext("answer/text")) for s in subs] == [("p", "r"), ("q", "s"), ("", "x")]

    def test_essay_has_no_answers(self):
        assert emitted(Question("E", Essay())).find("question").find("answer") is None

    def test_text_is_xml_escaped(self):
        text = emit_moodlexml(QuestionBank([Question("a < b & c", Essay())]))
        assert "a &lt; b &amp; c" in text

    def test_attachments_are_base64_files(self):
        q = Question('<img src="a.png">', Essay(), stem_format=TextFormat.HTML, attachments={"a.png": b"hi"})
        f = emitted(q).find("question/questiontext/file")
        assert f.get("name") == "a.png" and f.get("encoding") == "base64" and f.text == "aGk="


class TestParse:
    def test_empty_root(self):
        bank = parse_moodlexml("<quiz></quiz>")
        assert len(bank) == 0 and not bank.diagnostics

    def test_unknown_type_is_skipped_with_warning(self):
        bank = parse_moodlexml(wrap('<question type="cloze"><name><text>x</text></name></question>'))
        assert len(bank) == 0
        assert [(d.code, d.severity.value) for d in bank.diagnostics] == [("xml.unsupported-type", "warning")]

    def test_malformed_document(self):
        (d,) = parse_moodlexml("<quiz>\n<question").diagnostics
        assert d.code == "xml.malformed" and d.is_error and d.line == 2

    def test_fraction_out_of_range(self):
        src = wrap(
            '<question type="multichoice"><questiontext><text>Q</text></questiontext>'
            '<answer fraction="150"><text>a</text></answer><answer fraction="0"><text>b</text></answer></question>'
        )
        bank = parse_moodlexml(src)
        assert len(bank) == 0 and "fraction.range" in [d.code for d in bank.errors]

    def test_defaults_for_missing_settings(self):
        (q,) = parse_moodlexml(wrap('<question type="essay"><questiontext><text>E</text></questiontext></question>'))
        assert q.penalty == Decimal("0.1") and q.hidden is False and q.title is None

    def test_category_is_reported_as_info(self):
        bank = parse_moodlexml(
            wrap(
                '<question type="category"><category><text>$course$/x</text></category></question>',
                '<question type="essay"><questiontext><text>E</text></questiontext></question>',
            )
        )
        assert len(bank) == 1 and [d.severity.value for d in bank.diagnostics] == ["info"]

    def test_legacy_image_payload(self):
        src = wrap(
            '<question type="essay"><questiontext format="html"><text>&lt;img src="a.png"&gt;</text></questiontext>'
            "<image>a.png</image><image_base64>aGk=</image_base64></question>"
        )
        (q,) = parse_moodlexml(src)
        assert q.attachments == (("a.png", b"hi"),)

    def test_tolerance_numeric(self):
        src = wrap(
            '<question type="numerical"><questiontext><text>N</text></questiontext>'
            '<answer fraction="100"><text>4</text><tolerance>0.5</tolerance></answer></question>'
        )
        (q,) = parse_moodlexml(src)
        assert q.body == Numerical([Tolerance(4, "0.5")])

    def test_positions_recorded(self):
        bank = parse_moodlexml("<quiz>\n  <question type=\"essay\"><questiontext><text>E</text></questiontext></question>\n</quiz>")
        assert (bank.questions[0].line, bank.questions[0].column) == (2, 3)


def test_round_trip_every_kind():
    bank = QuestionBank(
        [
            Question("T?", TrueFalse(False), title="t", general_feedback="gf", penalty="0.5", hidden=True),
            Question("M?", MultipleChoice(True, [Answer("a", 100, "ok"), Answer("b", 0, "no")])),
            Question("M2?", MultipleChoice(False, [Answer("a", 50), Answer("b", 50), Answer("c", -100)])),
            Question("Pair", Matching([MatchPair("p", "r"), MatchPair("q", "s")], ["x"])),
            Question("N", Numerical([Range(2, 6), Tolerance(1, 0)])),
            Question("S", ShortAnswer([Answer("yes"), Answer("y", 50)])),
            Question("<p>E</p>", Essay(), stem_format=TextFormat.HTML),
        ]
    )
    back = parse_moodlexml(emit_moodlexml(bank))
    assert not back.diagnostics
    assert equivalent(bank, back, numeric_intervals=True)


def test_fallback_name_is_trimmed():
    assert fallback_name("  abc  ") == "abc"
