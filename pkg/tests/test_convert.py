import pytest
from hypothesis import HealthCheck, given, settings

from qbank import (
    Answer,
    ConversionError,
    ConversionPolicy,
    Essay,
    Format,
    Matching,
    MatchPair,
    MultipleChoice,
    Question,
    QuestionBank,
    TrueFalse,
    capability_check,
    convert,
    parse_aiken,
    unbundle_gift_media,
)
from qbank.convert import Mode, OnUnsupported
from qbank.model import TextFormat

from strategies import banks

SINGLE = Question(
    "The text of the question",
    MultipleChoice(True, [Answer("correct answer", 100), Answer("wrong answer 1", 0), Answer("wrong answer 2", 0), Answer("wrong answer 3", 0)]),
)
MATCHING = Question("M", Matching([MatchPair("a", "1"), MatchPair("b", "2")]))


def test_strict_refuses_matching_for_aiken():
    with pytest.raises(ConversionError) as info:
        convert(QuestionBank([MATCHING]), Format.AIKEN, ConversionPolicy.strict())
    assert info.value.index == 0 and info.value.reason == "kind-unsupported" and "Matching" in str(info.value)


def test_single_choice_to_aiken():
    output, report = convert(QuestionBank([SINGLE]), "aiken")
    assert output == (
        "The text of the question\nA. correct answer\nB. wrong answer 1\nC. wrong answer 2\nD. wrong answer 3\nANSWER: A\n"
    )
    assert report.converted == 1 and not report.skipped


def test_lossy_skips_with_reason():
    output, report = convert(QuestionBank([MATCHING, SINGLE]), "aiken", ConversionPolicy.lossy())
    assert len(parse_aiken(output)) == 1
    assert [(s.index, s.reason) for s in report.skipped] == [(0, "kind-unsupported")]


def test_strict_policy_cannot_skip():
    with pytest.raises(ValueError):
        ConversionPolicy(Mode.STRICT, OnUnsupported.SKIP)


def test_invalid_input_is_refused():
    bad = Question("Q", MultipleChoice(False, [Answer("a", 50), Answer("b", 20)]))
    with pytest.raises(ConversionError, match="invalid"):
        convert(QuestionBank([bad]), "gift")


def test_html_is_flattened_for_aiken():
    q = Question("<p>Pick <b>one</b></p>", MultipleChoice(True, [Answer("<i>a</i>", 100), Answer("b", 0)]), stem_format=TextFormat.HTML)
    output, report = convert(QuestionBank([q]), "aiken")
    assert output.startswith("Pick one\nA. a\n")
    assert "convert.formatting-stripped" in [w.code for w in report.warnings]


def test_aiken_losses_are_reported():
    q = Question("Q", MultipleChoice(True, [Answer("a", 100, "fb"), Answer("b", 0)]), title="T", general_feedback="g")
    _, report = convert(QuestionBank([q]), "aiken")
    codes = {w.code for w in report.warnings}
    assert {"convert.title-dropped", "convert.feedback-dropped"} <= codes


def test_gift_losses_are_reported():
    q = Question("Q", Essay(), general_feedback="g", penalty="0.5", hidden=True)
    _, report = convert(QuestionBank([q]), "gift")
    assert {w.code for w in report.warnings} == {"convert.feedback-dropped", "convert.settings-dropped"}


def test_unrepresentable_text_is_skipped_in_lossy_mode():
    q = Question("<p></p>", MultipleChoice(True, [Answer("a", 100), Answer("b", 0)]), stem_format=TextFormat.HTML)
    _, report = convert(QuestionBank([q]), "aiken", ConversionPolicy.lossy())
    assert [s.reason for s in report.skipped] == ["not-representable"]


def test_gift_with_media_becomes_zip():
    q = Question('See <img src="a.png">', TrueFalse(True))
    output, _ = convert(QuestionBank([q]), "gift", media_payloads={"a.png": b"img"})
    assert isinstance(output, bytes)
    _, refs = unbundle_gift_media(output)
    assert refs[0].payload == b"img"


def test_moodlexml_embeds_found_media(tmp_path):
    (tmp_path / "a.png").write_bytes(b"img")
    q = Question('<img src="a.png"> <img src="b.png">', Essay(), stem_format=TextFormat.HTML)
    output, report = convert(QuestionBank([q]), "moodlexml", media_dir=tmp_path)
    assert 'name="a.png"' in output and 'name="b.png"' not in output
    assert [w.code for w in report.warnings] == ["convert.media-not-embedded"]


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(banks())
def test_lossy_never_drops_silently(bank):
    _, report = convert(bank, "aiken", ConversionPolicy.lossy())
    failures = sum(1 for q in bank if not capability_check(q, Format.AIKEN))
    assert len(report.skipped) >= failures
    assert report.converted + len(report.skipped) == len(bank)
    assert all(s.reason and s.message for s in report.skipped)


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(banks())
def test_strict_and_lossy_agree_when_nothing_is_skipped(bank):
    payloads = {ref.name: b"x" for q in bank for ref in q.media}
    for target in ("gift", "moodlexml"):
        strict, _ = convert(bank, target, ConversionPolicy.strict(), media_payloads=payloads)
        lossy, report = convert(bank, target, ConversionPolicy.lossy(), media_payloads=payloads)
        assert not report.skipped and strict == lossy
