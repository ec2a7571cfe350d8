import pytest
from hypothesis import given, settings

from qbank import AikenError, Answer, CapabilityError, Essay, MultipleChoice, Question, QuestionBank, emit_aiken, parse_aiken

from strategies import aiken_banks

SAMPLE = "The text of the question\nA. correct answer\nB. wrong answer 1\nC. wrong answer 2\nD. wrong answer 3\nANSWER: A"


def problems(source):
    return [(d.code, d.line) for d in parse_aiken(source).errors]


def test_sample_block():
    bank = parse_aiken(SAMPLE)
    assert not bank.diagnostics
    (q,) = bank.questions
    assert q.stem == "The text of the question" and q.body.single
    assert [a.fraction for a in q.body.answers] == [100, 0, 0, 0]
    assert q.body.answers[3].text == "wrong answer 3"


def test_emit_reconstructs_sample():
    assert emit_aiken(parse_aiken(SAMPLE)) == SAMPLE + "\n"


def test_empty_input():
    bank = parse_aiken("")
    assert len(bank) == 0 and bank.diagnostics == ()
    assert emit_aiken(QuestionBank()) == ""


def test_parenthesis_labels_and_several_blocks():
    bank = parse_aiken("Q\nA) x\nB) y\nANSWER: B\n\n\nQ2\nA. p\nB. q\nANSWER: A\n")
    assert [q.stem for q in bank] == ["Q", "Q2"]
    assert [a.fraction for a in bank.questions[0].body.answers] == [0, 100]


def test_multiline_stem_is_joined():
    q = parse_aiken("Line one\nline two\nA. x\nB. y\nANSWER:B").questions[0]
    assert q.stem == "Line one line two"


def test_eleven_options_rejected():
    src = "Q\n" + "".join(f"{c}. option\n" for c in "ABCDEFGHIJK") + "ANSWER: A"
    bank = parse_aiken(src)
    assert len(bank) == 0
    (d,) = bank.errors
    assert d.code == "aiken.too-many-options" and "10" in d.message and d.line == 12


def test_ten_options_accepted():
    src = "Q\n" + "".join(f"{c}. option {c}\n" for c in "ABCDEFGHIJ") + "ANSWER: J"
    (q,) = parse_aiken(src).questions
    assert len(q.body.answers) == 10 and q.body.answers[-1].fraction == 100


def test_answer_letter_out_of_range():
    assert problems("Q\nA. x\nB. y\nANSWER: C") == [("aiken.bad-answer-letter", 4)]


def test_labels_out_of_order():
    assert problems("Q\nA. x\nC. y\nANSWER: A") == [("aiken.label-order", 3)]


def test_missing_answer_line():
    assert problems("Q\nA. x\nB. y") == [("aiken.missing-answer", 1)]


def test_answer_without_options():
    assert problems("Q\nANSWER: A") == [("aiken.missing-options", 2)]


def test_lowercase_labels_are_not_options():
    assert [code for code, _ in problems("Q\na. x\nb. y\nANSWER: a")] == ["aiken.missing-options"]


def test_bad_block_does_not_hide_good_ones():
    bank = parse_aiken("Q\nA. x\nANSWER: Z\n\nGood\nA. x\nB. y\nANSWER: B")
    assert [q.stem for q in bank] == ["Good"] and len(bank.errors) == 1


def test_essay_is_refused():
    with pytest.raises(CapabilityError) as info:
        emit_aiken(QuestionBank([Question("Q", Essay())]))
    assert info.value.index == 0 and "Essay" in str(info.value)


def test_ambiguous_stem_is_refused():
    q = Question("Q\nB. x", MultipleChoice(True, [Answer("a", 100), Answer("b", 0)]))
    with pytest.raises(AikenError):
        emit_aiken(QuestionBank([q]))


@settings(max_examples=200, deadline=None)
@given(aiken_banks())
def test_never_more_than_one_correct(bank):
    for q in parse_aiken(emit_aiken(bank)):
        assert sum(1 for a in q.body.answers if a.fraction == 100) == 1
