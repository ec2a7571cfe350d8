from hypothesis import given, strategies as st

from qbank.gift import ESCAPABLE, TokenKind, escape, tokenize_gift, unescape


def kinds(source):
    return [t.kind for t in tokenize_gift(source)]


def test_escaped_brace_stays_in_text():
    (tok,) = tokenize_gift("a \\{ b")
    assert tok.kind is TokenKind.TEXT and tok.lexeme == "a { b"


def test_comment_line():
    toks = tokenize_gift("// remark\n")
    assert [t.kind for t in toks] == [TokenKind.COMMENT]


def test_indented_comment_line():
    assert kinds("   // remark") == [TokenKind.COMMENT]


def test_empty_source():
    assert tokenize_gift("") == []


def test_positions_are_one_based():
    toks = tokenize_gift("Q {\n=a\n}")
    eq = next(t for t in toks if t.kind is TokenKind.EQUALS)
    assert (eq.line, eq.column) == (2, 1)
    close = toks[-1]
    assert close.kind is TokenKind.RBRACE and (close.line, close.column) == (3, 1)


def test_title_prefix_weight_and_arrow():
    toks = tokenize_gift("::T:: [html]Q {=a#fb ~%50%b -> c}")
    assert [t.kind for t in toks] == [
        TokenKind.TITLE_DELIM,
        TokenKind.TEXT,
        TokenKind.TITLE_DELIM,
        TokenKind.TEXT,
        TokenKind.FORMAT,
        TokenKind.TEXT,
        TokenKind.LBRACE,
        TokenKind.EQUALS,
        TokenKind.TEXT,
        TokenKind.HASH,
        TokenKind.TEXT,
        TokenKind.TILDE,
        TokenKind.WEIGHT,
        TokenKind.TEXT,
        TokenKind.ARROW,
        TokenKind.TEXT,
        TokenKind.RBRACE,
    ]


def test_blank_line_token_separates_questions():
    assert TokenKind.BLANK_LINE in kinds("a {}\n\nb {}")
    assert TokenKind.BLANK_LINE in kinds("a {}\n  \t\nb {}")


def test_arrow_and_percent_are_plain_outside_braces():
    (tok,) = tokenize_gift("a -> b 50%")
    assert tok.kind is TokenKind.TEXT and tok.lexeme == "a -> b 50%"


def test_weight_only_right_after_marker():
    toks = tokenize_gift("{~ 50% off}")
    assert TokenKind.WEIGHT not in [t.kind for t in toks]


def test_format_prefix_only_at_question_start():
    assert TokenKind.FORMAT not in kinds("Q [html] {}")


def test_unterminated_escape_reports_error():
    diagnostics = []
    tokenize_gift("a \\", diagnostics)
    assert [d.code for d in diagnostics] == ["gift.unterminated-escape"]
    assert diagnostics[0].line == 1


def test_escape_examples():
    assert escape("x = y") == "x \\= y"
    assert escape("{a}~#") == "\\{a\\}\\~\\#"
    assert escape("a:b") == "a:b"
    assert escape("a::b") == "a\\:\\:b"
    assert escape("line\nbreak") == "line\\nbreak"


@given(st.text(alphabet=ESCAPABLE + "ab n\n\\"))
def test_escape_round_trip(text):
    assert unescape(escape(text)) == text
    assert unescape(escape(text, title=True)) == text


@given(st.text(alphabet="{}=~#:\\-> abc/[%").filter(str.strip))
def test_escaped_text_is_a_single_text_run(text):
    escaped = escape(text)
    toks = tokenize_gift(escaped)
    assert all(t.kind is TokenKind.TEXT for t in toks)
    assert "".join(t.lexeme for t in toks) == text
