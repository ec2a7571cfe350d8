"""GIFT format: lexer, parser and emitter.

Questions are separated by blank lines. The answer block sits in braces and
is classified by its contents::

    ::Title:: Question text {=right ~wrong#why not}

Special characters ``{ } = ~ # :`` are written with a leading backslash when
they are meant literally; ``\\n`` stands for a line break inside text.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from decimal import Context, Decimal, InvalidOperation
from typing import Optional

from .model import (
    Answer,
    CapabilityError,
    Diagnostic,
    Essay,
    Exact,
    Format,
    Matching,
    MatchPair,
    MultipleChoice,
    Numerical,
    NumericSpec,
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
    require_capable,
    warning,
)

SPECIAL_CHARS = "{}=~#"
# Characters a backslash may escape. Beyond the core set, ':' guards titles,
# '[' guards format prefixes, '%' guards weights, '-' guards "->" and '/' guards "//".
ESCAPABLE = SPECIAL_CHARS + ":\\[%-/"

FORMAT_PREFIXES = {"html": TextFormat.HTML, "plain": TextFormat.PLAIN, "moodle": TextFormat.PLAIN, "markdown": TextFormat.PLAIN}
_FORMAT_PREFIX_RE = re.compile(r"\[(html|plain|moodle|markdown)\]")
WEIGHT_RE = re.compile(r"%\s*([-+]?(?:\d+(?:\.\d*)?|\.\d+))\s*%")
_NUMBER = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
_RANGE_RE = re.compile(rf"^({_NUMBER})\s*\.\.\s*({_NUMBER})$")
_TOLERANCE_RE = re.compile(rf"^({_NUMBER})\s*:\s*({_NUMBER})$")
_EXACT_RE = re.compile(rf"^({_NUMBER})$")
_TRUE_WORDS = {"T": True, "TRUE": True, "F": False, "FALSE": False}


class TokenKind(str, enum.Enum):
    TEXT = "text-run"
    LBRACE = "open-brace"
    RBRACE = "close-brace"
    EQUALS = "equals"
    TILDE = "tilde"
    HASH = "hash"
    ARROW = "arrow"
    TITLE_DELIM = "title-delim"
    WEIGHT = "weight"
    FORMAT = "format-prefix"
    COMMENT = "comment"
    BLANK_LINE = "blank-line"


@dataclass(frozen=True)
class GiftToken:
    kind: TokenKind
    lexeme: str
    line: int
    column: int

    def __repr__(self) -> str:
        return f"GiftToken({self.kind.value}, {self.lexeme!r}, {self.line}:{self.column})"


# --------------------------------------------------------------------------- escaping


def escape(text: str, *, title: bool = False) -> str:
    """Backslash-escape ``text`` so the lexer reads it back as one literal run.

    ``title`` also guards colons at either end, which would otherwise merge
    with the surrounding ``::`` delimiters.
    """
    out = []
    n = len(text)
    for i, ch in enumerate(text):
        prev = text[i - 1] if i else ""
        nxt = text[i + 1] if i + 1 < n else ""
        if ch in SPECIAL_CHARS or ch == "\\":
            out.append("\\" + ch)
        elif ch == ":" and (":" in (prev, nxt) or (title and i in (0, n - 1))):
            out.append("\\:")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "-" and nxt == ">":
            out.append("\\-")
        elif ch == "/" and nxt == "/":
            out.append("\\/")
        elif ch in "[%" and not text[:i].strip():
            out.append("\\" + ch)
        else:
            out.append(ch)
    return "".join(out)


def unescape(text: str) -> str:
    """Inverse of :func:`escape` for a run that holds no markers."""
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt in ESCAPABLE:
                out.append(nxt)
                i += 2
                continue
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
        out.append(ch)
        i += 1
    return "".join(out)


# --------------------------------------------------------------------------- lexer


class _Lexer:
    def __init__(self, source: str, diagnostics: Optional[list[Diagnostic]]):
        self.src = source
        self.diagnostics = diagnostics if diagnostics is not None else []
        self.tokens: list[GiftToken] = []
        self.pos = 0
        self.line = 1
        self.col = 1
        self.depth = 0
        # True while only whitespace has been seen since question start or a closing title
        self.prefix_ok = True
        self.title_delims = 0
        self.text: list[str] = []
        self.text_start: Optional[tuple[int, int]] = None

    def _advance(self, count: int = 1) -> str:
        chunk = self.src[self.pos:self.pos + count]
        for ch in chunk:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += count
        return chunk

    def _add_text(self, chars: str, line: int, col: int) -> None:
        if self.text_start is None:
            self.text_start = (line, col)
        self.text.append(chars)
        if chars.strip():
            self.prefix_ok = False

    def _flush(self) -> None:
        if self.text:
            line, col = self.text_start
            self.tokens.append(GiftToken(TokenKind.TEXT, "".join(self.text), line, col))
            self.text = []
            self.text_start = None

    def _emit(self, kind: TokenKind, lexeme: str, line: int, col: int) -> None:
        self._flush()
        self.tokens.append(GiftToken(kind, lexeme, line, col))

    def _line_rest(self) -> str:
        end = self.src.find("\n", self.pos)
        return self.src[self.pos:] if end < 0 else self.src[self.pos:end + 1]

    def run(self) -> list[GiftToken]:
        src = self.src
        while self.pos < len(src):
            if self.col == 1 and self._line_start():
                continue
            ch = src[self.pos]
            line, col = self.line, self.col
            if ch == "\\":
                self._escape(line, col)
            elif ch == "{":
                self._advance()
                self._emit(TokenKind.LBRACE, ch, line, col)
                self.depth += 1
                self.prefix_ok = False
            elif ch == "}":
                self._advance()
                self._emit(TokenKind.RBRACE, ch, line, col)
                self.depth = max(0, self.depth - 1)
                self.prefix_ok = False
            elif ch in "=~":
                self._advance()
                self._emit(TokenKind.EQUALS if ch == "=" else TokenKind.TILDE, ch, line, col)
                self.prefix_ok = False
                if self.depth > 0:
                    self._maybe_weight()
            elif ch == "#":
                self._advance()
                self._emit(TokenKind.HASH, ch, line, col)
                self.prefix_ok = False
            elif ch == "-" and self.depth > 0 and src.startswith("->", self.pos):
                self._advance(2)
                self._emit(TokenKind.ARROW, "->", line, col)
            elif ch == ":" and self.depth == 0 and src.startswith("::", self.pos):
                self._advance(2)
                self._emit(TokenKind.TITLE_DELIM, "::", line, col)
                self.title_delims += 1
                self.prefix_ok = self.title_delims % 2 == 0
            elif ch == "[" and self.prefix_ok and self.depth == 0 and _FORMAT_PREFIX_RE.match(src, self.pos):
                lexeme = _FORMAT_PREFIX_RE.match(src, self.pos).group(0)
                self._advance(len(lexeme))
                self._emit(TokenKind.FORMAT, lexeme, line, col)
            else:
                self._add_text(self._advance(), line, col)
        self._flush()
        return self.tokens

    def _line_start(self) -> bool:
        rest = self._line_rest()
        line = self.line
        if not rest.strip():
            if not rest:
                return False
            self._emit(TokenKind.BLANK_LINE, rest, line, 1)
            self._advance(len(rest))
            self.depth = 0
            self.prefix_ok = True
            self.title_delims = 0
            return True
        stripped = rest.lstrip(" \t")
        if stripped.startswith("//"):
            self._emit(TokenKind.COMMENT, rest.rstrip("\n"), line, 1 + len(rest) - len(stripped))
            self._advance(len(rest))
            return True
        return False

    def _escape(self, line: int, col: int) -> None:
        nxt = self.src[self.pos + 1] if self.pos + 1 < len(self.src) else ""
        if not nxt:
            self.diagnostics.append(error(line, col, "gift.unterminated-escape", "backslash at end of input escapes nothing"))
            self._add_text(self._advance(), line, col)
        elif nxt in ESCAPABLE:
            self._advance(2)
            self._add_text(nxt, line, col)
        elif nxt == "n":
            self._advance(2)
            self._add_text("\n", line, col)
        else:
            self._add_text(self._advance(), line, col)

    def _maybe_weight(self) -> None:
        i = self.pos
        while i < len(self.src) and self.src[i] in " \t":
            i += 1
        if i >= len(self.src) or self.src[i] != "%":
            return
        self._advance(i - self.pos)
        line, col = self.line, self.col
        end = i + 1
        while end < len(self.src) and self.src[end] not in "%\n{}=~#":
            end += 1
        if end < len(self.src) and self.src[end] == "%":
            lexeme = self.src[i:end + 1]
        else:
            lexeme = "%"
        self._advance(len(lexeme))
        self._emit(TokenKind.WEIGHT, lexeme, line, col)


def tokenize_gift(source: str, diagnostics: Optional[list[Diagnostic]] = None) -> list[GiftToken]:
    """Split GIFT source into tokens; lexical errors are appended to ``diagnostics``."""
    return _Lexer(decode_source(source), diagnostics).run()


# --------------------------------------------------------------------------- parser


class _QuestionError(Exception):
    def __init__(self, token: Optional[GiftToken], code: str, message: str):
        super().__init__(message)
        self.token = token
        self.code = code


def _split_questions(tokens: list[GiftToken]) -> list[tuple[list[GiftToken], Optional[Diagnostic]]]:
    """Group tokens into questions, absorbing a blank line that sits inside a brace block."""
    chunks: list[tuple[list[GiftToken], Optional[Diagnostic]]] = []
    current: list[GiftToken] = []
    pending: Optional[Diagnostic] = None
    depth = 0
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.kind is TokenKind.COMMENT:
            i += 1
            continue
        if tok.kind is TokenKind.BLANK_LINE:
            if depth > 0 and _closes_before_opening(tokens, i + 1):
                if pending is None:
                    pending = error(tok.line, 1, "gift.blank-line-in-block", "answer block contains an empty line")
                i += 1
                continue
            if current:
                chunks.append((current, pending))
            current, pending, depth = [], None, 0
            i += 1
            continue
        if tok.kind is TokenKind.LBRACE:
            depth += 1
        elif tok.kind is TokenKind.RBRACE:
            depth = max(0, depth - 1)
        current.append(tok)
        i += 1
    if current:
        chunks.append((current, pending))
    return [(c, p) for c, p in chunks if any(t.kind is not TokenKind.TEXT or t.lexeme.strip() for t in c)]


def _closes_before_opening(tokens: list[GiftToken], start: int) -> bool:
    for tok in tokens[start:]:
        if tok.kind is TokenKind.RBRACE:
            return True
        if tok.kind is TokenKind.LBRACE:
            return False
    return False


def _significant(tokens: list[GiftToken]) -> list[GiftToken]:
    return [t for t in tokens if t.kind is not TokenKind.TEXT or t.lexeme.strip()]


class _QuestionParser:
    def __init__(self, tokens: list[GiftToken], diagnostics: list[Diagnostic]):
        self.tokens = tokens
        self.diagnostics = diagnostics
        self.start = _significant(tokens)[0]

    def warn(self, tok: GiftToken, code: str, message: str) -> None:
        self.diagnostics.append(warning(tok.line, tok.column, code, message))

    def literal(self, tok: GiftToken) -> str:
        if tok.kind is TokenKind.TEXT:
            return tok.lexeme
        self.warn(tok, "gift.unescaped-special", f"unescaped {tok.lexeme!r} read as text; write it as '\\{tok.lexeme[0]}'")
        return tok.lexeme

    def parse(self) -> Question:
        toks = self.tokens
        i = 0
        title: Optional[str] = None
        fmt: Optional[TextFormat] = None
        while i < len(toks):
            tok = toks[i]
            if tok.kind is TokenKind.TEXT and not tok.lexeme.strip():
                i += 1
            elif tok.kind is TokenKind.FORMAT:
                if fmt is not None:
                    self.warn(tok, "gift.duplicate-format", "second format prefix ignored")
                else:
                    name = tok.lexeme[1:-1]
                    fmt = FORMAT_PREFIXES[name]
                    if name in ("moodle", "markdown"):
                        self.warn(tok, "gift.format-as-plain", f"[{name}] text is treated as plain")
                i += 1
            elif tok.kind is TokenKind.TITLE_DELIM and title is None:
                j = i + 1
                parts = []
                while j < len(toks) and toks[j].kind is not TokenKind.TITLE_DELIM:
                    parts.append(self.literal(toks[j]))
                    j += 1
                if j >= len(toks):
                    raise _QuestionError(tok, "gift.unterminated-title", "title has no closing '::'")
                title = "".join(parts).strip()
                i = j + 1
            else:
                break

        stem_parts = []
        while i < len(toks) and toks[i].kind is not TokenKind.LBRACE:
            tok = toks[i]
            if tok.kind is TokenKind.RBRACE:
                raise _QuestionError(tok, "gift.unbalanced-brace", "'}' without a matching '{'")
            stem_parts.append(self.literal(tok))
            i += 1
        if i >= len(toks):
            raise _QuestionError(self.start, "gift.missing-answers", "question has no answer block '{...}'")
        open_tok = toks[i]
        i += 1
        block = []
        while i < len(toks) and toks[i].kind is not TokenKind.RBRACE:
            if toks[i].kind is TokenKind.LBRACE:
                raise _QuestionError(toks[i], "gift.unbalanced-brace", "'{' inside an answer block")
            block.append(toks[i])
            i += 1
        if i >= len(toks):
            raise _QuestionError(open_tok, "gift.unbalanced-brace", "answer block is not closed with '}'")
        trailing = _significant(toks[i + 1:])
        if trailing:
            raise _QuestionError(trailing[0], "gift.trailing-text", "text after the answer block is not supported")

        body = self._classify(open_tok, block)
        return Question(
            stem="".join(stem_parts).strip(),
            body=body,
            title=title or None,
            stem_format=fmt or TextFormat.PLAIN,
            line=self.start.line,
            column=self.start.column,
        )

    def _classify(self, open_tok: GiftToken, block: list[GiftToken]):
        sig = _significant(block)
        if not sig:
            return Essay()
        first = sig[0]
        if first.kind is TokenKind.HASH:
            return self._numerical(open_tok, block[block.index(first) + 1:])
        if first.kind is TokenKind.TEXT:
            word = first.lexeme.strip().upper()
            rest = sig[1:]
            if word in _TRUE_WORDS and (not rest or rest[0].kind is TokenKind.HASH):
                if rest:
                    self.warn(rest[0], "gift.feedback-dropped", "True/False feedback is not kept")
                return TrueFalse(_TRUE_WORDS[word])
            raise _QuestionError(first, "gift.unrecognized-block", "answer block must start with '=', '~', '#' or TRUE/FALSE")

        entries = self._entries(block)
        if any(e["arrow"] for e in entries):
            pairs, extras = [], []
            for e in entries:
                if e["marker"].kind is not TokenKind.EQUALS or e["arrow"] is None or e["weight"] is not None:
                    raise _QuestionError(e["marker"], "gift.bad-matching", "every matching entry must be '= premise -> response'")
                premise, response = e["text"], e["response"]
                if e["feedback"] is not None:
                    self.warn(e["marker"], "gift.feedback-dropped", "matching feedback is not kept")
                if premise:
                    pairs.append(MatchPair(premise, response))
                else:
                    extras.append(response)
            return Matching(pairs, extras)

        answers = []
        for e in entries:
            default = Decimal(100) if e["marker"].kind is TokenKind.EQUALS else Decimal(0)
            fraction = self._weight(e["weight"]) if e["weight"] is not None else default
            answers.append(Answer(e["text"], fraction, e["feedback"]))
        if all(e["marker"].kind is TokenKind.EQUALS for e in entries):
            return ShortAnswer(answers)
        single = any(a.fraction == 100 for a in answers)
        return MultipleChoice(single, answers)

    def _entries(self, block: list[GiftToken]) -> list[dict]:
        entries: list[dict] = []
        current: Optional[dict] = None
        for tok in block:
            if tok.kind in (TokenKind.EQUALS, TokenKind.TILDE):
                current = {"marker": tok, "weight": None, "parts": [], "arrow": None, "response": [], "feedback": None}
                entries.append(current)
            elif current is None:
                if tok.kind is TokenKind.TEXT and not tok.lexeme.strip():
                    continue
                raise _QuestionError(tok, "gift.unrecognized-block", "answer block must start with '=', '~', '#' or TRUE/FALSE")
            elif tok.kind is TokenKind.WEIGHT:
                current["weight"] = tok
            elif tok.kind is TokenKind.HASH:
                if current["feedback"] is None:
                    current["feedback"] = []
                else:
                    current["feedback"].append(self.literal(tok))
            elif current["feedback"] is not None:
                current["feedback"].append(self.literal(tok))
            elif tok.kind is TokenKind.ARROW:
                if current["arrow"] is not None:
                    raise _QuestionError(tok, "gift.bad-matching", "matching entry has more than one '->'")
                current["arrow"] = tok
            elif current["arrow"] is not None:
                current["response"].append(self.literal(tok))
            else:
                current["parts"].append(self.literal(tok))
        for e in entries:
            e["text"] = "".join(e.pop("parts")).strip()
            e["response"] = "".join(e["response"]).strip()
            if e["feedback"] is not None:
                e["feedback"] = "".join(e["feedback"]).strip() or None
        return entries

    def _weight(self, tok: GiftToken) -> Decimal:
        match = WEIGHT_RE.fullmatch(tok.lexeme)
        if not match:
            raise _QuestionError(tok, "gift.bad-weight", f"malformed weight {tok.lexeme!r}; expected %number%")
        return Decimal(match.group(1))

    def _numerical(self, open_tok: GiftToken, tokens: list[GiftToken]) -> Numerical:
        sig = _significant(tokens)
        if not sig:
            raise _QuestionError(open_tok, "gift.bad-number", "numerical answer is empty")
        if any(t.kind is TokenKind.EQUALS for t in sig):
            if sig[0].kind is not TokenKind.EQUALS:
                raise _QuestionError(sig[0], "gift.bad-number", "multiple numerical answers must each start with '='")
            specs = []
            for e in self._entries(tokens):
                if e["weight"] is not None and self._weight(e["weight"]) != 100:
                    self.warn(e["weight"], "gift.partial-credit-dropped", "numerical partial credit is not kept; answer counted fully correct")
                if e["feedback"] is not None:
                    self.warn(e["marker"], "gift.feedback-dropped", "numerical feedback is not kept")
                specs.append(self._number(e["marker"], e["text"]))
            return Numerical(specs)
        parts = []
        for tok in tokens:
            if tok.kind is TokenKind.HASH:
                self.warn(tok, "gift.feedback-dropped", "numerical feedback is not kept")
                break
            parts.append(self.literal(tok))
        return Numerical([self._number(sig[0], "".join(parts))])

    def _number(self, tok: GiftToken, text: str) -> NumericSpec:
        text = text.strip()
        try:
            if m := _RANGE_RE.match(text):
                return Range(Decimal(m.group(1)), Decimal(m.group(2)))
            if m := _TOLERANCE_RE.match(text):
                return Tolerance(Decimal(m.group(1)), Decimal(m.group(2)))
            if m := _EXACT_RE.match(text):
                return Exact(Decimal(m.group(1)))
        except InvalidOperation:
            pass
        raise _QuestionError(tok, "gift.bad-number", f"{text!r} is not a number, 'min..max' or 'value:tolerance'")


def parse_gift(source: str) -> QuestionBank:
    """Parse GIFT text into a bank. Malformed questions are left out and reported."""
    diagnostics: list[Diagnostic] = []
    tokens = tokenize_gift(source, diagnostics)
    questions: list[Question] = []
    for chunk, pending in _split_questions(tokens):
        if pending is not None:
            diagnostics.append(pending)
            continue
        parser = _QuestionParser(chunk, diagnostics)
        try:
            question = parser.parse()
        except _QuestionError as exc:
            tok = exc.token or parser.start
            diagnostics.append(error(tok.line, tok.column, exc.code, str(exc)))
            continue
        problems = check_question(question)
        diagnostics.extend(problems)
        if not any(d.is_error for d in problems):
            questions.append(question)
    diagnostics.sort(key=lambda d: (d.line, d.column))
    return QuestionBank(questions, diagnostics)


# --------------------------------------------------------------------------- emitter

_WEIGHT_CONTEXT = Context(prec=5)


def format_weight(fraction: Decimal) -> str:
    """Percent weight rounded to at most 5 significant digits, e.g. ``33.333``."""
    return format_decimal(_WEIGHT_CONTEXT.plus(fraction))


def _answer_line(marker: str, ans: Answer, weight: bool) -> str:
    text = marker
    if weight:
        text += f"%{format_weight(ans.fraction)}%"
    text += escape(ans.text.strip())
    if ans.feedback and ans.feedback.strip():
        text += "#" + escape(ans.feedback.strip())
    return text


def _spec(spec: NumericSpec) -> str:
    if isinstance(spec, Range):
        return f"{format_decimal(spec.min)}..{format_decimal(spec.max)}"
    if isinstance(spec, Tolerance):
        return f"{format_decimal(spec.value)}:{format_decimal(spec.tol)}"
    return format_decimal(spec.value)


def _block(lines: list[str]) -> str:
    return "{\n" + "".join(f"\t{line}\n" for line in lines) + "}"


def emit_question(q: Question) -> str:
    head = ""
    if q.title and q.title.strip():
        head = f"::{escape(q.title.strip(), title=True)}:: "
    if q.stem_format is TextFormat.HTML:
        head += "[html]"
    stem = escape(q.stem.strip())
    body = q.body
    if isinstance(body, TrueFalse):
        block = "{TRUE}" if body.answer else "{FALSE}"
    elif isinstance(body, Essay):
        block = "{}"
    elif isinstance(body, Numerical):
        if len(body.specs) == 1:
            block = "{#" + _spec(body.specs[0]) + "}"
        else:
            block = "{#\n" + "".join(f"\t={_spec(s)}\n" for s in body.specs) + "}"
    elif isinstance(body, MultipleChoice):
        if body.single:
            block = _block([_answer_line("=" if a.fraction == 100 else "~", a, False) for a in body.answers])
        else:
            block = _block([_answer_line("~", a, True) for a in body.answers])
    elif isinstance(body, ShortAnswer):
        block = _block([_answer_line("=", a, a.fraction != 100) for a in body.answers])
    elif isinstance(body, Matching):
        lines = [f"={escape(p.premise.strip())} -> {escape(p.response.strip())}" for p in body.pairs]
        lines += [f"= -> {escape(r.strip())}" for r in body.extra_responses]
        block = _block(lines)
    else:
        raise TypeError(f"unknown question body {body!r}")
    return f"{head}{stem} {block}"


def emit_gift(bank: QuestionBank) -> str:
    """Render a bank as GIFT text (LF line endings, one blank line between questions)."""
    require_capable(bank, Format.GIFT)
    if not bank.questions:
        return ""
    return "\n\n".join(emit_question(q) for q in bank.questions) + "\n"


# --------------------------------------------------------------------------- formatting

FORMATTING_TAGS = ("h1", "p", "br", "hr", "b", "i", "sub", "sup", "ol", "ul", "li", "a")
_FORMATTING_TAG_RE = re.compile(r"</?\s*(?:%s)\b[^>]*>" % "|".join(FORMATTING_TAGS), re.IGNORECASE)


def strip_formatting(text: str, policy: str = "passthrough") -> str:
    """Drop the basic HTML formatting tags when ``policy`` is ``"plain"``; other tags stay."""
    if policy == "passthrough":
        return text
    if policy != "plain":
        raise ValueError(f"unknown formatting policy {policy!r}")
    return _FORMATTING_TAG_RE.sub("", text)


__all__ = [
    "GiftToken",
    "TokenKind",
    "tokenize_gift",
    "parse_gift",
    "emit_gift",
    "emit_question",
    "escape",
    "unescape",
    "strip_formatting",
    "format_weight",
    "CapabilityError",
]
