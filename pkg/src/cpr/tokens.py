"""Whitespace- and symbol-aware tokenization for code and comment text.

Code is split so that programming symbols (braces, operators, punctuation)
become first-class tokens, with maximal munch for multi-character operators
like ``<=`` and ``==``. Comments are lowercased word streams where tokens in
a configurable stopword set are flagged so downstream perturbation operators
can skip them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources


class TokenKind(str, Enum):
    IDENTIFIER = "identifier"
    SYMBOL = "symbol"
    LITERAL = "literal"
    KEYWORD = "keyword"
    WORD = "word"
    STOPWORD = "stopword"


class Stream(str, Enum):
    CODE = "code"
    COMMENT = "comment"


# Longest-first so maximal munch falls out of scan order.
MULTI_CHAR_OPERATORS = ("==", "<=", ">=", "!=", "&&", "||", "->", "++", "--", "+=", "-=")
SINGLE_SYMBOLS = set("(){}[];,:.=+-*/<>!&|")

_KEYWORDS = {
    "java": {
        "abstract", "boolean", "break", "byte", "case", "catch", "char", "class",
        "continue", "do", "double", "else", "enum", "extends", "final", "finally",
        "float", "for", "if", "implements", "import", "int", "interface", "long",
        "new", "null", "package", "private", "protected", "public", "return",
        "short", "static", "super", "switch", "this", "throw", "throws", "try",
        "void", "while", "true", "false",
    },
    "python": {
        "and", "as", "assert", "break", "class", "continue", "def", "del", "elif",
        "else", "except", "finally", "for", "from", "global", "if", "import", "in",
        "is", "lambda", "not", "or", "pass", "raise", "return", "try", "while",
        "with", "yield", "None", "True", "False",
    },
    "c": {
        "auto", "break", "case", "char", "const", "continue", "default", "do",
        "double", "else", "enum", "extern", "float", "for", "goto", "if", "int",
        "long", "register", "return", "short", "signed", "sizeof", "static",
        "struct", "switch", "typedef", "union", "unsigned", "void", "volatile",
        "while",
    },
    "javascript": {
        "break", "case", "catch", "class", "const", "continue", "default",
        "delete", "do", "else", "export", "extends", "finally", "for", "function",
        "if", "import", "in", "instanceof", "let", "new", "return", "super",
        "switch", "this", "throw", "try", "typeof", "var", "void", "while",
        "yield", "true", "false", "null", "undefined",
    },
}
# Unknown languages fall back to the union of the per-language tables.
_SHARED_KEYWORDS = set().union(*_KEYWORDS.values())

_WORD_RE = re.compile(r"\w+")


@dataclass(frozen=True)
class Token:
    text: str
    kind: TokenKind
    stream: Stream
    position: int


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[Token, ...]
    stream: Stream

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    @property
    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    @staticmethod
    def from_texts(texts, stream: Stream, kinds=None) -> "TokenSequence":
        """Build a sequence from raw texts, assigning consecutive positions."""
        if kinds is None:
            kinds = [TokenKind.WORD if stream is Stream.COMMENT else TokenKind.IDENTIFIER] * len(texts)
        toks = tuple(
            Token(text=t, kind=k, stream=stream, position=i)
            for i, (t, k) in enumerate(zip(texts, kinds))
        )
        return TokenSequence(tokens=toks, stream=stream)


def reposition(tokens, stream: Stream) -> TokenSequence:
    """Renumber token positions consecutively after an edit."""
    toks = tuple(
        Token(text=t.text, kind=t.kind, stream=stream, position=i)
        for i, t in enumerate(tokens)
    )
    return TokenSequence(tokens=toks, stream=stream)


def keyword_table(language: str | None) -> frozenset:
    if language is None:
        return frozenset(_SHARED_KEYWORDS)
    return frozenset(_KEYWORDS.get(language.lower(), _SHARED_KEYWORDS))


def _starts_operator(chunk: str, i: int) -> str | None:
    for op in MULTI_CHAR_OPERATORS:
        if chunk.startswith(op, i):
            return op
    return None


def _scan_chunk(chunk: str) -> list[str]:
    """Split one whitespace-free chunk into symbol/word/literal pieces."""
    out = []
    i = 0
    n = len(chunk)
    while i < n:
        op = _starts_operator(chunk, i)
        if op is not None:
            out.append(op)
            i += len(op)
            continue
        c = chunk[i]
        if c in SINGLE_SYMBOLS:
            out.append(c)
            i += 1
            continue
        if c in "\"'":
            # Quoted literal: runs to the matching quote inside this chunk,
            # or to the end of the chunk when unterminated.
            j = chunk.find(c, i + 1)
            j = n - 1 if j < 0 else j
            out.append(chunk[i : j + 1])
            i = j + 1
            continue
        if c.isdigit():
            j = i + 1
            while j < n and chunk[j].isdigit():
                j += 1
            if j < n - 1 and chunk[j] == "." and chunk[j + 1].isdigit():
                j += 2
                while j < n and chunk[j].isdigit():
                    j += 1
            out.append(chunk[i:j])
            i = j
            continue
        # Word run: anything that is not whitespace, not a symbol, and does
        # not open a multi-char operator. Quotes inside a word stay in it.
        j = i
        while j < n and chunk[j] not in SINGLE_SYMBOLS and not _starts_operator(chunk, j):
            j += 1
        out.append(chunk[i:j])
        i = j
    return out


def _classify(piece: str, keywords: frozenset) -> TokenKind:
    if piece in MULTI_CHAR_OPERATORS or (len(piece) == 1 and piece in SINGLE_SYMBOLS):
        return TokenKind.SYMBOL
    if piece[0] in "\"'" or piece[0].isdigit():
        return TokenKind.LITERAL
    if piece in keywords:
        return TokenKind.KEYWORD
    return TokenKind.IDENTIFIER


def tokenize_code(source: str, language: str | None = None) -> TokenSequence:
    """Tokenize source text, keeping symbols and operators as own tokens."""
    keywords = keyword_table(language)
    pieces = []
    for chunk in source.split():
        pieces.extend(_scan_chunk(chunk))
    toks = tuple(
        Token(text=p, kind=_classify(p, keywords), stream=Stream.CODE, position=i)
        for i, p in enumerate(pieces)
    )
    return TokenSequence(tokens=toks, stream=Stream.CODE)


def tokenize_comment(text: str, stopwords: set | None = None) -> TokenSequence:
    """Tokenize comment text into lowercased words, flagging stopwords."""
    if stopwords is None:
        stopwords = default_stopwords()
    words = _WORD_RE.findall(text.lower())
    toks = tuple(
        Token(
            text=w,
            kind=TokenKind.STOPWORD if w in stopwords else TokenKind.WORD,
            stream=Stream.COMMENT,
            position=i,
        )
        for i, w in enumerate(words)
    )
    return TokenSequence(tokens=toks, stream=Stream.COMMENT)


def detokenize(seq: TokenSequence) -> str:
    return " ".join(t.text for t in seq.tokens)


_stopword_cache: set | None = None


def default_stopwords() -> set:
    """Stopword list bundled with the package, one word per line."""
    global _stopword_cache
    if _stopword_cache is None:
        raw = resources.files("cpr.data").joinpath("stopwords.txt").read_text("utf-8")
        _stopword_cache = {line.strip() for line in raw.splitlines() if line.strip()}
    return set(_stopword_cache)
