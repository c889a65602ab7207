r"""Tokenizer for subject-language source and specification expressions.

Plain `//` comments are skipped; `//@` lines are surfaced as SPEC tokens so
the parser can attach the clause to the next method or loop header.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import SyntaxError

KEYWORDS = {
    "class", "static", "public", "private", "int", "boolean", "String",
    "void", "if", "else", "while", "for", "return", "true", "false",
    "new", "null",
}

# Multi-char operators first so maximal munch works.
OPERATORS = [
    "<==>", "==>", "<=", ">=", "==", "!=", "&&", "||", "++", "--",
    "+=", "-=", "*=", "/=", "%=",
    "+", "-", "*", "/", "%", "<", ">", "!", "=", "(", ")", "{", "}",
    "[", "]", ";", ",", ".",
]

SPEC_WORDS = {"\\result", "\\old", "\\forall", "\\exists"}


@dataclass
class Token:
    kind: str  # 'ident' | 'keyword' | 'int' | 'string' | 'op' | 'spec' | 'specword' | 'eof'
    text: str
    line: int
    col: int


def tokenize(text: str, *, spec_mode: bool = False, start_line: int = 1) -> list[Token]:
    """Tokenize program text (or, with spec_mode, one spec expression)."""
    toks: list[Token] = []
    line = start_line
    col = 1
    i = 0
    n = len(text)

    def err(msg: str):
        raise SyntaxError(line, col, msg)

    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//@", i):
            j = text.find("\n", i)
            if j == -1:
                j = n
            toks.append(Token("spec", text[i + 3 : j].strip(), line, col))
            col += j - i
            i = j
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            i = n if j == -1 else j
            continue
        if ch == "\\" and spec_mode:
            for w in SPEC_WORDS:
                if text.startswith(w, i):
                    toks.append(Token("specword", w, line, col))
                    i += len(w)
                    col += len(w)
                    break
            else:
                err(f"unknown spec keyword starting at {text[i:i+8]!r}")
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            toks.append(Token("keyword" if word in KEYWORDS else "ident", word, line, col))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            out = []
            while j < n and text[j] != '"':
                c = text[j]
                if c == "\n":
                    err("unterminated string literal")
                if c == "\\":
                    j += 1
                    if j >= n:
                        err("unterminated escape")
                    esc = text[j]
                    if esc == "n":
                        out.append("\n")
                    elif esc == "t":
                        out.append("\t")
                    elif esc in ('"', "\\"):
                        out.append(esc)
                    else:
                        err(f"unknown escape \\{esc}")
                else:
                    out.append(c)
                j += 1
            if j >= n:
                err("unterminated string literal")
            toks.append(Token("string", "".join(out), line, col))
            col += j + 1 - i
            i = j + 1
            continue
        for op in OPERATORS:
            if text.startswith(op, i):
                toks.append(Token("op", op, line, col))
                i += len(op)
                col += len(op)
                break
        else:
            err(f"unexpected character {ch!r}")

    toks.append(Token("eof", "", line, col))
    return toks
