"""Tokenizer for MiniSol.

Comments are skipped, with one exception worth noting: a `/* HCC */` block
comment is the marker the emitter leaves on patch lines, and the lexer
records the lines it saw them on so a re-parsed hardened file keeps its
patch statements recognizable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import Diagnostic
from .nodes import INT_WIDTHS

KEYWORDS = frozenset(
    """pragma abstract contract function constructor virtual public internal
    payable returns return if else while for require assert new true false
    msg mapping bool address""".split()
)

PUNCT = (
    "**",
    "++",
    "--",
    "+=",
    "-=",
    "==",
    "!=",
    "<=",
    ">=",
    "&&",
    "||",
    "=>",
    "+",
    "-",
    "*",
    "/",
    "<",
    ">",
    "=",
    "!",
    "(",
    ")",
    "{",
    "}",
    "[",
    "]",
    ";",
    ",",
    ".",
)


@dataclass
class Token:
    kind: str  # "ident", "keyword", "number", "hexnumber", "string", "eof", or the punctuation itself
    text: str
    line: int
    col: int
    offset: int

    @property
    def end_offset(self) -> int:
        return self.offset + len(self.text)


def lex(source: str):
    """Returns (tokens, diagnostics, patch_marker_lines)."""
    tokens: list[Token] = []
    diags: list[Diagnostic] = []
    marker_lines: set[int] = set()
    i = 0
    line = 1
    col = 0
    n = len(source)

    def bump(text: str):
        nonlocal i, line, col
        for ch in text:
            if ch == "\n":
                line += 1
                col = 0
            else:
                col += 1
            i += 1

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            bump(ch)
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            j = n if j < 0 else j
            bump(source[i:j])
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                diags.append(Diagnostic("SyntaxError", line, col, "unterminated block comment"))
                break
            body = source[i + 2 : j].strip()
            if body == "HCC":
                marker_lines.add(line)
            bump(source[i : j + 2])
            continue
        start_line, start_col, start_off = line, col, i
        if ch.isdigit():
            if source.startswith("0x", i) or source.startswith("0X", i):
                j = i + 2
                while j < n and source[j] in "0123456789abcdefABCDEF":
                    j += 1
                text = source[i:j]
                if j == i + 2:
                    diags.append(Diagnostic("SyntaxError", line, col, "malformed hex literal"))
                tokens.append(Token("hexnumber", text, start_line, start_col, start_off))
                bump(text)
            else:
                j = i
                while j < n and source[j].isdigit():
                    j += 1
                text = source[i:j]
                tokens.append(Token("number", text, start_line, start_col, start_off))
                bump(text)
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            kind = "keyword" if text in KEYWORDS or _is_int_type_name(text) else "ident"
            tokens.append(Token(kind, text, start_line, start_col, start_off))
            bump(text)
            continue
        if ch == '"':
            j = i + 1
            buf = []
            ok = False
            while j < n:
                c = source[j]
                if c == "\\" and j + 1 < n:
                    esc = source[j + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                    continue
                if c == '"':
                    ok = True
                    break
                if c == "\n":
                    break
                buf.append(c)
                j += 1
            if not ok:
                diags.append(Diagnostic("SyntaxError", line, col, "unterminated string literal"))
                bump(source[i:j])
                continue
            raw = source[i : j + 1]
            tok = Token("string", raw, start_line, start_col, start_off)
            tok.value = "".join(buf)  # decoded payload
            tokens.append(tok)
            bump(raw)
            continue
        for p in PUNCT:
            if source.startswith(p, i):
                tokens.append(Token(p, p, start_line, start_col, start_off))
                bump(p)
                break
        else:
            diags.append(Diagnostic("SyntaxError", line, col, f"unexpected character {ch!r}"))
            bump(ch)
    tokens.append(Token("eof", "", line, col, n))
    return tokens, diags, marker_lines


def _is_int_type_name(text: str) -> bool:
    for prefix in ("uint", "int"):
        if text == prefix:
            return True
        if text.startswith(prefix):
            digits = text[len(prefix) :]
            if digits.isdigit() and int(digits) in INT_WIDTHS:
                return True
    return False
