"""Text normalization, sentence segmentation and tokenization.

Gold annotations are character offsets into the raw abstract text, so every
transformation here carries a per-character map back to the raw string.
"""

from __future__ import annotations

import re
import unicodedata
from bisect import bisect_left
from dataclasses import dataclass
from importlib import resources

_DASHES = "–—"  # en dash, em dash
_MIDDLE_DOT = "·"
_NBSP = "  "


@dataclass
class NormalizedText:
    """Normalized string plus, per character, the raw offset it came from."""

    text: str
    offset_map: list[int]


@dataclass
class Token:
    start: int
    end: int
    surface: str


@dataclass
class Sentence:
    index: int
    start: int
    end: int
    tokens: list[Token]


def _nfc_pass(raw: str) -> tuple[str, list[int]]:
    # NFC per combining cluster so multi-char compositions keep a usable map.
    out: list[str] = []
    omap: list[int] = []
    i, n = 0, len(raw)
    while i < n:
        j = i + 1
        while j < n and unicodedata.combining(raw[j]):
            j += 1
        for ch in unicodedata.normalize("NFC", raw[i:j]):
            out.append(ch)
            omap.append(i)
        i = j
    return "".join(out), omap


def _digit_range_context(text: str, i: int) -> bool:
    """True when the dash at position i separates two numbers."""
    j = i - 1
    while j >= 0 and text[j] == " ":
        j -= 1
    if j < 0 or not text[j].isdigit():
        return False
    k = i + 1
    while k < len(text) and text[k] == " ":
        k += 1
    if k >= len(text):
        return False
    if text[k].isdigit():
        return True
    return text[k] == "." and k + 1 < len(text) and text[k + 1].isdigit()


def _rewrite_pass(text: str) -> tuple[str, list[int]]:
    out: list[str] = []
    omap: list[int] = []

    def emit(chunk: str, origin: int) -> None:
        for ch in chunk:
            out.append(ch)
            omap.append(origin)

    for i, ch in enumerate(text):
        if ch in _DASHES and _digit_range_context(text, i):
            emit(" to ", i)
        elif (
            ch == _MIDDLE_DOT
            and 0 < i < len(text) - 1
            and text[i - 1].isdigit()
            and text[i + 1].isdigit()
        ):
            emit(".", i)
        elif ch in _NBSP:
            emit(" ", i)
        else:
            emit(ch, i)
    return "".join(out), omap


def _collapse_pass(text: str) -> tuple[str, list[int]]:
    out: list[str] = []
    omap: list[int] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            out.append(" ")
            omap.append(i)
            while i < n and text[i].isspace():
                i += 1
        else:
            out.append(text[i])
            omap.append(i)
            i += 1
    return "".join(out), omap


def normalize(raw: str) -> NormalizedText:
    """Normalize abstract text for parsing.

    In order: Unicode NFC, en/em dash between numbers -> "to", middle-dot
    decimal separator -> ".", non-breaking space -> space, whitespace runs
    collapsed to single spaces. Characters produced from a multi-character
    origin all map back to the first raw character.
    """
    text1, map1 = _nfc_pass(raw)
    text2, map2 = _rewrite_pass(text1)
    text3, map3 = _collapse_pass(text2)
    offset_map = [map1[map2[m]] for m in map3]
    return NormalizedText(text=text3, offset_map=offset_map)


def project_span(nt: NormalizedText, start: int, end: int) -> tuple[int, int]:
    """Map a normalized-text span back to a covering raw-text span."""
    if not (0 <= start < end <= len(nt.text)):
        raise ValueError(f"span ({start}, {end}) out of range for text of length {len(nt.text)}")
    return nt.offset_map[start], nt.offset_map[end - 1] + 1


def to_normalized_span(nt: NormalizedText, raw_start: int, raw_end: int) -> tuple[int, int]:
    """Map a raw-text span to the normalized characters that originate in it."""
    return bisect_left(nt.offset_map, raw_start), bisect_left(nt.offset_map, raw_end)


_TOKEN_RE = re.compile(
    r"""(?:\d+(?:\.\d+)?|\.\d+)%   # percent-suffixed number: 95%  18.4%  .5%
      | \w+(?:[-/:.'’]\w+)*        # word, number, or internally-punctuated unit
      | \.\d+                      # leading-dot decimal: .81
      | [=<>≤≥]                    # comparison operators stand alone
      | \S                         # any other char is its own token
    """,
    re.VERBOSE,
)


def tokenize(text: str, start: int = 0, end: int | None = None) -> list[Token]:
    """Tokenize a slice of normalized text; offsets are absolute."""
    if end is None:
        end = len(text)
    return [
        Token(start=m.start(), end=m.end(), surface=m.group())
        for m in _TOKEN_RE.finditer(text, start, end)
    ]


_DEFAULT_ABBREVIATIONS: frozenset[str] | None = None


def load_abbreviations(path: str | None = None) -> frozenset[str]:
    """Load the protected-abbreviation list (one per line, # comments)."""
    if path is None:
        text = resources.files("icoe.data").joinpath("abbreviations.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    entries = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            entries.add(line.lower())
    return frozenset(entries)


def _default_abbreviations() -> frozenset[str]:
    global _DEFAULT_ABBREVIATIONS
    if _DEFAULT_ABBREVIATIONS is None:
        _DEFAULT_ABBREVIATIONS = load_abbreviations()
    return _DEFAULT_ABBREVIATIONS


def _ends_with_abbreviation(text: str, period_pos: int, abbreviations: frozenset[str]) -> bool:
    prefix = text[:period_pos].lower()
    for abbr in abbreviations:
        if prefix.endswith(abbr):
            before = period_pos - len(abbr) - 1
            if before < 0 or not text[before].isalpha():
                return True
    return False


def split_sentences(nt: NormalizedText, abbreviations: frozenset[str] | None = None) -> list[Sentence]:
    """Split normalized text into sentences with their tokens.

    A ".", "?" or "!" ends a sentence only when followed by a space (or end
    of text), outside any open parenthesis, not acting as a decimal point,
    and, for periods, not closing a protected abbreviation. This keeps
    fragments like "(OR, 1.30; 95% CI, .81 to 2.09; P = .28)" in one piece.
    """
    if abbreviations is None:
        abbreviations = _default_abbreviations()
    text = nt.text
    n = len(text)
    boundaries: list[int] = []
    depth = 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
            continue
        if ch == ")":
            depth = max(0, depth - 1)
            continue
        if ch not in ".?!":
            continue
        if depth > 0:
            continue
        if i + 1 < n and text[i + 1].isdigit():
            continue  # decimal point
        if i + 1 < n and text[i + 1] != " ":
            continue
        if ch == "." and _ends_with_abbreviation(text, i, abbreviations):
            continue
        boundaries.append(i + 1)

    sentences: list[Sentence] = []
    pos = 0
    for cut in boundaries + [n]:
        start, end = pos, min(cut, n)
        while start < end and text[start] == " ":
            start += 1
        while end > start and text[end - 1] == " ":
            end -= 1
        if start < end:
            sentences.append(
                Sentence(
                    index=len(sentences),
                    start=start,
                    end=end,
                    tokens=tokenize(text, start, end),
                )
            )
        pos = cut
    return sentences
