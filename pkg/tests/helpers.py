"""Shared test utilities."""

from __future__ import annotations

from icoe import textproc
from icoe.textproc import NormalizedText, Sentence


def normalized_sentences(text: str) -> tuple[NormalizedText, list[Sentence]]:
    nt = textproc.normalize(text)
    return nt, textproc.split_sentences(nt)


def first_sentence(text: str) -> Sentence:
    _, sentences = normalized_sentences(text)
    return sentences[0]


def tokens_of(text: str) -> list:
    return textproc.tokenize(textproc.normalize(text).text)
