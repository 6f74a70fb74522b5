"""BIO entity tagging with an averaged perceptron over sparse lexical features.

Two tagger instances are trained in practice: one for I/C on the grouping
design sentence, one for O and effect-description words on every sentence.
The learner is deterministic given (examples, epochs, seed).
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field

from . import textproc
from .corpus import ENTITY_KINDS, AnnotatedDocument
from .textproc import NormalizedText, Sentence, Token

OUTSIDE = "O"  # the outside tag; distinct from entity kind "O" (outcome)

_DOSE_UNITS = {"mg", "g", "ml", "µg", "mcg", "iu"}
_GROUP_WORDS = {"group", "groups", "arm", "arms"}
_SHAPE_RE = re.compile(r"(.)\1{2,}")


@dataclass
class Entity:
    """A decoded entity span; offsets index the normalized document text."""

    kind: str
    sentence_index: int
    start: int
    end: int
    surface: str


@dataclass
class TaggerModel:
    tagset: tuple[str, ...]
    weights: dict[str, dict[str, float]]
    epochs: int
    seed: int
    mistakes_per_epoch: list[int] = field(default_factory=list, compare=False)


def tagset_for(kinds: tuple[str, ...]) -> tuple[str, ...]:
    tags: list[str] = [OUTSIDE]
    for kind in kinds:
        tags.extend((f"B-{kind}", f"I-{kind}"))
    return tuple(tags)


def _shape(token: str) -> str:
    chars = []
    for ch in token:
        if ch.isupper():
            chars.append("X")
        elif ch.islower():
            chars.append("x")
        elif ch.isdigit():
            chars.append("d")
        else:
            chars.append(ch)
    return _SHAPE_RE.sub(r"\1\1", "".join(chars))


def extract_features(tokens: list[Token], position: int) -> list[str]:
    """Context features for one token; the previous-tag feature is added at decode time."""
    surface = tokens[position].surface
    lower = surface.lower()
    feats = ["w:" + lower, "shape:" + _shape(surface)]
    for length in (1, 2, 3):
        if len(lower) >= length:
            feats.append(f"pre{length}:" + lower[:length])
            feats.append(f"suf{length}:" + lower[-length:])
    feats.append("w-1:" + (tokens[position - 1].surface.lower() if position > 0 else "<s>"))
    feats.append(
        "w+1:" + (tokens[position + 1].surface.lower() if position + 1 < len(tokens) else "</s>")
    )
    if lower in _DOSE_UNITS:
        feats.append("dose-unit")
    if lower in _GROUP_WORDS:
        feats.append("group-word")
    depth = 0
    for tok in tokens[:position]:
        if tok.surface == "(":
            depth += 1
        elif tok.surface == ")":
            depth = max(0, depth - 1)
    if depth > 0:
        feats.append("in-paren")
    return feats


def spans_to_bio(
    doc: AnnotatedDocument,
    nt: NormalizedText,
    sentences: list[Sentence],
    kinds: tuple[str, ...] = ENTITY_KINDS,
) -> list[list[str]]:
    """Convert raw-offset gold spans to per-sentence BIO tag rows.

    Spans are projected onto the normalized text and snapped outward to the
    covering tokens. A span that crosses a sentence boundary, covers no
    token, or collides with another converted span is an error.
    """
    rows = [[OUTSIDE] * len(s.tokens) for s in sentences]
    for sp in sorted(doc.spans, key=lambda s: (s.start, s.end)):
        if sp.kind not in kinds:
            continue
        where = f"{sp.kind} span [{sp.start}, {sp.end}) in {doc.record.id!r}"
        ns, ne = textproc.to_normalized_span(nt, sp.start, sp.end)
        if ns >= ne:
            raise ValueError(f"span maps to no normalized text: {where}")
        sentence = next((s for s in sentences if s.start <= ns < s.end), None)
        if sentence is None:
            raise ValueError(f"span starts outside every sentence: {where}")
        if ne > sentence.end:
            raise ValueError(f"span crosses a sentence boundary: {where}")
        covering = [
            j for j, tok in enumerate(sentence.tokens) if tok.end > ns and tok.start < ne
        ]
        if not covering:
            raise ValueError(f"span covers no token: {where}")
        row = rows[sentence.index]
        if any(row[j] != OUTSIDE for j in covering):
            raise ValueError(f"spans collide after token alignment: {where}")
        row[covering[0]] = f"B-{sp.kind}"
        for j in covering[1:]:
            row[j] = f"I-{sp.kind}"
    return rows


def bio_examples(
    doc: AnnotatedDocument,
    nt: NormalizedText,
    sentences: list[Sentence],
    kinds: tuple[str, ...],
    design_only: bool = False,
) -> list[tuple[list[Token], list[str]]]:
    """Training pairs (tokens, tags) for one document, restricted to the given kinds."""
    rows = spans_to_bio(doc, nt, sentences, kinds)
    if design_only:
        if doc.design_sentence_index is None:
            return []
        s = sentences[doc.design_sentence_index]
        return [(s.tokens, rows[s.index])]
    return [(s.tokens, rows[s.index]) for s in sentences]


class _Trainer:
    """Averaged perceptron bookkeeping (lazy-sum averaging)."""

    def __init__(self) -> None:
        self.weights: dict[str, dict[str, float]] = {}
        self._totals: dict[tuple[str, str], float] = {}
        self._stamps: dict[tuple[str, str], int] = {}
        self.steps = 0

    def adjust(self, feature: str, tag: str, delta: float) -> None:
        row = self.weights.setdefault(feature, {})
        current = row.get(tag, 0.0)
        key = (feature, tag)
        self._totals[key] = self._totals.get(key, 0.0) + (self.steps - self._stamps.get(key, 0)) * current
        self._stamps[key] = self.steps
        row[tag] = current + delta

    def averaged(self) -> dict[str, dict[str, float]]:
        final: dict[str, dict[str, float]] = {}
        for feature in sorted(self.weights):
            for tag in sorted(self.weights[feature]):
                current = self.weights[feature][tag]
                key = (feature, tag)
                total = self._totals.get(key, 0.0) + (self.steps - self._stamps.get(key, 0)) * current
                value = total / self.steps
                if value != 0.0:
                    final.setdefault(feature, {})[tag] = value
        return final


def _score_tag(weights: dict[str, dict[str, float]], feats: list[str], tagset: tuple[str, ...]) -> dict[str, float]:
    scores = {tag: 0.0 for tag in tagset}
    for f in feats:
        row = weights.get(f)
        if row:
            for tag, value in row.items():
                scores[tag] += value
    return scores


def _argmax(scores: dict[str, float], tagset: tuple[str, ...]) -> tuple[str, float]:
    """Best tag and its margin over the runner-up; ties keep tagset order."""
    best_tag = tagset[0]
    best = scores[best_tag]
    second = float("-inf")
    for tag in tagset[1:]:
        s = scores[tag]
        if s > best:
            second = best
            best, best_tag = s, tag
        elif s > second:
            second = s
    return best_tag, best - second


def train_tagger(
    examples: list[tuple[list[Token], list[str]]],
    epochs: int = 10,
    seed: int = 42,
    kinds: tuple[str, ...] | None = None,
) -> TaggerModel:
    """Train an averaged perceptron: shuffle each epoch, greedy decode, update on mistakes."""
    if epochs < 1:
        raise ValueError(f"epochs must be >= 1, got {epochs}")
    if kinds is None:
        seen = {tag[2:] for _, tags in examples for tag in tags if tag != OUTSIDE}
        kinds = tuple(k for k in ENTITY_KINDS if k in seen)
    tagset = tagset_for(kinds)
    if all(tag == OUTSIDE for _, tags in examples for tag in tags):
        raise ValueError("no entities to learn: every training tag is outside")

    trainer = _Trainer()
    rng = random.Random(seed)
    order = list(range(len(examples)))
    mistakes_per_epoch: list[int] = []
    for _ in range(epochs):
        rng.shuffle(order)
        mistakes = 0
        for idx in order:
            tokens, gold = examples[idx]
            prev = "<start>"
            for i in range(len(tokens)):
                feats = extract_features(tokens, i)
                feats.append("t-1:" + prev)
                trainer.steps += 1
                scores = _score_tag(trainer.weights, feats, tagset)
                pred, _ = _argmax(scores, tagset)
                if pred != gold[i]:
                    mistakes += 1
                    for f in feats:
                        trainer.adjust(f, gold[i], +1.0)
                        trainer.adjust(f, pred, -1.0)
                prev = pred
        mistakes_per_epoch.append(mistakes)
    return TaggerModel(
        tagset=tagset,
        weights=trainer.averaged(),
        epochs=epochs,
        seed=seed,
        mistakes_per_epoch=mistakes_per_epoch,
    )


def decode(model: TaggerModel, tokens: list[Token]) -> tuple[list[str], list[float]]:
    """Greedy left-to-right decode; returns raw tags and per-token margins."""
    tags: list[str] = []
    margins: list[float] = []
    prev = "<start>"
    for i in range(len(tokens)):
        feats = extract_features(tokens, i)
        feats.append("t-1:" + prev)
        scores = _score_tag(model.weights, feats, model.tagset)
        tag, margin = _argmax(scores, model.tagset)
        tags.append(tag)
        margins.append(margin)
        prev = tag
    return tags, margins


def repair_bio(tags: list[str]) -> list[str]:
    """Rewrite dangling I-k tags (no preceding B-k/I-k of the same kind) to B-k."""
    fixed = list(tags)
    for i, tag in enumerate(fixed):
        if tag.startswith("I-"):
            kind = tag[2:]
            prev = fixed[i - 1] if i > 0 else OUTSIDE
            if prev not in (f"B-{kind}", f"I-{kind}"):
                fixed[i] = f"B-{kind}"
    return fixed


def tags_to_entities(
    tags: list[str], tokens: list[Token], sentence_index: int, text: str
) -> list[Entity]:
    entities: list[Entity] = []
    open_kind: str | None = None
    span_start = span_end = 0
    for tag, tok in zip(tags, tokens):
        if tag.startswith("B-") or (tag.startswith("I-") and tag[2:] != open_kind):
            if open_kind is not None:
                entities.append(
                    Entity(open_kind, sentence_index, span_start, span_end, text[span_start:span_end])
                )
            open_kind = tag[2:]
            span_start, span_end = tok.start, tok.end
        elif tag.startswith("I-"):
            span_end = tok.end
        else:
            if open_kind is not None:
                entities.append(
                    Entity(open_kind, sentence_index, span_start, span_end, text[span_start:span_end])
                )
            open_kind = None
    if open_kind is not None:
        entities.append(
            Entity(open_kind, sentence_index, span_start, span_end, text[span_start:span_end])
        )
    return entities


def tag(model: TaggerModel, sentence: Sentence, text: str) -> list[Entity]:
    """Tag one sentence and return its decoded entities."""
    tags, _ = decode(model, sentence.tokens)
    return tags_to_entities(repair_bio(tags), sentence.tokens, sentence.index, text)


def tag_scored(
    model: TaggerModel, sentence: Sentence, text: str
) -> list[tuple[Entity, float]]:
    """Like tag(), with a mean-margin confidence per entity."""
    tags, margins = decode(model, sentence.tokens)
    repaired = repair_bio(tags)
    entities = tags_to_entities(repaired, sentence.tokens, sentence.index, text)
    scored: list[tuple[Entity, float]] = []
    for ent in entities:
        toks = [
            i
            for i, tok in enumerate(sentence.tokens)
            if tok.start >= ent.start and tok.end <= ent.end
        ]
        confidence = sum(margins[i] for i in toks) / len(toks) if toks else 0.0
        scored.append((ent, confidence))
    return scored


_COMPARATOR_CUES = ("versus", "vs", "or standard", "placebo", "alone")


def reassign_comparator(entities: list[Entity], text: str) -> list[Entity]:
    """Relabel one of two intervention entities as the comparison arm.

    Applied when a design sentence decoded to exactly two I entities and no
    C: the entity extending rightward of the earliest comparator cue becomes
    the comparison.
    """
    i_entities = [e for e in entities if e.kind == "I"]
    if len(i_entities) != 2 or any(e.kind == "C" for e in entities):
        return entities
    lowered = text.lower()
    for cue in _COMPARATOR_CUES:
        for m in re.finditer(r"(?<!\w)" + re.escape(cue) + r"(?!\w)", lowered):
            candidates = [e for e in i_entities if e.end > m.start()]
            if candidates:
                chosen = min(candidates, key=lambda e: (max(e.start - m.start(), 0), e.start))
                return [
                    Entity("C", e.sentence_index, e.start, e.end, e.surface) if e is chosen else e
                    for e in entities
                ]
    return entities


def save_tagger(model: TaggerModel, path: str) -> None:
    entries = [
        [feature, tag, weight]
        for feature in sorted(model.weights)
        for tag, weight in sorted(model.weights[feature].items())
    ]
    obj = {
        "tagset": list(model.tagset),
        "epochs": model.epochs,
        "seed": model.seed,
        "weights": entries,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")


def load_tagger(path: str) -> TaggerModel:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    weights: dict[str, dict[str, float]] = {}
    for feature, tag, weight in obj["weights"]:
        weights.setdefault(feature, {})[tag] = weight
    return TaggerModel(
        tagset=tuple(obj["tagset"]),
        weights=weights,
        epochs=obj["epochs"],
        seed=obj["seed"],
    )
