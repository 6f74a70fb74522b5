"""Assembles per-abstract ICOE records and scores effect polarity.

Pipeline: normalize, segment, pick the grouping-design sentence, tag I/C on
it, tag O and effect-description words everywhere, parse statistical effects
per sentence, link each effect to an outcome by sentence co-occurrence, and
classify polarity from the p-value bound.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from . import design_classifier, effect_grammar, entity_tagger, textproc
from .corpus import AbstractRecord, AnnotatedDocument
from .design_classifier import NBModel
from .effect_grammar import EffectIndicator, PValueConstraint
from .entity_tagger import Entity, TaggerModel
from .textproc import NormalizedText, Sentence

POSITIVE = "positive"
NEGATIVE = "negative"
INDETERMINATE = "indeterminate"
UNSCORED = "unscored"


@dataclass
class Effect:
    """Either a parsed indicator, or a description (effect words and/or a
    standalone p-value constraint found in the same sentence)."""

    indicator: EffectIndicator | None = None
    description: Entity | None = None
    p: PValueConstraint | None = None

    @property
    def type(self) -> str:
        return "indicator" if self.indicator is not None else "description"

    @property
    def p_constraint(self) -> PValueConstraint | None:
        if self.indicator is not None:
            return self.indicator.p
        return self.p

    @property
    def start(self) -> int:
        if self.indicator is not None:
            return self.indicator.start
        if self.description is not None:
            return self.description.start
        assert self.p is not None
        return self.p.start


@dataclass
class OutcomeEffectPair:
    outcome: Entity
    effect: Effect
    sentence_index: int
    polarity: str


@dataclass
class ICOERecord:
    id: str
    interventions: list[Entity] = field(default_factory=list)
    comparisons: list[Entity] = field(default_factory=list)
    pairs: list[OutcomeEffectPair] = field(default_factory=list)
    design_sentence_index: int | None = None
    warnings: list[str] = field(default_factory=list)


@dataclass
class ModelBundle:
    design: NBModel
    ic: TaggerModel
    oe: TaggerModel


def classify_polarity(p: PValueConstraint, threshold: float = 0.05, compat: bool = False) -> str:
    """Classify a p-value bound as positive/negative at the threshold.

    Strict mode returns indeterminate when the bound decides neither side
    (e.g. "p > 0.01" at threshold 0.05); compat mode folds indeterminate
    into negative so every scored effect lands in exactly two classes.
    """
    if p.op == "=":
        polarity = POSITIVE if p.value < threshold else NEGATIVE
    elif p.op in ("<", "≤"):
        polarity = POSITIVE if p.value <= threshold else INDETERMINATE
    else:  # ">", "≥"
        polarity = NEGATIVE if p.value >= threshold else INDETERMINATE
    if compat and polarity == INDETERMINATE:
        return NEGATIVE
    return polarity


def _attach_pvalues(
    descriptions: list[Entity], pvalues: list[PValueConstraint]
) -> tuple[dict[int, PValueConstraint], list[PValueConstraint]]:
    """Greedily pair standalone p-values with description entities by span gap."""
    pairs = []
    for pi, p in enumerate(pvalues):
        for di, d in enumerate(descriptions):
            gap = max(0, p.start - d.end, d.start - p.end)
            pairs.append((gap, pi, di))
    pairs.sort()
    assigned: dict[int, PValueConstraint] = {}
    used_p: set[int] = set()
    for _, pi, di in pairs:
        if pi in used_p or di in assigned:
            continue
        assigned[di] = pvalues[pi]
        used_p.add(pi)
    leftover = [p for pi, p in enumerate(pvalues) if pi not in used_p]
    return assigned, leftover


def link_outcome_effects(
    sentence: Sentence,
    entities: list[Entity],
    indicators: list[EffectIndicator],
    pvalues: list[PValueConstraint],
    threshold: float = 0.05,
    compat: bool = False,
    warnings: list[str] | None = None,
) -> list[OutcomeEffectPair]:
    """Pair every effect in a sentence with its nearest outcome entity.

    An effect binds to the closest O entity starting left of it, falling back
    to the closest O anywhere in the sentence; with no O present the effect
    is dropped with a warning.
    """
    outcomes = [e for e in entities if e.kind == "O"]
    descriptions = [e for e in entities if e.kind == "EDesc"]
    attached, leftover = _attach_pvalues(descriptions, pvalues)

    effects: list[Effect] = [Effect(indicator=ind) for ind in indicators]
    effects.extend(
        Effect(description=d, p=attached.get(di)) for di, d in enumerate(descriptions)
    )
    effects.extend(Effect(p=p) for p in leftover)
    effects.sort(key=lambda e: e.start)

    pairs: list[OutcomeEffectPair] = []
    for effect in effects:
        left = [o for o in outcomes if o.start < effect.start]
        if left:
            outcome = max(left, key=lambda o: o.start)
        elif outcomes:
            outcome = min(outcomes, key=lambda o: (abs(o.start - effect.start), o.start))
        else:
            if warnings is not None:
                warnings.append(
                    f"sentence {sentence.index}: dropped {effect.type} effect with no outcome entity"
                )
            continue
        p = effect.p_constraint
        polarity = classify_polarity(p, threshold, compat) if p is not None else UNSCORED
        pairs.append(OutcomeEffectPair(outcome, effect, sentence.index, polarity))
    return pairs


def predict_entities(
    models: ModelBundle, nt: NormalizedText, sentences: list[Sentence]
) -> tuple[int | None, list[Entity]]:
    """Design-sentence selection plus both taggers, as assemble() runs them."""
    design_index = design_classifier.select_design_sentence(models.design, sentences)
    entities: list[Entity] = []
    if design_index is not None:
        ic = entity_tagger.tag(models.ic, sentences[design_index], nt.text)
        entities.extend(entity_tagger.reassign_comparator(ic, nt.text))
    for sentence in sentences:
        entities.extend(entity_tagger.tag(models.oe, sentence, nt.text))
    return design_index, entities


def _to_raw(entity: Entity, nt: NormalizedText, body: str) -> Entity:
    rs, re_ = textproc.project_span(nt, entity.start, entity.end)
    return Entity(entity.kind, entity.sentence_index, rs, re_, body[rs:re_])


def _indicator_to_raw(ind: EffectIndicator, nt: NormalizedText) -> EffectIndicator:
    rs, re_ = textproc.project_span(nt, ind.start, ind.end)
    p = _pvalue_to_raw(ind.p, nt) if ind.p is not None else None
    return EffectIndicator(ind.kind, ind.estimate, ind.ci_level, ind.ci_low, ind.ci_high, p, rs, re_)


def _pvalue_to_raw(p: PValueConstraint, nt: NormalizedText) -> PValueConstraint:
    rs, re_ = textproc.project_span(nt, p.start, p.end)
    return PValueConstraint(p.op, p.value, rs, re_)


def assemble(
    record: AbstractRecord,
    models: ModelBundle,
    threshold: float = 0.05,
    compat: bool = False,
) -> ICOERecord:
    """Extract one ICOE record; degraded inputs produce warnings, not failures.

    All entity offsets in the returned record index the raw abstract body.
    """
    warnings: list[str] = []
    nt = textproc.normalize(record.body)
    sentences = textproc.split_sentences(nt)
    design_index, entities = predict_entities(models, nt, sentences)
    if design_index is None:
        warnings.append("no design sentence detected; interventions and comparisons are empty")

    interventions = [e for e in entities if e.kind == "I"]
    comparisons = [e for e in entities if e.kind == "C"]
    if len(interventions) > 1 or len(comparisons) > 1:
        warnings.append(
            f"multi-arm design: {len(interventions)} intervention and "
            f"{len(comparisons)} comparison entities kept unpaired"
        )

    by_sentence: dict[int, list[Entity]] = {}
    for e in entities:
        if e.kind in ("O", "EDesc"):
            by_sentence.setdefault(e.sentence_index, []).append(e)

    pairs: list[OutcomeEffectPair] = []
    for sentence in sentences:
        indicators, pvalues = effect_grammar.parse_effects(sentence.tokens, warnings)
        if not indicators and not pvalues and sentence.index not in by_sentence:
            continue
        pairs.extend(
            link_outcome_effects(
                sentence,
                by_sentence.get(sentence.index, []),
                indicators,
                pvalues,
                threshold,
                compat,
                warnings,
            )
        )

    raw_pairs = []
    for pair in pairs:
        effect = pair.effect
        raw_effect = Effect(
            indicator=_indicator_to_raw(effect.indicator, nt) if effect.indicator else None,
            description=_to_raw(effect.description, nt, record.body) if effect.description else None,
            p=_pvalue_to_raw(effect.p, nt) if effect.p else None,
        )
        raw_pairs.append(
            OutcomeEffectPair(
                _to_raw(pair.outcome, nt, record.body), raw_effect, pair.sentence_index, pair.polarity
            )
        )
    return ICOERecord(
        id=record.id,
        interventions=[_to_raw(e, nt, record.body) for e in interventions],
        comparisons=[_to_raw(e, nt, record.body) for e in comparisons],
        pairs=raw_pairs,
        design_sentence_index=design_index,
        warnings=warnings,
    )


def _entity_dict(e: Entity) -> dict:
    return {"text": e.surface, "start": e.start, "end": e.end}


def _pvalue_dict(p: PValueConstraint | None) -> dict | None:
    if p is None:
        return None
    return {"op": p.op, "value": p.value}


def record_to_dict(rec: ICOERecord) -> dict:
    """JSON-ready form of a record, matching the extraction output schema."""
    pairs = []
    for pair in rec.pairs:
        if pair.effect.indicator is not None:
            ind = pair.effect.indicator
            effect = {
                "type": "indicator",
                "kind": ind.kind,
                "estimate": ind.estimate,
                "ci_level": ind.ci_level,
                "ci_low": ind.ci_low,
                "ci_high": ind.ci_high,
                "p": _pvalue_dict(ind.p),
                "text": None,
                "start": ind.start,
                "end": ind.end,
            }
        else:
            d = pair.effect.description
            effect = {
                "type": "description",
                "text": d.surface if d is not None else None,
                "start": d.start if d is not None else None,
                "end": d.end if d is not None else None,
                "p": _pvalue_dict(pair.effect.p),
            }
        pairs.append(
            {
                "outcome": _entity_dict(pair.outcome),
                "effect": effect,
                "sentence_index": pair.sentence_index,
                "polarity": pair.polarity,
            }
        )
    return {
        "id": rec.id,
        "interventions": [_entity_dict(e) for e in rec.interventions],
        "comparisons": [_entity_dict(e) for e in rec.comparisons],
        "pairs": pairs,
        "design_sentence_index": rec.design_sentence_index,
        "warnings": rec.warnings,
    }


def _entity_from_dict(obj: dict, kind: str, sentence_index: int) -> Entity:
    return Entity(kind, sentence_index, obj["start"], obj["end"], obj["text"])


def record_from_dict(obj: dict) -> ICOERecord:
    """Rebuild a record from its JSON form (inverse of record_to_dict)."""
    pairs = []
    for p in obj.get("pairs", []):
        eff = p["effect"]
        pc = eff.get("p")
        constraint = PValueConstraint(pc["op"], pc["value"]) if pc else None
        if eff["type"] == "indicator":
            effect = Effect(
                indicator=EffectIndicator(
                    kind=eff["kind"],
                    estimate=eff["estimate"],
                    ci_level=eff["ci_level"],
                    ci_low=eff["ci_low"],
                    ci_high=eff["ci_high"],
                    p=constraint,
                    start=eff["start"],
                    end=eff["end"],
                )
            )
        else:
            description = None
            if eff.get("text") is not None:
                description = Entity("EDesc", p["sentence_index"], eff["start"], eff["end"], eff["text"])
            effect = Effect(description=description, p=constraint)
        pairs.append(
            OutcomeEffectPair(
                outcome=_entity_from_dict(p["outcome"], "O", p["sentence_index"]),
                effect=effect,
                sentence_index=p["sentence_index"],
                polarity=p["polarity"],
            )
        )
    return ICOERecord(
        id=obj["id"],
        interventions=[_entity_from_dict(e, "I", -1) for e in obj.get("interventions", [])],
        comparisons=[_entity_from_dict(e, "C", -1) for e in obj.get("comparisons", [])],
        pairs=pairs,
        design_sentence_index=obj.get("design_sentence_index"),
        warnings=list(obj.get("warnings", [])),
    )


def train_models(
    docs: list[AnnotatedDocument],
    epochs: int = 10,
    seed: int = 42,
    alpha: float = 1.0,
) -> ModelBundle:
    """Train the design classifier and both entity taggers from gold documents."""
    nb_examples: list[tuple[dict[str, int], str]] = []
    ic_examples: list[tuple[list, list[str]]] = []
    oe_examples: list[tuple[list, list[str]]] = []
    for doc in docs:
        nt = textproc.normalize(doc.record.body)
        sentences = textproc.split_sentences(nt)
        for s in sentences:
            label = (
                design_classifier.DESIGN
                if s.index == doc.design_sentence_index
                else design_classifier.OTHER
            )
            nb_examples.append((design_classifier.featurize_sentence(s), label))
        ic_examples.extend(
            entity_tagger.bio_examples(doc, nt, sentences, kinds=("I", "C"), design_only=True)
        )
        oe_examples.extend(entity_tagger.bio_examples(doc, nt, sentences, kinds=("O", "EDesc")))
    return ModelBundle(
        design=design_classifier.train_nb(nb_examples, alpha=alpha),
        ic=entity_tagger.train_tagger(ic_examples, epochs=epochs, seed=seed, kinds=("I", "C")),
        oe=entity_tagger.train_tagger(oe_examples, epochs=epochs, seed=seed, kinds=("O", "EDesc")),
    )


_DESIGN_FILE = "design_classifier.json"
_IC_FILE = "ic_tagger.json"
_OE_FILE = "oe_tagger.json"


def save_models(models: ModelBundle, directory: str) -> None:
    os.makedirs(directory, exist_ok=True)
    design_classifier.save_nb(models.design, os.path.join(directory, _DESIGN_FILE))
    entity_tagger.save_tagger(models.ic, os.path.join(directory, _IC_FILE))
    entity_tagger.save_tagger(models.oe, os.path.join(directory, _OE_FILE))


def load_models(directory: str) -> ModelBundle:
    return ModelBundle(
        design=design_classifier.load_nb(os.path.join(directory, _DESIGN_FILE)),
        ic=entity_tagger.load_tagger(os.path.join(directory, _IC_FILE)),
        oe=entity_tagger.load_tagger(os.path.join(directory, _OE_FILE)),
    )
