"""Evaluation: span P/R/F1, k-fold cross-validation, the operator-wise
positive/negative census, and the two-round self-training loop."""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable

from . import assembly, design_classifier, entity_tagger, textproc
from .assembly import ICOERecord, ModelBundle, classify_polarity
from .corpus import ENTITY_KINDS, AbstractRecord, AnnotatedDocument, CorpusError, validate_annotations
from .entity_tagger import Entity


@dataclass
class PRF:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


def prf_from_counts(tp: int, fp: int, fn: int) -> PRF:
    # Convention: zero precision/recall when there is nothing to divide by.
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PRF(precision, recall, f1, tp, fp, fn)


def _match_counts(gold: list[Entity], predicted: list[Entity], mode: str) -> dict[str, tuple[int, int, int]]:
    """Per-kind (tp, fp, fn). Exact mode matches (kind, start, end); overlap
    mode greedily matches intersecting spans in (start, end) order."""
    if mode not in ("exact", "overlap"):
        raise ValueError(f"unknown matching mode: {mode!r}")
    counts: dict[str, tuple[int, int, int]] = {}
    for kind in ENTITY_KINDS:
        g = sorted((e for e in gold if e.kind == kind), key=lambda e: (e.start, e.end))
        p = sorted((e for e in predicted if e.kind == kind), key=lambda e: (e.start, e.end))
        if mode == "exact":
            gc = Counter((e.start, e.end) for e in g)
            pc = Counter((e.start, e.end) for e in p)
            tp = sum((gc & pc).values())
        else:
            matched = [False] * len(g)
            tp = 0
            for pe in p:
                for gi, ge in enumerate(g):
                    if not matched[gi] and ge.start < pe.end and pe.start < ge.end:
                        matched[gi] = True
                        tp += 1
                        break
        counts[kind] = (tp, len(p) - tp, len(g) - tp)
    return counts


def entity_prf(gold: list[Entity], predicted: list[Entity], mode: str = "exact") -> dict[str, PRF]:
    """P/R/F1 per entity kind plus micro-averaged overall."""
    counts = _match_counts(gold, predicted, mode)
    out = {kind: prf_from_counts(*counts[kind]) for kind in ENTITY_KINDS}
    tp = sum(c[0] for c in counts.values())
    fp = sum(c[1] for c in counts.values())
    fn = sum(c[2] for c in counts.values())
    out["overall"] = prf_from_counts(tp, fp, fn)
    return out


@dataclass
class FoldAssignment:
    k: int
    seed: int
    fold_of: dict[str, int]


def kfold_split(ids: list[str], k: int, seed: int) -> FoldAssignment:
    """Seeded shuffle then round-robin assignment; fold sizes differ by at most 1."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > len(ids):
        raise ValueError(f"k = {k} exceeds corpus size {len(ids)}")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate ids in fold split input")
    order = list(ids)
    random.Random(seed).shuffle(order)
    return FoldAssignment(k=k, seed=seed, fold_of={doc_id: i % k for i, doc_id in enumerate(order)})


def _gold_entities(doc: AnnotatedDocument, nt, sentences) -> list[Entity]:
    """Token-aligned gold entities, built the same way training rows are."""
    entities: list[Entity] = []
    for kinds in (("I", "C"), ("O", "EDesc")):
        rows = entity_tagger.spans_to_bio(doc, nt, sentences, kinds)
        for s in sentences:
            entities.extend(
                entity_tagger.tags_to_entities(rows[s.index], s.tokens, s.index, nt.text)
            )
    return entities


def cross_validate(
    docs: list[AnnotatedDocument],
    k: int = 5,
    seed: int = 42,
    epochs: int = 10,
    alpha: float = 1.0,
    mode: str = "exact",
) -> dict:
    """Train on each fold complement, evaluate the full prediction pipeline on
    the fold; reports per-kind P/R/F1 per fold, the best fold, and means.

    A kind with no gold entity in a fold is reported as null there and
    excluded from its mean.
    """
    if not docs:
        raise ValueError("empty gold corpus")
    ids = [d.record.id for d in docs]
    folds = kfold_split(ids, k, seed)
    prepared = []
    for doc in docs:
        nt = textproc.normalize(doc.record.body)
        sentences = textproc.split_sentences(nt)
        prepared.append((doc, nt, sentences, _gold_entities(doc, nt, sentences)))

    per_fold = []
    for fold in range(k):
        train_docs = [d for d in docs if folds.fold_of[d.record.id] != fold]
        models = assembly.train_models(train_docs, epochs=epochs, seed=seed, alpha=alpha)
        totals = {kind: [0, 0, 0] for kind in ENTITY_KINDS}
        test_ids = []
        for doc, nt, sentences, gold in prepared:
            if folds.fold_of[doc.record.id] != fold:
                continue
            test_ids.append(doc.record.id)
            _, predicted = assembly.predict_entities(models, nt, sentences)
            for kind, (tp, fp, fn) in _match_counts(gold, predicted, mode).items():
                totals[kind][0] += tp
                totals[kind][1] += fp
                totals[kind][2] += fn
        per_kind: dict[str, dict | None] = {}
        for kind in ENTITY_KINDS:
            tp, fp, fn = totals[kind]
            per_kind[kind] = None if tp + fn == 0 else prf_from_counts(tp, fp, fn).to_dict()
        overall = prf_from_counts(
            sum(t[0] for t in totals.values()),
            sum(t[1] for t in totals.values()),
            sum(t[2] for t in totals.values()),
        )
        per_fold.append(
            {"fold": fold, "test_ids": test_ids, "per_kind": per_kind, "overall": overall.to_dict()}
        )

    best = max(per_fold, key=lambda f: (f["overall"]["f1"], -f["fold"]))
    mean_per_kind: dict[str, dict | None] = {}
    for kind in ENTITY_KINDS:
        scored = [f["per_kind"][kind] for f in per_fold if f["per_kind"][kind] is not None]
        if not scored:
            mean_per_kind[kind] = None
        else:
            mean_per_kind[kind] = {
                metric: sum(s[metric] for s in scored) / len(scored)
                for metric in ("precision", "recall", "f1")
            }
    mean_overall = {
        metric: sum(f["overall"][metric] for f in per_fold) / len(per_fold)
        for metric in ("precision", "recall", "f1")
    }
    return {
        "k": k,
        "seed": seed,
        "epochs": epochs,
        "alpha": alpha,
        "mode": mode,
        "per_fold": per_fold,
        "best": {"fold": best["fold"], "per_kind": best["per_kind"], "overall": best["overall"]},
        "mean": {"per_kind": mean_per_kind, "overall": mean_overall},
    }


def render_cv_report(report: dict) -> str:
    """Plain-text table of the cross-validation report."""
    kinds = list(ENTITY_KINDS) + ["overall"]
    lines = [
        f"{report['k']}-fold cross-validation (seed {report['seed']}, {report['mode']} matching)",
        "fold  " + "".join(f"{k:>10}" for k in kinds),
    ]

    def fmt(cell: dict | None) -> str:
        return "       n/a" if cell is None else f"{cell['f1']:>10.3f}"

    for f in report["per_fold"]:
        row = [fmt(f["per_kind"][k]) for k in ENTITY_KINDS] + [fmt(f["overall"])]
        lines.append(f"{f['fold']:>4}  " + "".join(row))
    mean_cells = [fmt(report["mean"]["per_kind"][k]) for k in ENTITY_KINDS]
    lines.append("mean  " + "".join(mean_cells) + fmt(report["mean"]["overall"]))
    lines.append(f"best fold: {report['best']['fold']} (F1 values above are per entity kind)")
    return "\n".join(lines)


OPERATOR_ORDER = ("=", ">", "<", "≥", "≤")
OPERATOR_LABELS = {
    "=": "Equal to (=)",
    ">": "Greater than (>)",
    "<": "Less than (<)",
    "≥": "Greater than or equal to (≥)",
    "≤": "Less than or equal to (≤)",
}


@dataclass
class OperatorRow:
    op: str
    total: int = 0
    positive: int = 0
    negative: int = 0
    indeterminate: int = 0


@dataclass
class OperatorStats:
    mode: str
    threshold: float
    rows: list[OperatorRow] = field(default_factory=list)
    total: OperatorRow = field(default_factory=lambda: OperatorRow(op="total"))
    percentages: dict[str, str] = field(default_factory=dict)


def _percentage(part: int, total: int) -> str:
    if total == 0:
        return "—"
    value = (Decimal(part) * 100 / Decimal(total)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    return f"{value}%"


def polarity_table(records: Iterable[ICOERecord], mode: str = "strict", threshold: float = 0.05) -> OperatorStats:
    """Tally every p-value-scored pair by operator and polarity.

    Polarity is recomputed from each stored constraint so one extraction run
    can be tabulated in both strict and compat modes.
    """
    if mode not in ("strict", "compat"):
        raise ValueError(f"unknown polarity mode: {mode!r}")
    rows = {op: OperatorRow(op=op) for op in OPERATOR_ORDER}
    for record in records:
        for pair in record.pairs:
            p = pair.effect.p_constraint
            if p is None:
                continue
            polarity = classify_polarity(p, threshold, compat=(mode == "compat"))
            row = rows[p.op]
            row.total += 1
            if polarity == assembly.POSITIVE:
                row.positive += 1
            elif polarity == assembly.NEGATIVE:
                row.negative += 1
            else:
                row.indeterminate += 1
    total = OperatorRow(op="total")
    for op in OPERATOR_ORDER:
        total.total += rows[op].total
        total.positive += rows[op].positive
        total.negative += rows[op].negative
        total.indeterminate += rows[op].indeterminate
    percentages = {
        "positive": _percentage(total.positive, total.total),
        "negative": _percentage(total.negative, total.total),
        "indeterminate": _percentage(total.indeterminate, total.total),
    }
    return OperatorStats(
        mode=mode,
        threshold=threshold,
        rows=[rows[op] for op in OPERATOR_ORDER],
        total=total,
        percentages=percentages,
    )


def render_operator_table(stats: OperatorStats) -> str:
    show_ind = stats.mode == "strict"
    header = f"{'Operator':<30}{'Count':>8}{'Positive':>10}{'Negative':>10}"
    if show_ind:
        header += f"{'Indet.':>8}"
    lines = [f"Positive/negative results by p-value ({stats.mode} mode, threshold {stats.threshold})", header]
    for row in stats.rows:
        line = f"{OPERATOR_LABELS[row.op]:<30}{row.total:>8}{row.positive:>10}{row.negative:>10}"
        if show_ind:
            line += f"{row.indeterminate:>8}"
        lines.append(line)
    t = stats.total
    pos = f"{t.positive} ({stats.percentages['positive']})"
    neg = f"{t.negative} ({stats.percentages['negative']})"
    line = f"{'Total':<30}{t.total:>8}{pos:>16}{neg:>16}"
    if show_ind:
        line += f"{t.indeterminate:>8}"
    lines.append(line)
    return "\n".join(lines)


@dataclass
class ProposedSpan:
    kind: str
    start: int
    end: int
    confidence: float
    status: str = "pending"


@dataclass
class ProposedDocument:
    id: str
    spans: list[ProposedSpan] = field(default_factory=list)
    design_sentence_index: int | None = None
    design_confidence: float | None = None


def selftrain_propose(models: ModelBundle, records: list[AbstractRecord]) -> list[ProposedDocument]:
    """Predict annotations over an unlabeled corpus, all statuses pending.

    Confidence is the classifier posterior for the design sentence and the
    mean perceptron margin for entity spans; spans use raw-text offsets so
    proposals mirror the gold annotation format.
    """
    proposals: list[ProposedDocument] = []
    for record in records:
        nt = textproc.normalize(record.body)
        sentences = textproc.split_sentences(nt)
        design_index = design_classifier.select_design_sentence(models.design, sentences)
        design_confidence = None
        scored: list[tuple[Entity, float]] = []
        if design_index is not None:
            _, design_confidence = design_classifier.classify(models.design, sentences[design_index])
            ic_scored = entity_tagger.tag_scored(models.ic, sentences[design_index], nt.text)
            confidences = {(e.start, e.end): c for e, c in ic_scored}
            reassigned = entity_tagger.reassign_comparator([e for e, _ in ic_scored], nt.text)
            scored.extend((e, confidences[(e.start, e.end)]) for e in reassigned)
        for sentence in sentences:
            scored.extend(entity_tagger.tag_scored(models.oe, sentence, nt.text))
        spans = []
        for entity, confidence in scored:
            rs, re_ = textproc.project_span(nt, entity.start, entity.end)
            spans.append(ProposedSpan(entity.kind, rs, re_, confidence))
        proposals.append(
            ProposedDocument(
                id=record.id,
                spans=spans,
                design_sentence_index=design_index,
                design_confidence=design_confidence,
            )
        )
    return proposals


def write_proposals(proposals: Iterable[ProposedDocument], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for prop in proposals:
            obj = {
                "id": prop.id,
                "spans": [
                    {
                        "kind": s.kind,
                        "start": s.start,
                        "end": s.end,
                        "confidence": s.confidence,
                        "status": s.status,
                    }
                    for s in prop.spans
                ],
                "design_sentence_index": prop.design_sentence_index,
                "design_confidence": prop.design_confidence,
            }
            fh.write(json.dumps(obj, ensure_ascii=False))
            fh.write("\n")


def read_proposals(path: str) -> list[ProposedDocument]:
    proposals = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from exc
            proposals.append(
                ProposedDocument(
                    id=obj["id"],
                    spans=[
                        ProposedSpan(
                            kind=s["kind"],
                            start=int(s["start"]),
                            end=int(s["end"]),
                            confidence=float(s.get("confidence", 0.0)),
                            status=s.get("status", "pending"),
                        )
                        for s in obj.get("spans", [])
                    ],
                    design_sentence_index=obj.get("design_sentence_index"),
                    design_confidence=obj.get("design_confidence"),
                )
            )
    return proposals


def accepted_documents(
    proposals: list[ProposedDocument], records: Iterable[AbstractRecord]
) -> list[AnnotatedDocument]:
    """Annotated documents built from accepted proposal spans only."""
    from .corpus import AnnotatedSpan

    by_id = {r.id: r for r in records}
    docs = []
    for prop in proposals:
        if prop.id not in by_id:
            raise CorpusError(f"proposal references unknown record id {prop.id!r}")
        doc = AnnotatedDocument(
            record=by_id[prop.id],
            spans=[
                AnnotatedSpan(kind=s.kind, start=s.start, end=s.end)
                for s in prop.spans
                if s.status == "accepted"
            ],
            design_sentence_index=prop.design_sentence_index,
        )
        findings = validate_annotations(doc)
        if findings:
            raise CorpusError(f"accepted proposal for {prop.id!r} is invalid: " + "; ".join(findings))
        docs.append(doc)
    return docs


def merge_training_sets(
    gold: list[AnnotatedDocument], accepted: list[AnnotatedDocument]
) -> list[tuple[AnnotatedDocument, str]]:
    """Concatenate gold and accepted proposal documents with source tags."""
    gold_ids = {d.record.id for d in gold}
    for doc in accepted:
        if doc.record.id in gold_ids:
            raise ValueError(f"document id collision between training sets: {doc.record.id!r}")
    return [(d, "gold") for d in gold] + [(d, "proposed") for d in accepted]
